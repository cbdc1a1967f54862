#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "talign/fusion.hpp"
#include "talign/schedule.hpp"

namespace talign::cli {

enum class FusionKind { Arw, Mean };

struct RestoreConfig {
    ScheduleOptions schedule;
    FusionParams fusion;
    FusionKind fusion_kind = FusionKind::Arw;
};

struct Restoration {
    AlignmentOutput alignment;
    std::map<int, Frame> aligned;  // k -> RGB neighbor warped onto the reference
    Frame restored;
    std::optional<FusionDiagnostics> fusion_diagnostics;  // ARW only
};

/// Aligns descriptor frames of `sequence`, warps the RGB neighbors along the
/// resulting chains and fuses them with the reference.
Restoration restore(const Sequence& sequence, const RestoreConfig& config, const GroundTruth* ground_truth = nullptr);

struct BenchConfig {
    std::vector<double> bins{1, 2, 4, 6, 8, 10};
    std::vector<ScheduleKind> schedules{ScheduleKind::Independent, ScheduleKind::Progressive, ScheduleKind::Iterative};
    std::vector<FusionKind> fusions{FusionKind::Arw};
    int seeds = 20;
    std::uint64_t master_seed = 1;
    int size = 128;
    int neighbors = 2;
    double sigma = 10.0;
    double cutoff = 0.25;
    double direction_degrees = 0.0;  // motion direction, 0 = +x
    int crop = 16;
    MotionParams motion;
    FusionParams fusion;
    // Throws InputError on bins that are not positive or break the synth bounds.
    void validate() const;
};

struct BenchRow {
    double bin = 0.0;
    ScheduleKind schedule = ScheduleKind::Iterative;
    FusionKind fusion = FusionKind::Arw;
    double psnr_aligned = 0.0;   // clean neighbors warped by the estimated chains vs clean reference
    double psnr_restored = 0.0;  // fused degraded frames vs clean reference
    double epe_mean = 0.0;       // long-range alignment EPE against ground truth
    double epe_p90 = 0.0;
};

// One row per bin x schedule x fusion, averaged over seeds, in config order.
std::vector<BenchRow> run_bench(const BenchConfig& config, int workers);

std::string format_bench(const std::vector<BenchRow>& rows, bool csv);

std::string to_string(FusionKind kind);
std::optional<FusionKind> parse_fusion(const std::string& name);

}  // namespace talign::cli
