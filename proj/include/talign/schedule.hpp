#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "talign/frame.hpp"
#include "talign/motion.hpp"

namespace talign {

enum class ScheduleKind { Independent, Progressive, Iterative };

std::string_view to_string(ScheduleKind kind);
std::optional<ScheduleKind> parse_schedule(std::string_view name);

/// One execution of sub-alignment a_i (frame i -> frame i - sign(i)) inside the
/// long-range alignment A_k. Signs of i and k give the temporal side.
/// For Independent plans i == k and the execution is a direct k -> 0 estimate.
struct SubAlignmentExec {
    int i = 0;
    int k = 0;
    int t = 1;  // 1-based refinement counter of index i

    int side() const { return k > 0 ? 1 : -1; }
    friend bool operator==(const SubAlignmentExec&, const SubAlignmentExec&) = default;
};

struct ExecutionPlan {
    ScheduleKind kind = ScheduleKind::Iterative;
    int neighbors = 0;
    std::vector<SubAlignmentExec> execs;
};

/// Builds the execution order. Positive side first, then negative; within a
/// side A_1..A_N; within A_k (iterative) i runs k..1 with t = |k| + 1 - |i|.
/// Sizes: Iterative N(N+1), Progressive and Independent 2N.
ExecutionPlan plan(ScheduleKind kind, int neighbors);

struct ScheduleOptions {
    ScheduleKind kind = ScheduleKind::Iterative;
    MotionParams motion;
    // Iterative only: never refine a stored field; every re-execution of a_i
    // reuses its first estimate. Makes the run identical to Progressive.
    bool use_prior = true;
    // Iterative only: cap on refinements (t > 1 estimates) per index.
    // Executions past the cap reuse the stored field. Negative = unlimited.
    int max_refines_per_index = -1;
};

struct ExecRecord {
    SubAlignmentExec exec;
    bool estimated = false;   // false when a stored field was reused
    bool used_prior = false;
    double mean_cost = 0.0;   // mean integer-stage block cost
    std::optional<double> epe;
    std::vector<BlockMatch> blocks;
};

// Latest field per sub-alignment index and how many times it was estimated.
struct SubAlignmentState {
    std::map<int, MotionField> fields;
    std::map<int, int> refinements;
};

struct AlignmentOutput {
    std::map<int, Frame> aligned;                        // k -> F^_k^0
    std::map<int, std::vector<MotionField>> chains;      // k -> hop fields, applied in order
    std::map<int, MotionField> final_fields;             // i -> latest h_i
    std::map<int, int> refinements;                      // i -> number of executions of a_i
    std::vector<ExecRecord> diagnostics;
};

/// Optional ground truth for per-execution EPE: hop fields keyed by signed
/// sub-alignment index, long-range fields keyed by k (used for Independent).
struct GroundTruth {
    std::map<int, MotionField> hop_fields;
    std::map<int, MotionField> long_fields;
    int border_crop = 16;
};

/// Aligns every neighbor of `sequence` (descriptor frames) onto the reference.
/// Sides are processed independently and may run concurrently.
AlignmentOutput run(const Sequence& sequence, const ScheduleOptions& options,
                    const GroundTruth* ground_truth = nullptr);

// `exec side=+ i=1 k=2 t=2 cost=0.012345 epe=0.1234`
std::string format_exec(const ExecRecord& record);

}  // namespace talign
