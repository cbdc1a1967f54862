#include "pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "talign/errors.hpp"
#include "talign/eval.hpp"
#include "talign/parallel.hpp"
#include "talign/rng.hpp"
#include "talign/synth.hpp"
#include "talign/warp.hpp"

namespace talign::cli {

Restoration restore(const Sequence& sequence, const RestoreConfig& config, const GroundTruth* ground_truth) {
    std::vector<Frame> descriptors;
    descriptors.reserve(sequence.frames().size());
    for (const Frame& f : sequence.frames()) descriptors.push_back(to_descriptor(f));

    Restoration out;
    out.alignment = run(Sequence(std::move(descriptors)), config.schedule, ground_truth);

    std::vector<Frame> set;
    for (const auto& [k, chain] : out.alignment.chains) {
        Frame warped = apply_chain(sequence.at(k), chain);
        set.push_back(warped);
        out.aligned.emplace(k, std::move(warped));
    }
    if (config.fusion_kind == FusionKind::Mean) {
        out.restored = mean_fuse(sequence.reference(), set);
    } else {
        FusionResult fused = arw_fuse(sequence.reference(), set, config.fusion);
        out.restored = std::move(fused.fused);
        out.fusion_diagnostics = std::move(fused.diagnostics);
    }
    return out;
}

namespace {

SynthSpec bench_spec(const BenchConfig& config, double bin, int seed_index) {
    const double a = config.direction_degrees * std::numbers::pi / 180.0;
    SynthSpec spec;
    spec.width = spec.height = config.size;
    spec.neighbors = config.neighbors;
    spec.motion = motion_model::Constant{{static_cast<float>(bin * std::cos(a)), static_cast<float>(bin * std::sin(a))}};
    spec.texture_cutoff = config.cutoff;
    // Seeds depend on the seed index only, so every bin and schedule sees the
    // same textures and noise.
    const auto s = static_cast<std::uint64_t>(seed_index);
    spec.texture_seed = derive_seed(config.master_seed, 2 * s);
    spec.noise = {config.sigma, derive_seed(config.master_seed, 2 * s + 1)};
    return spec;
}

struct CellSample {
    double psnr_aligned = 0.0;
    double psnr_restored = 0.0;
    double epe_mean = 0.0;
    double epe_p90 = 0.0;
};

}  // namespace

void BenchConfig::validate() const {
    if (bins.empty()) throw InputError("bench needs at least one bin");
    if (schedules.empty() || fusions.empty()) throw InputError("bench needs at least one schedule and fusion");
    if (seeds < 1) throw InputError("bench needs at least one seed");
    if (crop < 0 || 2 * crop >= size) throw InputError("bench crop leaves no interior");
    for (double bin : bins) {
        if (!std::isfinite(bin) || bin <= 0.0) throw InputError("invalid bin " + std::to_string(bin) + ": must be > 0");
        try {
            bench_spec(*this, bin, 0).validate();
        } catch (const InputError& e) {
            throw InputError("invalid bin " + std::to_string(bin) + ": " + e.what());
        }
    }
    motion.validate();
    fusion.validate();
}

std::vector<BenchRow> run_bench(const BenchConfig& config, int workers) {
    config.validate();
    const std::size_t combos = config.schedules.size() * config.fusions.size();
    const std::size_t seeds = static_cast<std::size_t>(config.seeds);
    const std::size_t jobs = config.bins.size() * seeds;
    std::vector<std::vector<CellSample>> samples(jobs);

    parallel_for(jobs, workers, [&](std::size_t job) {
        const double bin = config.bins[job / seeds];
        const SynthOutput data = generate(bench_spec(config, bin, static_cast<int>(job % seeds)));
        std::vector<CellSample>& slot = samples[job];
        slot.resize(combos);
        for (std::size_t si = 0; si < config.schedules.size(); ++si) {
            for (std::size_t fi = 0; fi < config.fusions.size(); ++fi) {
                RestoreConfig rc;
                rc.schedule.kind = config.schedules[si];
                rc.schedule.motion = config.motion;
                rc.fusion = config.fusion;
                rc.fusion_kind = config.fusions[fi];
                const Restoration r = restore(data.sequence, rc);

                CellSample& cell = slot[si * config.fusions.size() + fi];
                const double count = static_cast<double>(r.alignment.chains.size());
                for (const auto& [k, chain] : r.alignment.chains) {
                    const Frame warped = apply_chain(data.clean.at(k), chain);
                    cell.psnr_aligned += psnr_interior(warped, data.clean_reference, config.crop) / count;
                    const EndpointError e =
                        endpoint_error(chain_displacement(chain), data.gt_long_fields.at(k), config.crop);
                    cell.epe_mean += e.mean / count;
                    cell.epe_p90 += e.p90 / count;
                }
                cell.psnr_restored = psnr_interior(r.restored, data.clean_reference, config.crop);
            }
        }
    });

    std::vector<BenchRow> rows;
    for (std::size_t b = 0; b < config.bins.size(); ++b) {
        for (std::size_t si = 0; si < config.schedules.size(); ++si) {
            for (std::size_t fi = 0; fi < config.fusions.size(); ++fi) {
                BenchRow row{config.bins[b], config.schedules[si], config.fusions[fi]};
                for (std::size_t s = 0; s < seeds; ++s) {
                    const CellSample& c = samples[b * seeds + s][si * config.fusions.size() + fi];
                    row.psnr_aligned += c.psnr_aligned;
                    row.psnr_restored += c.psnr_restored;
                    row.epe_mean += c.epe_mean;
                    row.epe_p90 += c.epe_p90;
                }
                const double n = static_cast<double>(seeds);
                row.psnr_aligned /= n;
                row.psnr_restored /= n;
                row.epe_mean /= n;
                row.epe_p90 /= n;
                rows.push_back(row);
            }
        }
    }
    return rows;
}

std::string format_bench(const std::vector<BenchRow>& rows, bool csv) {
    std::ostringstream out;
    char line[256];
    if (csv) {
        out << "bin,schedule,fusion,psnr_aligned,psnr_restored,epe_mean,epe_p90\n";
    } else {
        std::snprintf(line, sizeof line, "%6s  %-11s  %-6s  %12s  %13s  %8s  %8s\n", "bin", "schedule", "fusion",
                      "psnr_aligned", "psnr_restored", "epe_mean", "epe_p90");
        out << line;
    }
    for (const BenchRow& r : rows) {
        const std::string schedule(to_string(r.schedule));
        const std::string fusion = to_string(r.fusion);
        const char* fmt = csv ? "%g,%s,%s,%.4f,%.4f,%.4f,%.4f\n" : "%6g  %-11s  %-6s  %12.4f  %13.4f  %8.4f  %8.4f\n";
        std::snprintf(line, sizeof line, fmt, r.bin, schedule.c_str(), fusion.c_str(), r.psnr_aligned,
                      r.psnr_restored, r.epe_mean, r.epe_p90);
        out << line;
    }
    return out.str();
}

std::string to_string(FusionKind kind) { return kind == FusionKind::Mean ? "mean" : "arw"; }

std::optional<FusionKind> parse_fusion(const std::string& name) {
    if (name == "arw") return FusionKind::Arw;
    if (name == "mean") return FusionKind::Mean;
    return std::nullopt;
}

}  // namespace talign::cli
