#include "talign/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "talign/errors.hpp"
#include "talign/image_io.hpp"

namespace fs = std::filesystem;

namespace talign {

std::optional<ConsistencyReduce> parse_consistency_reduce(std::string_view name) {
    if (name == "channelwise") return ConsistencyReduce::Channelwise;
    if (name == "pixelwise") return ConsistencyReduce::Pixelwise;
    return std::nullopt;
}

void FusionParams::validate() const {
    if (!(alpha <= 0.0)) throw InputError("fusion alpha must be <= 0");
    if (!(norm_epsilon > 0.0)) throw InputError("fusion norm_epsilon must be > 0");
    if (!(reference_weight >= 0.0)) throw InputError("fusion reference_weight must be >= 0");
}

WeightMap::WeightMap(int width, int height)
    : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height * kTaps, 0.0f) {}

Frame WeightMap::tap_plane(int tap) const {
    Frame out(width_, height_, 1);
    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) out.at(0, x, y) = at(x, y, tap);
    }
    return out;
}

namespace {

void require_set(std::span<const Frame> set, std::size_t minimum, const char* what) {
    if (set.size() < minimum) {
        throw InputError(std::string(what) + ": need at least " + std::to_string(minimum) + " aligned frames, got " +
                         std::to_string(set.size()));
    }
    for (const Frame& f : set) require_same_shape(f, set.front(), what);
}

}  // namespace

AccuracyResult accuracy_reweight(const Frame& reference, const Frame& aligned, const FusionParams& params) {
    params.validate();
    require_same_shape(reference, aligned, "accuracy_reweight");
    if (aligned.channels() < 2) throw InputError("accuracy_reweight: cosine similarity needs >= 2 channels");

    const int w = aligned.width(), h = aligned.height(), nc = aligned.channels();
    const double eps = params.norm_epsilon;

    // Unit vectors of the aligned frame, computed once per pixel.
    std::vector<double> unit(static_cast<std::size_t>(w) * h * nc);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double norm2 = 0.0;
            for (int c = 0; c < nc; ++c) norm2 += double(aligned.at(c, x, y)) * aligned.at(c, x, y);
            const double inv = 1.0 / (std::sqrt(norm2) + eps);
            for (int c = 0; c < nc; ++c) {
                unit[(static_cast<std::size_t>(y) * w + x) * nc + c] = aligned.at(c, x, y) * inv;
            }
        }
    }

    AccuracyResult result{WeightMap(w, h), Frame(w, h, nc)};
    std::vector<double> v0(static_cast<std::size_t>(nc));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double norm2 = 0.0;
            for (int c = 0; c < nc; ++c) {
                v0[c] = reference.at(c, x, y);
                norm2 += v0[c] * v0[c];
            }
            const double inv = 1.0 / (std::sqrt(norm2) + eps);

            double sim[WeightMap::kTaps];
            int sx[WeightMap::kTaps], sy[WeightMap::kTaps];
            double peak = -1e300;
            for (int tap = 0; tap < WeightMap::kTaps; ++tap) {
                sx[tap] = std::clamp(x + tap % 3 - 1, 0, w - 1);
                sy[tap] = std::clamp(y + tap / 3 - 1, 0, h - 1);
                const double* u = &unit[(static_cast<std::size_t>(sy[tap]) * w + sx[tap]) * nc];
                double dot = 0.0;
                for (int c = 0; c < nc; ++c) dot += u[c] * v0[c];
                sim[tap] = dot * inv;
                peak = std::max(peak, sim[tap]);
            }
            double total = 0.0;
            for (double& s : sim) total += (s = std::exp(s - peak));
            for (int tap = 0; tap < WeightMap::kTaps; ++tap) {
                result.weights.at(x, y, tap) = static_cast<float>(sim[tap] / total);
            }
            for (int c = 0; c < nc; ++c) {
                double acc = 0.0;
                for (int tap = 0; tap < WeightMap::kTaps; ++tap) {
                    acc += sim[tap] / total * aligned.at(c, sx[tap], sy[tap]);
                }
                result.reweighted.at(c, x, y) = static_cast<float>(acc);
            }
        }
    }
    return result;
}

std::vector<ConsistencyMap> consistency_maps(std::span<const Frame> aligned_set, const FusionParams& params,
                                             const Frame* reference) {
    params.validate();
    require_set(aligned_set, 2, "consistency_maps");
    const Frame& first = aligned_set.front();
    if (reference != nullptr) require_same_shape(*reference, first, "consistency_maps");

    const std::size_t n = first.size();
    std::vector<double> avg(n, 0.0);
    std::size_t count = 0;
    auto accumulate = [&](const Frame& f) {
        const auto s = f.samples();
        for (std::size_t i = 0; i < n; ++i) avg[i] += s[i];
        ++count;
    };
    for (const Frame& f : aligned_set) accumulate(f);
    if (reference != nullptr && params.average_includes_reference) accumulate(*reference);
    for (double& v : avg) v /= static_cast<double>(count);

    const std::size_t plane = first.plane_size();
    const int nc = first.channels();
    std::vector<ConsistencyMap> maps;
    maps.reserve(aligned_set.size());
    for (const Frame& f : aligned_set) {
        ConsistencyMap c(f.width(), f.height(), nc);
        const auto s = f.samples();
        auto out = c.samples();
        if (params.consistency_reduce == ConsistencyReduce::Channelwise) {
            for (std::size_t i = 0; i < n; ++i) {
                const double d = s[i] - avg[i];
                out[i] = static_cast<float>(std::exp(params.alpha * d * d));
            }
        } else {
            for (std::size_t p = 0; p < plane; ++p) {
                double d2 = 0.0;
                for (int ch = 0; ch < nc; ++ch) {
                    const double d = s[ch * plane + p] - avg[ch * plane + p];
                    d2 += d * d;
                }
                const auto g = static_cast<float>(std::exp(params.alpha * d2));
                for (int ch = 0; ch < nc; ++ch) out[ch * plane + p] = g;
            }
        }
        maps.push_back(std::move(c));
    }
    return maps;
}

FusionResult arw_fuse(const Frame& reference, std::span<const Frame> aligned_set, const FusionParams& params) {
    params.validate();
    require_set(aligned_set, 2, "arw_fuse");
    require_same_shape(reference, aligned_set.front(), "arw_fuse");

    FusionResult result;
    result.diagnostics.consistency = consistency_maps(aligned_set, params, &reference);

    const std::size_t n = reference.size();
    const double ref_weight = params.include_reference ? params.reference_weight : 0.0;
    std::vector<double> numerator(n), denominator(n, ref_weight);
    const auto ref = reference.samples();
    for (std::size_t i = 0; i < n; ++i) numerator[i] = ref_weight * ref[i];

    for (std::size_t k = 0; k < aligned_set.size(); ++k) {
        AccuracyResult acc = accuracy_reweight(reference, aligned_set[k], params);
        const auto fbar = acc.reweighted.samples();
        const auto gain = result.diagnostics.consistency[k].samples();
        double gain_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            numerator[i] += double(fbar[i]) * gain[i];
            denominator[i] += gain[i];
            gain_sum += gain[i];
        }
        result.diagnostics.mean_consistency.push_back(gain_sum / static_cast<double>(n));
        result.diagnostics.weights.push_back(std::move(acc.weights));
    }

    result.fused = Frame(reference.width(), reference.height(), reference.channels());
    auto out = result.fused.samples();
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(numerator[i] / denominator[i]);
    return result;
}

Frame mean_fuse(const Frame& reference, std::span<const Frame> aligned_set) {
    for (const Frame& f : aligned_set) require_same_shape(reference, f, "mean_fuse");
    const std::size_t n = reference.size();
    std::vector<double> sum(reference.samples().begin(), reference.samples().end());
    for (const Frame& f : aligned_set) {
        const auto s = f.samples();
        for (std::size_t i = 0; i < n; ++i) sum[i] += s[i];
    }
    Frame out(reference.width(), reference.height(), reference.channels());
    const double count = static_cast<double>(aligned_set.size() + 1);
    auto o = out.samples();
    for (std::size_t i = 0; i < n; ++i) o[i] = static_cast<float>(sum[i] / count);
    return out;
}

void dump_fusion_diagnostics(const FusionDiagnostics& diagnostics, std::span<const int> offsets,
                             const fs::path& directory) {
    fs::create_directories(directory);
    for (std::size_t j = 0; j < diagnostics.weights.size() && j < offsets.size(); ++j) {
        const std::string tag = "k" + std::string(offsets[j] > 0 ? "+" : "") + std::to_string(offsets[j]);
        for (int tap = 0; tap < WeightMap::kTaps; ++tap) {
            save_frame(diagnostics.weights[j].tap_plane(tap),
                       directory / ("weight_" + tag + "_tap" + std::to_string(tap) + ".png"));
        }
        const ConsistencyMap& c = diagnostics.consistency[j];
        for (int ch = 0; ch < c.channels(); ++ch) {
            Frame plane(c.width(), c.height(), 1);
            std::ranges::copy(c.plane(ch), plane.plane(0).begin());
            save_frame(plane, directory / ("consistency_" + tag + "_c" + std::to_string(ch) + ".png"));
        }
    }
}

}  // namespace talign
