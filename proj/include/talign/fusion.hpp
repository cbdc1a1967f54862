#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "talign/frame.hpp"

namespace talign {

enum class ConsistencyReduce { Channelwise, Pixelwise };

std::optional<ConsistencyReduce> parse_consistency_reduce(std::string_view name);

struct FusionParams {
    double alpha = -1.0;
    double norm_epsilon = 1e-8;
    bool include_reference = true;
    double reference_weight = 1.0;
    ConsistencyReduce consistency_reduce = ConsistencyReduce::Channelwise;
    // Whether the consistency average also contains the reference frame.
    bool average_includes_reference = false;

    void validate() const;
};

/// Per-pixel 3x3 softmax stencils. Tap n corresponds to
/// (dx, dy) = (n % 3 - 1, n / 3 - 1).
class WeightMap {
public:
    static constexpr int kTaps = 9;

    WeightMap() = default;
    WeightMap(int width, int height);

    int width() const { return width_; }
    int height() const { return height_; }

    float& at(int x, int y, int tap) { return data_[index(x, y, tap)]; }
    float at(int x, int y, int tap) const { return data_[index(x, y, tap)]; }

    // Tap plane as a 1-channel frame (for dumps).
    Frame tap_plane(int tap) const;

private:
    std::size_t index(int x, int y, int tap) const {
        return (static_cast<std::size_t>(y) * width_ + x) * kTaps + tap;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<float> data_;
};

// Same shape as the aligned frame; values in (0, 1].
using ConsistencyMap = Frame;

struct AccuracyResult {
    WeightMap weights;
    Frame reweighted;
};

/// Accuracy-based re-weighting. For each pixel, cosine similarities between
/// the reference vector and the 9 aligned vectors of the surrounding 3x3 patch
/// (edge-clamped) are softmax-normalized and used to average that patch.
AccuracyResult accuracy_reweight(const Frame& reference, const Frame& aligned, const FusionParams& params);

/// Consistency gains C_k = exp(alpha * (F^_k - avg)^2) against the mean of the
/// aligned set (optionally including `reference`).
std::vector<ConsistencyMap> consistency_maps(std::span<const Frame> aligned_set, const FusionParams& params,
                                             const Frame* reference = nullptr);

struct FusionDiagnostics {
    std::vector<double> mean_consistency;  // per aligned frame
    std::vector<WeightMap> weights;
    std::vector<ConsistencyMap> consistency;
};

struct FusionResult {
    Frame fused;
    FusionDiagnostics diagnostics;
};

/// Adaptive re-weighting fusion:
///   out = (w_ref * F_0 + sum_k Fbar_k * C_k) / (w_ref + sum_k C_k)
/// where Fbar_k is the accuracy-reweighted frame and C_k is computed from the
/// un-reweighted aligned frame.
FusionResult arw_fuse(const Frame& reference, std::span<const Frame> aligned_set, const FusionParams& params);

// Elementwise mean over {reference} and the aligned set.
Frame mean_fuse(const Frame& reference, std::span<const Frame> aligned_set);

// Writes weight taps and per-channel consistency planes as grayscale PNGs.
void dump_fusion_diagnostics(const FusionDiagnostics& diagnostics, std::span<const int> offsets,
                             const std::filesystem::path& directory);

}  // namespace talign
