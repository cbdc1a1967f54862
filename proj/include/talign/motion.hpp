#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "talign/frame.hpp"

namespace talign {

struct Vec2 {
    float x = 0.0f;
    float y = 0.0f;

    friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// Dense backward-mapping displacement field:
/// aligned(x, y) = source(x + dx(x, y), y + dy(x, y)).
class MotionField {
public:
    MotionField() = default;
    MotionField(int width, int height, Vec2 fill = {});

    int width() const { return width_; }
    int height() const { return height_; }

    Vec2 at(int x, int y) const;
    void set(int x, int y, Vec2 v);

    // Bilinear sample with edge clamping.
    Vec2 sample(float x, float y) const;

    std::span<float> dx() { return dx_; }
    std::span<const float> dx() const { return dx_; }
    std::span<float> dy() { return dy_; }
    std::span<const float> dy() const { return dy_; }

    bool same_shape(const MotionField& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }
    bool same_shape(const Frame& frame) const {
        return width_ == frame.width() && height_ == frame.height();
    }

    float max_abs_component() const;
    bool all_finite() const;

    friend bool operator==(const MotionField&, const MotionField&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<float> dx_;
    std::vector<float> dy_;
};

struct MotionParams {
    int block_size = 8;
    int search_radius = 12;
    int lk_iterations = 5;
    int lk_window = 7;
    int pyramid_levels = 3;
    // Strength of the pull toward a prior field during subpixel refinement;
    // 0 uses the prior only to center the integer search.
    double prior_weight = 1.0;
    // Hard bound on |dx|, |dy| of any estimated vector.
    float max_displacement = 128.0f;

    void validate() const;
};

struct BlockOrigin {
    int x = 0;
    int y = 0;
};

/// Per-block record of the integer (block-matching) stage.
struct BlockMatch {
    BlockOrigin origin;
    Vec2 vector;           // winning displacement
    double cost = 0.0;     // block_cost at `vector`
    bool from_prior = false;
    // Prior representative for this block and its cost; NaN without prior.
    Vec2 prior_vector;
    double prior_cost = 0.0;
};

struct MotionEstimate {
    MotionField field;
    std::vector<BlockMatch> blocks;

    double mean_block_cost() const;
};

/// Block origins tiling the frame; the last row/column is shifted inward so
/// every block lies fully inside the frame.
std::vector<int> block_starts(int extent, int block_size);

/// Mean absolute difference over block_size^2 pixels and all channels between
/// target's block and source displaced by `displacement`. Non-integer
/// displacements are sampled bilinearly; source reads clamp to the edge.
double block_cost(const Frame& source, const Frame& target, BlockOrigin origin, Vec2 displacement,
                  const MotionParams& params);

/// Dense motion from `target`'s grid into `source`.
///
/// Exhaustive integer block matching within +-search_radius is followed by
/// bilinear upsampling of block-center vectors and a per-pixel pyramidal
/// Lucas-Kanade polish.
///
/// With a prior, each block's window is centered on the rounded block-median
/// of the prior and the median itself is an extra candidate, so the integer
/// stage never scores worse than the prior on any block. The polish then adds
/// a quadratic pull toward the prior of strength `prior_weight`.
MotionEstimate estimate_motion(const Frame& source, const Frame& target, const MotionParams& params,
                               const MotionField* prior = nullptr);

/// Scores an existing field block by block: each block is represented by the
/// median of the field over it, exactly as a prior would be.
std::vector<BlockMatch> score_field(const Frame& source, const Frame& target, const MotionField& field,
                                    const MotionParams& params);

MotionField estimate(const Frame& source, const Frame& target, const MotionParams& params,
                     const std::optional<MotionField>& prior = std::nullopt);

// Binary format: "MFLD", u32 width, u32 height, f32 dx plane, f32 dy plane,
// all little-endian.
void write_field(const MotionField& field, const std::filesystem::path& path);
MotionField read_field(const std::filesystem::path& path);

}  // namespace talign
