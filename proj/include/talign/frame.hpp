#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace talign {

/// Planar multi-channel float image. Samples are stored channel-major, then
/// row-major: sample(c, x, y) lives at (c * height + y) * width + x.
/// Nominal range is [0, 1] but values outside it are allowed (noise is added
/// before any clamping).
class Frame {
public:
    Frame() = default;
    Frame(int width, int height, int channels, float fill = 0.0f);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    std::size_t plane_size() const { return static_cast<std::size_t>(width_) * height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    float& at(int c, int x, int y) { return data_[index(c, x, y)]; }
    float at(int c, int x, int y) const { return data_[index(c, x, y)]; }

    // Read with coordinates clamped to the image edge.
    float clamped(int c, int x, int y) const;

    std::span<float> plane(int c);
    std::span<const float> plane(int c) const;
    std::span<float> samples() { return data_; }
    std::span<const float> samples() const { return data_; }

    bool same_shape(const Frame& other) const;
    bool all_finite() const;

    friend bool operator==(const Frame&, const Frame&) = default;

private:
    std::size_t index(int c, int x, int y) const {
        return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<float> data_;
};

/// 2N+1 frames indexed -N..N around the reference at offset 0.
class Sequence {
public:
    Sequence() = default;
    explicit Sequence(std::vector<Frame> frames);

    int neighbors() const { return static_cast<int>(frames_.size() / 2); }
    int size() const { return static_cast<int>(frames_.size()); }

    const Frame& at(int offset) const;
    Frame& at(int offset);
    const Frame& reference() const { return at(0); }

    const std::vector<Frame>& frames() const { return frames_; }

private:
    std::vector<Frame> frames_;
};

struct NoiseSpec {
    double sigma = 0.0;  // on the 0-255 scale
    std::uint64_t seed = 0;
};

void require_same_shape(const Frame& a, const Frame& b, const char* what);

Frame clamp01(const Frame& frame);

// Bilinear sample of one channel with coordinates clamped to the image.
// Integer coordinates return the stored sample exactly.
float sample_bilinear(const Frame& frame, int channel, float x, float y);

// BT.601 full-range luma.
Frame rgb_to_luma(const Frame& rgb);

/// Hand-crafted 5-channel descriptor: [R, G, B, |dL/dx|/2, |dL/dy|/2] with
/// central differences on the luma and replicated borders.
Frame to_descriptor(const Frame& rgb);

// Keeps the first `count` channels.
Frame leading_channels(const Frame& frame, int count);

/// Adds i.i.d. N(0, (sigma/255)^2) to every sample. Draw order is plane by
/// plane, row-major, from a single Xorshift64Star seeded with spec.seed.
/// The result is not clamped.
Frame add_gaussian_noise(const Frame& frame, const NoiseSpec& spec);

// Separable box filter of half-width `radius`, replicated borders.
Frame box_blur(const Frame& frame, int radius);

}  // namespace talign
