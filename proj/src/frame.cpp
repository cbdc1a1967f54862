#include "talign/frame.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "talign/errors.hpp"
#include "talign/rng.hpp"

namespace talign {

Frame::Frame(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
    if (width <= 0 || height <= 0 || channels <= 0) {
        throw InputError("frame dimensions must be positive, got " + std::to_string(width) + "x" +
                         std::to_string(height) + "x" + std::to_string(channels));
    }
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

float Frame::clamped(int c, int x, int y) const {
    x = std::clamp(x, 0, width_ - 1);
    y = std::clamp(y, 0, height_ - 1);
    return data_[index(c, x, y)];
}

std::span<float> Frame::plane(int c) {
    return std::span<float>(data_).subspan(static_cast<std::size_t>(c) * plane_size(), plane_size());
}

std::span<const float> Frame::plane(int c) const {
    return std::span<const float>(data_).subspan(static_cast<std::size_t>(c) * plane_size(), plane_size());
}

bool Frame::same_shape(const Frame& other) const {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
}

bool Frame::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

Sequence::Sequence(std::vector<Frame> frames) : frames_(std::move(frames)) {
    if (frames_.size() < 3 || frames_.size() % 2 == 0) {
        throw InputError("sequence needs an odd number of frames >= 3, got " + std::to_string(frames_.size()));
    }
    for (const Frame& f : frames_) {
        if (!f.same_shape(frames_.front())) {
            throw DimensionError("sequence frames differ in dimensions: " + std::to_string(f.width()) + "x" +
                                 std::to_string(f.height()) + "x" + std::to_string(f.channels()) + " vs " +
                                 std::to_string(frames_.front().width()) + "x" +
                                 std::to_string(frames_.front().height()) + "x" +
                                 std::to_string(frames_.front().channels()));
        }
    }
}

const Frame& Sequence::at(int offset) const {
    const int n = neighbors();
    if (offset < -n || offset > n) throw std::out_of_range("sequence offset " + std::to_string(offset));
    return frames_[static_cast<std::size_t>(offset + n)];
}

Frame& Sequence::at(int offset) {
    return const_cast<Frame&>(std::as_const(*this).at(offset));
}

void require_same_shape(const Frame& a, const Frame& b, const char* what) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(what) + ": shape mismatch " + std::to_string(a.width()) + "x" +
                             std::to_string(a.height()) + "x" + std::to_string(a.channels()) + " vs " +
                             std::to_string(b.width()) + "x" + std::to_string(b.height()) + "x" +
                             std::to_string(b.channels()));
    }
}

Frame clamp01(const Frame& frame) {
    Frame out = frame;
    for (float& v : out.samples()) v = std::clamp(v, 0.0f, 1.0f);
    return out;
}

float sample_bilinear(const Frame& frame, int channel, float x, float y) {
    const float cx = std::clamp(x, 0.0f, static_cast<float>(frame.width() - 1));
    const float cy = std::clamp(y, 0.0f, static_cast<float>(frame.height() - 1));
    const int x0 = static_cast<int>(cx), y0 = static_cast<int>(cy);
    const int x1 = std::min(x0 + 1, frame.width() - 1), y1 = std::min(y0 + 1, frame.height() - 1);
    const float fx = cx - static_cast<float>(x0), fy = cy - static_cast<float>(y0);
    const float p00 = frame.at(channel, x0, y0), p10 = frame.at(channel, x1, y0);
    const float p01 = frame.at(channel, x0, y1), p11 = frame.at(channel, x1, y1);
    const float top = p00 + fx * (p10 - p00);
    const float bottom = p01 + fx * (p11 - p01);
    return top + fy * (bottom - top);
}

Frame rgb_to_luma(const Frame& rgb) {
    if (rgb.channels() != 3) {
        throw InputError("rgb_to_luma expects 3 channels, got " + std::to_string(rgb.channels()));
    }
    Frame luma(rgb.width(), rgb.height(), 1);
    const auto r = rgb.plane(0), g = rgb.plane(1), b = rgb.plane(2);
    auto y = luma.plane(0);
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = static_cast<float>(0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i]);
    }
    return luma;
}

Frame to_descriptor(const Frame& rgb) {
    if (rgb.channels() != 3) {
        throw InputError("to_descriptor expects 3 channels, got " + std::to_string(rgb.channels()));
    }
    const int w = rgb.width(), h = rgb.height();
    const Frame luma = rgb_to_luma(rgb);
    Frame out(w, h, 5);
    for (int c = 0; c < 3; ++c) std::ranges::copy(rgb.plane(c), out.plane(c).begin());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const float gx = 0.5f * (luma.clamped(0, x + 1, y) - luma.clamped(0, x - 1, y));
            const float gy = 0.5f * (luma.clamped(0, x, y + 1) - luma.clamped(0, x, y - 1));
            out.at(3, x, y) = 0.5f * std::abs(gx);
            out.at(4, x, y) = 0.5f * std::abs(gy);
        }
    }
    return out;
}

Frame leading_channels(const Frame& frame, int count) {
    if (count < 1 || count > frame.channels()) {
        throw InputError("cannot take " + std::to_string(count) + " channels of a " +
                         std::to_string(frame.channels()) + "-channel frame");
    }
    Frame out(frame.width(), frame.height(), count);
    for (int c = 0; c < count; ++c) std::ranges::copy(frame.plane(c), out.plane(c).begin());
    return out;
}

Frame add_gaussian_noise(const Frame& frame, const NoiseSpec& spec) {
    if (!(spec.sigma >= 0.0)) throw InputError("noise sigma must be >= 0");
    Frame out = frame;
    if (spec.sigma == 0.0) return out;
    const double scale = spec.sigma / 255.0;
    Xorshift64Star rng(spec.seed);
    for (float& v : out.samples()) v = static_cast<float>(v + scale * rng.normal());
    return out;
}

Frame box_blur(const Frame& frame, int radius) {
    if (radius < 0) throw InputError("blur radius must be >= 0");
    if (radius == 0) return frame;
    const int w = frame.width(), h = frame.height();
    const float norm = 1.0f / static_cast<float>(2 * radius + 1);
    Frame tmp(w, h, frame.channels());
    Frame out(w, h, frame.channels());
    for (int c = 0; c < frame.channels(); ++c) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                float acc = 0.0f;
                for (int d = -radius; d <= radius; ++d) acc += frame.clamped(c, x + d, y);
                tmp.at(c, x, y) = acc * norm;
            }
        }
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                float acc = 0.0f;
                for (int d = -radius; d <= radius; ++d) acc += tmp.clamped(c, x, y + d);
                out.at(c, x, y) = acc * norm;
            }
        }
    }
    return out;
}

}  // namespace talign
