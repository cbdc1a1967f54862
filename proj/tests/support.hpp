#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "talign/frame.hpp"
#include "talign/rng.hpp"

namespace support {

// Uniform random frame in [lo, hi).
inline talign::Frame random_frame(int w, int h, int channels, std::uint64_t seed, float lo = 0.0f, float hi = 1.0f) {
    talign::Frame f(w, h, channels);
    talign::Xorshift64Star rng(seed);
    for (float& s : f.samples()) s = lo + (hi - lo) * static_cast<float>(rng.uniform());
    return f;
}

// out(x, y) = in(x + dx, y + dy) with edge clamping.
inline talign::Frame shifted(const talign::Frame& in, int dx, int dy) {
    talign::Frame out(in.width(), in.height(), in.channels());
    for (int c = 0; c < in.channels(); ++c)
        for (int y = 0; y < in.height(); ++y)
            for (int x = 0; x < in.width(); ++x) out.at(c, x, y) = in.clamped(c, x + dx, y + dy);
    return out;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("talign_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace support
