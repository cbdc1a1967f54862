#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "talign/frame.hpp"
#include "talign/motion.hpp"

namespace talign {

inline constexpr double kPsnrCap = 99.0;

// Inputs are clamped to [0, 1]. Returns kPsnrCap when MSE < 1e-10.
double psnr(const Frame& a, const Frame& b, double peak = 1.0);

// PSNR over the interior after removing `crop` pixels on each side.
double psnr_interior(const Frame& a, const Frame& b, int crop, double peak = 1.0);

/// Single-scale SSIM on 1-channel frames: 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, L = 1, averaged over fully covered window positions.
double ssim(const Frame& a, const Frame& b);

struct EndpointError {
    double mean = 0.0;
    double p90 = 0.0;
};

// Nearest-rank 90th percentile over the interior.
EndpointError endpoint_error(const MotionField& field, const MotionField& gt, int border_crop = 16);

// Row `row` of each frame stacked into a width x frames.size() image.
Frame temporal_profile(const std::vector<Frame>& frames, int row);

// `metric name=<name> value=<v>` with 4 decimals.
std::string format_metric(std::string_view name, double value);

}  // namespace talign
