#include "talign/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "talign/errors.hpp"

namespace talign {

namespace {

double psnr_from_mse(double mse, double peak) {
    if (mse < 1e-10) return kPsnrCap;
    return 10.0 * std::log10(peak * peak / mse);
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// "Valid" separable correlation of a w x h plane with a 1D kernel.
std::vector<double> filter_valid(const std::vector<double>& in, int w, int h, const std::vector<double>& k) {
    const int r = static_cast<int>(k.size());
    const int ow = w - r + 1, oh = h - r + 1;
    std::vector<double> tmp(static_cast<std::size_t>(ow) * h), out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < r; ++i) acc += k[i] * in[static_cast<std::size_t>(y) * w + x + i];
            tmp[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    }
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < r; ++i) acc += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    }
    return out;
}

}  // namespace

double psnr(const Frame& a, const Frame& b, double peak) {
    return psnr_interior(a, b, 0, peak);
}

double psnr_interior(const Frame& a, const Frame& b, int crop, double peak) {
    require_same_shape(a, b, "psnr");
    if (crop < 0 || 2 * crop >= a.width() || 2 * crop >= a.height()) {
        throw InputError("psnr: crop of " + std::to_string(crop) + " leaves no pixels");
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (int c = 0; c < a.channels(); ++c) {
        for (int y = crop; y < a.height() - crop; ++y) {
            for (int x = crop; x < a.width() - crop; ++x) {
                const double d = clamp01(a.at(c, x, y)) - clamp01(b.at(c, x, y));
                sum += d * d;
                ++count;
            }
        }
    }
    return psnr_from_mse(sum / static_cast<double>(count), peak);
}

double ssim(const Frame& a, const Frame& b) {
    require_same_shape(a, b, "ssim");
    if (a.channels() != 1) throw InputError("ssim expects single-channel input (convert with rgb_to_luma)");
    constexpr int kWindow = 11;
    constexpr double kSigma = 1.5;
    if (a.width() < kWindow || a.height() < kWindow) throw InputError("ssim: input smaller than 11x11");

    std::vector<double> kernel(kWindow);
    double ksum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double d = i - kWindow / 2;
        kernel[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        ksum += kernel[i];
    }
    for (double& v : kernel) v /= ksum;

    const int w = a.width(), h = a.height();
    const std::size_t n = a.plane_size();
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    const auto pa = a.plane(0), pb = b.plane(0);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = clamp01(pa[i]);
        y[i] = clamp01(pb[i]);
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, w, h, kernel), my = filter_valid(y, w, h, kernel);
    const auto sxx = filter_valid(xx, w, h, kernel), syy = filter_valid(yy, w, h, kernel);
    const auto sxy = filter_valid(xy, w, h, kernel);

    constexpr double c1 = (0.01 * 1.0) * (0.01 * 1.0);
    constexpr double c2 = (0.03 * 1.0) * (0.03 * 1.0);
    double total = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
        const double vx = sxx[i] - mx[i] * mx[i];
        const double vy = syy[i] - my[i] * my[i];
        const double cov = sxy[i] - mx[i] * my[i];
        total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
                 ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    return total / static_cast<double>(mx.size());
}

EndpointError endpoint_error(const MotionField& field, const MotionField& gt, int border_crop) {
    if (!field.same_shape(gt)) throw DimensionError("endpoint_error: dimension mismatch");
    if (border_crop < 0 || 2 * border_crop >= field.width() || 2 * border_crop >= field.height()) {
        throw InputError("endpoint_error: border crop of " + std::to_string(border_crop) + " leaves no pixels");
    }
    std::vector<double> errors;
    for (int y = border_crop; y < field.height() - border_crop; ++y) {
        for (int x = border_crop; x < field.width() - border_crop; ++x) {
            const Vec2 a = field.at(x, y), b = gt.at(x, y);
            errors.push_back(std::hypot(double(a.x) - b.x, double(a.y) - b.y));
        }
    }
    EndpointError e;
    for (double v : errors) e.mean += v;
    e.mean /= static_cast<double>(errors.size());
    const auto rank = static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(errors.size()))) - 1;
    std::nth_element(errors.begin(), errors.begin() + static_cast<std::ptrdiff_t>(rank), errors.end());
    e.p90 = errors[rank];
    return e;
}

Frame temporal_profile(const std::vector<Frame>& frames, int row) {
    if (frames.size() < 2) throw InputError("temporal_profile: need at least 2 frames");
    for (const Frame& f : frames) require_same_shape(f, frames.front(), "temporal_profile");
    if (row < 0 || row >= frames.front().height()) {
        throw InputError("temporal_profile: row " + std::to_string(row) + " out of bounds");
    }
    const Frame& first = frames.front();
    Frame out(first.width(), static_cast<int>(frames.size()), first.channels());
    for (std::size_t t = 0; t < frames.size(); ++t) {
        for (int c = 0; c < first.channels(); ++c) {
            for (int x = 0; x < first.width(); ++x) out.at(c, x, static_cast<int>(t)) = frames[t].at(c, x, row);
        }
    }
    return out;
}

std::string format_metric(std::string_view name, double value) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "metric name=%.*s value=%.4f", static_cast<int>(name.size()), name.data(), value);
    return buf;
}

}  // namespace talign
