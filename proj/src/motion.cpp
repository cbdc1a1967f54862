#include "talign/motion.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include "talign/errors.hpp"

namespace fs = std::filesystem;

namespace talign {

MotionField::MotionField(int width, int height, Vec2 fill) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw InputError("motion field dimensions must be positive");
    const auto n = static_cast<std::size_t>(width) * height;
    dx_.assign(n, fill.x);
    dy_.assign(n, fill.y);
}

Vec2 MotionField::at(int x, int y) const {
    const auto i = static_cast<std::size_t>(y) * width_ + x;
    return {dx_[i], dy_[i]};
}

void MotionField::set(int x, int y, Vec2 v) {
    const auto i = static_cast<std::size_t>(y) * width_ + x;
    dx_[i] = v.x;
    dy_[i] = v.y;
}

Vec2 MotionField::sample(float x, float y) const {
    const float cx = std::clamp(x, 0.0f, static_cast<float>(width_ - 1));
    const float cy = std::clamp(y, 0.0f, static_cast<float>(height_ - 1));
    const int x0 = static_cast<int>(cx), y0 = static_cast<int>(cy);
    const int x1 = std::min(x0 + 1, width_ - 1), y1 = std::min(y0 + 1, height_ - 1);
    const float fx = cx - static_cast<float>(x0), fy = cy - static_cast<float>(y0);
    auto lerp2 = [&](const std::vector<float>& p) {
        const float a = p[static_cast<std::size_t>(y0) * width_ + x0];
        const float b = p[static_cast<std::size_t>(y0) * width_ + x1];
        const float c = p[static_cast<std::size_t>(y1) * width_ + x0];
        const float d = p[static_cast<std::size_t>(y1) * width_ + x1];
        const float top = a + fx * (b - a);
        const float bottom = c + fx * (d - c);
        return top + fy * (bottom - top);
    };
    return {lerp2(dx_), lerp2(dy_)};
}

float MotionField::max_abs_component() const {
    float m = 0.0f;
    for (float v : dx_) m = std::max(m, std::abs(v));
    for (float v : dy_) m = std::max(m, std::abs(v));
    return m;
}

bool MotionField::all_finite() const {
    auto finite = [](float v) { return std::isfinite(v); };
    return std::all_of(dx_.begin(), dx_.end(), finite) && std::all_of(dy_.begin(), dy_.end(), finite);
}

void MotionParams::validate() const {
    if (block_size < 4) throw InputError("block_size must be >= 4");
    if (search_radius < 1) throw InputError("search_radius must be >= 1");
    if (pyramid_levels < 1) throw InputError("pyramid_levels must be >= 1");
    if (lk_iterations < 0) throw InputError("lk_iterations must be >= 0");
    if (lk_window < 1 || lk_window % 2 == 0) throw InputError("lk_window must be a positive odd number");
    if (!(max_displacement > 0.0f)) throw InputError("max_displacement must be positive");
    if (!(prior_weight >= 0.0) || !std::isfinite(prior_weight)) throw InputError("prior_weight must be >= 0");
}

double MotionEstimate::mean_block_cost() const {
    if (blocks.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& b : blocks) sum += b.cost;
    return sum / static_cast<double>(blocks.size());
}

std::vector<int> block_starts(int extent, int block_size) {
    if (extent < block_size) {
        throw InputError("frame extent " + std::to_string(extent) + " is smaller than block size " +
                         std::to_string(block_size));
    }
    std::vector<int> starts;
    for (int s = 0; s + block_size <= extent; s += block_size) starts.push_back(s);
    if (starts.back() + block_size < extent) starts.push_back(extent - block_size);
    return starts;
}

namespace {

bool is_integral(float v) { return std::floor(v) == v; }

// Sum of |S(x + dx, y + dy) - T(x, y)| over the block and all channels.
double block_sad_integer(const Frame& source, const Frame& target, BlockOrigin o, int dx, int dy, int b) {
    const int w = source.width();
    const bool inside = o.x + dx >= 0 && o.x + dx + b <= w && o.y + dy >= 0 && o.y + dy + b <= source.height();
    double total = 0.0;
    for (int c = 0; c < target.channels(); ++c) {
        const auto sp = source.plane(c);
        const auto tp = target.plane(c);
        float acc = 0.0f;
        for (int y = 0; y < b; ++y) {
            const float* trow = tp.data() + static_cast<std::size_t>(o.y + y) * w + o.x;
            if (inside) {
                const float* srow = sp.data() + static_cast<std::size_t>(o.y + y + dy) * w + o.x + dx;
                for (int x = 0; x < b; ++x) acc += std::abs(srow[x] - trow[x]);
            } else {
                for (int x = 0; x < b; ++x) acc += std::abs(source.clamped(c, o.x + x + dx, o.y + y + dy) - trow[x]);
            }
        }
        total += acc;
    }
    return total;
}

double block_sad_subpixel(const Frame& source, const Frame& target, BlockOrigin o, Vec2 d, int b) {
    double total = 0.0;
    for (int c = 0; c < target.channels(); ++c) {
        float acc = 0.0f;
        for (int y = 0; y < b; ++y) {
            for (int x = 0; x < b; ++x) {
                const float s = sample_bilinear(source, c, static_cast<float>(o.x + x) + d.x,
                                                static_cast<float>(o.y + y) + d.y);
                acc += std::abs(s - target.at(c, o.x + x, o.y + y));
            }
        }
        total += acc;
    }
    return total;
}

double block_cost_unchecked(const Frame& source, const Frame& target, BlockOrigin o, Vec2 d, int b) {
    const double sad = (is_integral(d.x) && is_integral(d.y))
                           ? block_sad_integer(source, target, o, static_cast<int>(d.x), static_cast<int>(d.y), b)
                           : block_sad_subpixel(source, target, o, d, b);
    return sad / (static_cast<double>(b) * b * target.channels());
}

float median_of(std::vector<float>& values) {
    const std::size_t n = values.size();
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    if (n % 2 == 1) return *mid;
    const float upper = *mid;
    const float lower = *std::max_element(values.begin(), mid);
    return 0.5f * (lower + upper);
}

Vec2 block_median(const MotionField& field, BlockOrigin o, int b) {
    std::vector<float> xs, ys;
    xs.reserve(static_cast<std::size_t>(b) * b);
    ys.reserve(static_cast<std::size_t>(b) * b);
    for (int y = 0; y < b; ++y) {
        for (int x = 0; x < b; ++x) {
            const Vec2 v = field.at(o.x + x, o.y + y);
            xs.push_back(v.x);
            ys.push_back(v.y);
        }
    }
    return {median_of(xs), median_of(ys)};
}

// Smaller magnitude first, then lexicographic (dy, dx).
bool preferred_on_tie(int dx, int dy, int bx, int by) {
    const int m = dx * dx + dy * dy, bm = bx * bx + by * by;
    if (m != bm) return m < bm;
    if (dy != by) return dy < by;
    return dx < bx;
}

struct Range {
    int lo;
    int hi;
};

// [center - radius, center + radius] intersected with the displacements that
// keep the block inside the source; collapses to the nearest feasible value
// when the intersection is empty.
Range search_range(int center, int radius, int origin, int block, int extent, float max_disp) {
    const int bound = static_cast<int>(std::floor(max_disp));
    const int feasible_lo = std::max(-origin, -bound);
    const int feasible_hi = std::min(extent - block - origin, bound);
    int lo = std::max(center - radius, feasible_lo);
    int hi = std::min(center + radius, feasible_hi);
    if (lo > hi) lo = hi = std::clamp(center, feasible_lo, feasible_hi);
    return {lo, hi};
}

BlockMatch match_block(const Frame& source, const Frame& target, BlockOrigin o, const MotionParams& params,
                       const MotionField* prior) {
    const int b = params.block_size;
    BlockMatch m;
    m.origin = o;
    m.prior_vector = {std::numeric_limits<float>::quiet_NaN(), std::numeric_limits<float>::quiet_NaN()};
    m.prior_cost = std::numeric_limits<double>::quiet_NaN();

    int cx = 0, cy = 0;
    if (prior != nullptr) {
        Vec2 p = block_median(*prior, o, b);
        p.x = std::clamp(p.x, -params.max_displacement, params.max_displacement);
        p.y = std::clamp(p.y, -params.max_displacement, params.max_displacement);
        m.prior_vector = p;
        m.prior_cost = block_cost_unchecked(source, target, o, p, b);
        cx = static_cast<int>(std::lround(p.x));
        cy = static_cast<int>(std::lround(p.y));
    }

    const Range rx = search_range(cx, params.search_radius, o.x, b, source.width(), params.max_displacement);
    const Range ry = search_range(cy, params.search_radius, o.y, b, source.height(), params.max_displacement);
    const double norm = static_cast<double>(b) * b * target.channels();

    double best = std::numeric_limits<double>::infinity();
    int bx = 0, by = 0;
    for (int dy = ry.lo; dy <= ry.hi; ++dy) {
        for (int dx = rx.lo; dx <= rx.hi; ++dx) {
            const double cost = block_sad_integer(source, target, o, dx, dy, b) / norm;
            if (cost < best || (cost == best && preferred_on_tie(dx, dy, bx, by))) {
                best = cost;
                bx = dx;
                by = dy;
            }
        }
    }
    m.vector = {static_cast<float>(bx), static_cast<float>(by)};
    m.cost = best;

    // The prior keeps the block unless an integer candidate is strictly better.
    if (prior != nullptr && m.prior_cost <= best) {
        m.vector = m.prior_vector;
        m.cost = m.prior_cost;
        m.from_prior = true;
    }
    return m;
}

// Linear interpolation weights from block centers onto every pixel of an axis.
struct AxisWeights {
    std::vector<int> lower;
    std::vector<float> frac;
};

AxisWeights axis_weights(const std::vector<int>& starts, int block, int extent) {
    std::vector<float> centers;
    for (int s : starts) centers.push_back(static_cast<float>(s) + 0.5f * static_cast<float>(block - 1));
    AxisWeights w;
    w.lower.resize(static_cast<std::size_t>(extent));
    w.frac.resize(static_cast<std::size_t>(extent));
    const int n = static_cast<int>(centers.size());
    for (int p = 0; p < extent; ++p) {
        const float x = static_cast<float>(p);
        if (n == 1 || x <= centers.front()) {
            w.lower[p] = 0;
            w.frac[p] = 0.0f;
        } else if (x >= centers.back()) {
            w.lower[p] = n - 1;
            w.frac[p] = 0.0f;
        } else {
            int j = 0;
            while (centers[j + 1] < x) ++j;
            w.lower[p] = j;
            w.frac[p] = (x - centers[j]) / (centers[j + 1] - centers[j]);
        }
    }
    return w;
}

MotionField upsample_blocks(const std::vector<BlockMatch>& blocks, const std::vector<int>& xs,
                            const std::vector<int>& ys, int block, int width, int height) {
    const AxisWeights wx = axis_weights(xs, block, width);
    const AxisWeights wy = axis_weights(ys, block, height);
    const int nbx = static_cast<int>(xs.size()), nby = static_cast<int>(ys.size());
    auto vec = [&](int bx, int by) { return blocks[static_cast<std::size_t>(by) * nbx + bx].vector; };
    MotionField field(width, height);
    for (int y = 0; y < height; ++y) {
        const int j0 = wy.lower[y], j1 = std::min(j0 + 1, nby - 1);
        const float fy = wy.frac[y];
        for (int x = 0; x < width; ++x) {
            const int i0 = wx.lower[x], i1 = std::min(i0 + 1, nbx - 1);
            const float fx = wx.frac[x];
            const Vec2 a = vec(i0, j0), b = vec(i1, j0), c = vec(i0, j1), d = vec(i1, j1);
            const float tx = a.x + fx * (b.x - a.x), bxv = c.x + fx * (d.x - c.x);
            const float ty = a.y + fx * (b.y - a.y), byv = c.y + fx * (d.y - c.y);
            field.set(x, y, {tx + fy * (bxv - tx), ty + fy * (byv - ty)});
        }
    }
    return field;
}

// 2x2 box reduction with replicated last row/column for odd sizes.
Frame downsample(const Frame& f) {
    const int w = (f.width() + 1) / 2, h = (f.height() + 1) / 2;
    Frame out(w, h, f.channels());
    for (int c = 0; c < f.channels(); ++c) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                out.at(c, x, y) = 0.25f * (f.clamped(c, 2 * x, 2 * y) + f.clamped(c, 2 * x + 1, 2 * y) +
                                           f.clamped(c, 2 * x, 2 * y + 1) + f.clamped(c, 2 * x + 1, 2 * y + 1));
            }
        }
    }
    return out;
}

MotionField downsample_field(const MotionField& f, int width, int height) {
    MotionField out(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const Vec2 v = f.sample(2.0f * x + 0.5f, 2.0f * y + 0.5f);
            out.set(x, y, {0.5f * v.x, 0.5f * v.y});
        }
    }
    return out;
}

MotionField upsample_field(const MotionField& f, int width, int height) {
    MotionField out(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const Vec2 v = f.sample(0.5f * (x - 0.5f), 0.5f * (y - 0.5f));
            out.set(x, y, {2.0f * v.x, 2.0f * v.y});
        }
    }
    return out;
}

// Running-sum box filter of odd width `window` with replicated borders.
std::vector<float> box_filter(const std::vector<float>& in, int w, int h, int window) {
    const int r = window / 2;
    std::vector<float> tmp(in.size()), out(in.size());
    auto at = [&](const std::vector<float>& v, int x, int y) {
        return v[static_cast<std::size_t>(std::clamp(y, 0, h - 1)) * w + std::clamp(x, 0, w - 1)];
    };
    for (int y = 0; y < h; ++y) {
        double acc = 0.0;
        for (int d = -r; d <= r; ++d) acc += at(in, d, y);
        for (int x = 0; x < w; ++x) {
            tmp[static_cast<std::size_t>(y) * w + x] = static_cast<float>(acc);
            acc += at(in, x + r + 1, y) - at(in, x - r, y);
        }
    }
    for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int d = -r; d <= r; ++d) acc += at(tmp, x, d);
        for (int y = 0; y < h; ++y) {
            out[static_cast<std::size_t>(y) * w + x] = static_cast<float>(acc);
            acc += at(tmp, x, y + r + 1) - at(tmp, x, y - r);
        }
    }
    return out;
}

double sq(double v) { return v * v; }

// Weight of the prior pull in the normal equations, relative to the mean
// structure-tensor eigenvalue of the window.
double prior_lambda(const MotionParams& params, double gxx, double gyy) {
    return params.prior_weight * 0.5 * (gxx + gyy);
}

struct Gradients {
    std::vector<float> gxx, gxy, gyy;  // window sums over channels
    std::vector<std::vector<float>> ix, iy;  // per channel
};

Gradients target_gradients(const Frame& target, int window) {
    const int w = target.width(), h = target.height();
    const std::size_t n = target.plane_size();
    Gradients g;
    std::vector<float> xx(n, 0.0f), xy(n, 0.0f), yy(n, 0.0f);
    for (int c = 0; c < target.channels(); ++c) {
        std::vector<float> ix(n), iy(n);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                ix[i] = 0.5f * (target.clamped(c, x + 1, y) - target.clamped(c, x - 1, y));
                iy[i] = 0.5f * (target.clamped(c, x, y + 1) - target.clamped(c, x, y - 1));
                xx[i] += ix[i] * ix[i];
                xy[i] += ix[i] * iy[i];
                yy[i] += iy[i] * iy[i];
            }
        }
        g.ix.push_back(std::move(ix));
        g.iy.push_back(std::move(iy));
    }
    g.gxx = box_filter(xx, w, h, window);
    g.gxy = box_filter(xy, w, h, window);
    g.gyy = box_filter(yy, w, h, window);
    return g;
}

// Source window sampled at a constant subpixel offset; all taps share the
// same bilinear weights.
class WindowSampler {
public:
    WindowSampler(const Frame& source, int radius) : source_(source), radius_(radius) {}

    // Sum over the window around (cx, cy) and all channels of
    // fn(c, x, y, source(x + d.x, y + d.y)).
    template <class Fn>
    void visit(int cx, int cy, Vec2 d, Fn&& fn) const {
        const float fdx = std::floor(d.x), fdy = std::floor(d.y);
        const int ix = static_cast<int>(fdx), iy = static_cast<int>(fdy);
        const float fx = d.x - fdx, fy = d.y - fdy;
        const float w00 = (1 - fx) * (1 - fy), w10 = fx * (1 - fy), w01 = (1 - fx) * fy, w11 = fx * fy;
        const int w = source_.width(), h = source_.height();
        const int r = radius_;
        if (cx - r >= 0 && cx + r < w && cy - r >= 0 && cy + r < h && cx - r + ix >= 0 && cx + r + ix + 1 < w &&
            cy - r + iy >= 0 && cy + r + iy + 1 < h) {
            for (int c = 0; c < source_.channels(); ++c) {
                const std::span<const float> plane = source_.plane(c);
                for (int y = cy - r; y <= cy + r; ++y) {
                    const float* row0 = plane.data() + static_cast<std::size_t>(y + iy) * w + ix;
                    const float* row1 = row0 + w;
                    for (int x = cx - r; x <= cx + r; ++x) {
                        const float s = w00 * row0[x] + w10 * row0[x + 1] + w01 * row1[x] + w11 * row1[x + 1];
                        fn(c, x, y, s);
                    }
                }
            }
            return;
        }
        for (int c = 0; c < source_.channels(); ++c) {
            for (int y = cy - radius_; y <= cy + radius_; ++y) {
                const int ty = std::clamp(y, 0, h - 1);
                const int sy0 = std::clamp(ty + iy, 0, h - 1), sy1 = std::clamp(ty + iy + 1, 0, h - 1);
                for (int x = cx - radius_; x <= cx + radius_; ++x) {
                    const int tx = std::clamp(x, 0, w - 1);
                    const int sx0 = std::clamp(tx + ix, 0, w - 1), sx1 = std::clamp(tx + ix + 1, 0, w - 1);
                    const float s = w00 * source_.at(c, sx0, sy0) + w10 * source_.at(c, sx1, sy0) +
                                    w01 * source_.at(c, sx0, sy1) + w11 * source_.at(c, sx1, sy1);
                    fn(c, tx, ty, s);
                }
            }
        }
    }

private:
    const Frame& source_;
    int radius_;
};

double window_ssd(const WindowSampler& sampler, const Frame& target, int x, int y, Vec2 d) {
    double ssd = 0.0;
    sampler.visit(x, y, d, [&](int c, int tx, int ty, float s) {
        const double e = s - target.at(c, tx, ty);
        ssd += e * e;
    });
    return ssd;
}

/// Per-pixel Lucas-Kanade with target-side gradients: the window around each
/// pixel is compared against the source displaced by that pixel's vector and
/// the 2x2 normal equations give the update. Refines `base + correction` by
/// updating `correction` in place.
void lucas_kanade_level(const Frame& source, const Frame& target, const MotionField& base,
                        MotionField& correction, const MotionParams& params, const MotionField* prior) {
    const int w = target.width(), h = target.height();
    const Gradients g = target_gradients(target, params.lk_window);
    const float area = static_cast<float>(params.lk_window * params.lk_window * target.channels());
    const WindowSampler sampler(source, params.lk_window / 2);
    constexpr double kMaxStep = 2.0;
    constexpr double kConverged = 1e-2;

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const double ga = g.gxx[i], b = g.gxy[i], gd = g.gyy[i];
            const double min_eig = 0.5 * (ga + gd - std::sqrt(std::max(0.0, (ga - gd) * (ga - gd) + 4.0 * b * b)));
            if (min_eig / area < 1e-6) continue;
            const double lambda = prior != nullptr ? prior_lambda(params, ga, gd) : 0.0;
            const double a = ga + lambda, d = gd + lambda;
            const double det = a * d - b * b;
            const Vec2 p = prior != nullptr ? prior->at(x, y) : Vec2{};

            const Vec2 v0 = base.at(x, y);
            Vec2 corr = correction.at(x, y);
            for (int iter = 0; iter < params.lk_iterations; ++iter) {
                double ex = 0.0, ey = 0.0;
                sampler.visit(x, y, {v0.x + corr.x, v0.y + corr.y}, [&](int c, int tx, int ty, float s) {
                    const std::size_t j = static_cast<std::size_t>(ty) * w + tx;
                    const float e = s - target.at(c, tx, ty);
                    ex += e * g.ix[c][j];
                    ey += e * g.iy[c][j];
                });
                ex += lambda * (v0.x + corr.x - p.x);
                ey += lambda * (v0.y + corr.y - p.y);
                const double ux = std::clamp(-(d * ex - b * ey) / det, -kMaxStep, kMaxStep);
                const double uy = std::clamp(-(a * ey - b * ex) / det, -kMaxStep, kMaxStep);
                corr.x += static_cast<float>(ux);
                corr.y += static_cast<float>(uy);
                if (ux * ux + uy * uy < kConverged * kConverged) break;
            }
            correction.set(x, y, corr);
        }
    }
}

MotionField add_fields(const MotionField& a, const MotionField& b) {
    MotionField out = a;
    for (std::size_t i = 0; i < out.dx().size(); ++i) {
        out.dx()[i] += b.dx()[i];
        out.dy()[i] += b.dy()[i];
    }
    return out;
}

MotionField polish(const Frame& source, const Frame& target, const MotionField& init, const MotionParams& params,
                   const MotionField* prior) {
    if (params.lk_iterations == 0) return init;
    if (params.prior_weight == 0.0) prior = nullptr;

    std::vector<Frame> src_pyr{source}, tgt_pyr{target};
    std::vector<MotionField> init_pyr{init}, prior_pyr;
    if (prior != nullptr) prior_pyr.push_back(*prior);
    for (int l = 1; l < params.pyramid_levels; ++l) {
        const Frame& t = tgt_pyr.back();
        if ((t.width() + 1) / 2 < params.lk_window || (t.height() + 1) / 2 < params.lk_window) break;
        src_pyr.push_back(downsample(src_pyr.back()));
        tgt_pyr.push_back(downsample(t));
        const int lw = tgt_pyr.back().width(), lh = tgt_pyr.back().height();
        init_pyr.push_back(downsample_field(init_pyr.back(), lw, lh));
        if (prior != nullptr) prior_pyr.push_back(downsample_field(prior_pyr.back(), lw, lh));
    }

    const int top = static_cast<int>(tgt_pyr.size()) - 1;
    MotionField correction(tgt_pyr[top].width(), tgt_pyr[top].height());
    for (int l = top; l >= 0; --l) {
        if (l != top) correction = upsample_field(correction, tgt_pyr[l].width(), tgt_pyr[l].height());
        lucas_kanade_level(src_pyr[l], tgt_pyr[l], init_pyr[l], correction, params,
                           prior != nullptr ? &prior_pyr[l] : nullptr);
    }
    MotionField refined = add_fields(init, correction);

    // Keep the initial vector wherever the polish increased the local objective.
    const WindowSampler sampler(source, params.lk_window / 2);
    Gradients g;
    if (prior != nullptr) g = target_gradients(target, params.lk_window);
    const int w = target.width();
    for (int y = 0; y < target.height(); ++y) {
        for (int x = 0; x < w; ++x) {
            const Vec2 before = init.at(x, y), after = refined.at(x, y);
            if (after == before) continue;
            double cost_before = window_ssd(sampler, target, x, y, before);
            double cost_after = window_ssd(sampler, target, x, y, after);
            if (prior != nullptr) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                const double lambda = prior_lambda(params, g.gxx[i], g.gyy[i]);
                const Vec2 p = prior->at(x, y);
                cost_before += lambda * (sq(before.x - p.x) + sq(before.y - p.y));
                cost_after += lambda * (sq(after.x - p.x) + sq(after.y - p.y));
            }
            if (cost_after > cost_before) refined.set(x, y, before);
        }
    }
    return refined;
}

}  // namespace

double block_cost(const Frame& source, const Frame& target, BlockOrigin origin, Vec2 displacement,
                  const MotionParams& params) {
    require_same_shape(source, target, "block_cost");
    const int b = params.block_size;
    if (origin.x < 0 || origin.y < 0 || origin.x + b > target.width() || origin.y + b > target.height()) {
        throw InputError("block origin (" + std::to_string(origin.x) + "," + std::to_string(origin.y) +
                         ") is out of bounds");
    }
    return block_cost_unchecked(source, target, origin, displacement, b);
}

MotionEstimate estimate_motion(const Frame& source, const Frame& target, const MotionParams& params,
                               const MotionField* prior) {
    params.validate();
    require_same_shape(source, target, "estimate");
    if (prior != nullptr && !prior->same_shape(target)) {
        throw DimensionError("estimate: prior field does not match frame dimensions");
    }
    const int w = target.width(), h = target.height();
    const std::vector<int> xs = block_starts(w, params.block_size);
    const std::vector<int> ys = block_starts(h, params.block_size);

    MotionEstimate result;
    result.blocks.reserve(xs.size() * ys.size());
    for (int oy : ys) {
        for (int ox : xs) result.blocks.push_back(match_block(source, target, {ox, oy}, params, prior));
    }

    const MotionField init = upsample_blocks(result.blocks, xs, ys, params.block_size, w, h);
    result.field = polish(source, target, init, params, prior);
    for (auto& v : result.field.dx()) v = std::clamp(v, -params.max_displacement, params.max_displacement);
    for (auto& v : result.field.dy()) v = std::clamp(v, -params.max_displacement, params.max_displacement);
    if (!result.field.all_finite()) throw InvariantError("estimate produced a non-finite motion vector");
    return result;
}

std::vector<BlockMatch> score_field(const Frame& source, const Frame& target, const MotionField& field,
                                    const MotionParams& params) {
    params.validate();
    require_same_shape(source, target, "score_field");
    if (!field.same_shape(target)) throw DimensionError("score_field: field does not match frame dimensions");
    std::vector<BlockMatch> blocks;
    for (int oy : block_starts(target.height(), params.block_size)) {
        for (int ox : block_starts(target.width(), params.block_size)) {
            BlockMatch m;
            m.origin = {ox, oy};
            m.vector = block_median(field, m.origin, params.block_size);
            m.cost = block_cost_unchecked(source, target, m.origin, m.vector, params.block_size);
            m.prior_vector = m.vector;
            m.prior_cost = m.cost;
            m.from_prior = true;
            blocks.push_back(m);
        }
    }
    return blocks;
}

MotionField estimate(const Frame& source, const Frame& target, const MotionParams& params,
                     const std::optional<MotionField>& prior) {
    return estimate_motion(source, target, params, prior ? &*prior : nullptr).field;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
    const unsigned char bytes[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                    static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    if (!in) throw InputError("truncated MFLD header");
    return std::uint32_t(bytes[0]) | std::uint32_t(bytes[1]) << 8 | std::uint32_t(bytes[2]) << 16 |
           std::uint32_t(bytes[3]) << 24;
}

}  // namespace

void write_field(const MotionField& field, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out.write("MFLD", 4);
    put_u32(out, static_cast<std::uint32_t>(field.width()));
    put_u32(out, static_cast<std::uint32_t>(field.height()));
    for (auto plane : {field.dx(), field.dy()}) {
        for (float v : plane) put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    if (!out) throw InputError("failed writing " + path.string());
}

MotionField read_field(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "MFLD", 4) != 0) throw InputError(path.string() + " is not an MFLD file");
    const std::uint32_t w = get_u32(in), h = get_u32(in);
    if (w == 0 || h == 0 || w > (1u << 16) || h > (1u << 16)) throw InputError("bad MFLD dimensions");
    MotionField field(static_cast<int>(w), static_cast<int>(h));
    for (auto plane : {field.dx(), field.dy()}) {
        for (float& v : plane) v = std::bit_cast<float>(get_u32(in));
    }
    return field;
}

}  // namespace talign
