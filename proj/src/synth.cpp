#include "talign/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "talign/errors.hpp"
#include "talign/image_io.hpp"
#include "talign/rng.hpp"

namespace fs = std::filesystem;

namespace talign {

namespace mm = motion_model;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};

Point2 rotate(Point2 p, Point2 c, double degrees) {
    const double a = degrees * std::numbers::pi / 180.0;
    const double cs = std::cos(a), sn = std::sin(a);
    const double x = p.x - c.x, y = p.y - c.y;
    return {c.x + cs * x - sn * y, c.y + sn * x + cs * y};
}

Vec2 drift_offset(const mm::Drift& d, int j) {
    const float jf = static_cast<float>(j);
    return {d.velocity.x * jf + 0.5f * d.acceleration.x * jf * jf,
            d.velocity.y * jf + 0.5f * d.acceleration.y * jf * jf};
}

/// Gaussian-filtered lattice noise, evaluable at any real position.
/// Lattice values depend only on (seed, channel, lattice point), so any
/// window of the infinite texture is reproducible.
class ContinuousTexture {
public:
    ContinuousTexture(std::uint64_t seed, double cutoff, double x0, double y0, double x1, double y1)
        : sigma_(texture_sigma(cutoff)), radius_(static_cast<int>(std::ceil(5.0 * sigma_))) {
        px0_ = static_cast<int>(std::floor(x0)) - radius_ - 1;
        py0_ = static_cast<int>(std::floor(y0)) - radius_ - 1;
        pw_ = static_cast<int>(std::ceil(x1)) + radius_ + 2 - px0_;
        ph_ = static_cast<int>(std::ceil(y1)) + radius_ + 2 - py0_;
        lattice_.resize(3);
        for (int c = 0; c < 3; ++c) {
            auto& plane = lattice_[c];
            plane.resize(static_cast<std::size_t>(pw_) * ph_);
            for (int q = 0; q < ph_; ++q) {
                for (int p = 0; p < pw_; ++p) {
                    const auto px = static_cast<std::uint64_t>(static_cast<std::int64_t>(p + px0_));
                    const auto py = static_cast<std::uint64_t>(static_cast<std::int64_t>(q + py0_));
                    const std::uint64_t key = derive_seed(derive_seed(seed, static_cast<std::uint64_t>(c)),
                                                          (py << 32) ^ (px & 0xFFFFFFFFULL));
                    plane[static_cast<std::size_t>(q) * pw_ + p] = Xorshift64Star(key).normal();
                }
            }
        }
    }

    // Unnormalized filtered value at (x, y).
    double raw(int c, double x, double y) const {
        thread_local std::vector<double> wx, wy;
        wx.resize(static_cast<std::size_t>(2 * radius_ + 2));
        wy.resize(wx.size());
        const int bx = static_cast<int>(std::floor(x)) - radius_;
        const int by = static_cast<int>(std::floor(y)) - radius_;
        const int taps = 2 * radius_ + 2;
        weights(x, bx, taps, wx.data());
        weights(y, by, taps, wy.data());
        const auto& plane = lattice_[c];
        double acc = 0.0;
        for (int j = 0; j < taps; ++j) {
            const double* row = &plane[static_cast<std::size_t>(by + j - py0_) * pw_ + (bx - px0_)];
            double racc = 0.0;
            for (int i = 0; i < taps; ++i) racc += wx[i] * row[i];
            acc += wy[j] * racc;
        }
        return acc;
    }

    /// Values on the tensor grid xs x ys, computed separably.
    std::vector<double> raw_grid(int c, const std::vector<double>& xs, const std::vector<double>& ys) const {
        const int taps = 2 * radius_ + 2;
        const auto& plane = lattice_[c];
        std::vector<double> horizontal(static_cast<std::size_t>(ph_) * xs.size());
        std::vector<double> wbuf(static_cast<std::size_t>(taps));
        double* w = wbuf.data();
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const int bx = static_cast<int>(std::floor(xs[i])) - radius_;
            weights(xs[i], bx, taps, w);
            for (int q = 0; q < ph_; ++q) {
                const double* row = &plane[static_cast<std::size_t>(q) * pw_ + (bx - px0_)];
                double acc = 0.0;
                for (int t = 0; t < taps; ++t) acc += w[t] * row[t];
                horizontal[static_cast<std::size_t>(q) * xs.size() + i] = acc;
            }
        }
        std::vector<double> out(xs.size() * ys.size());
        for (std::size_t j = 0; j < ys.size(); ++j) {
            const int by = static_cast<int>(std::floor(ys[j])) - radius_;
            weights(ys[j], by, taps, w);
            for (std::size_t i = 0; i < xs.size(); ++i) {
                double acc = 0.0;
                for (int t = 0; t < taps; ++t) {
                    acc += w[t] * horizontal[static_cast<std::size_t>(by + t - py0_) * xs.size() + i];
                }
                out[j * xs.size() + i] = acc;
            }
        }
        return out;
    }

private:
    void weights(double pos, int base, int taps, double* out) const {
        const double inv = 1.0 / (2.0 * sigma_ * sigma_);
        for (int t = 0; t < taps; ++t) {
            const double d = pos - static_cast<double>(base + t);
            out[t] = std::abs(d) <= 5.0 * sigma_ ? std::exp(-d * d * inv) : 0.0;
        }
    }

    double sigma_;
    int radius_;
    int px0_ = 0, py0_ = 0, pw_ = 0, ph_ = 0;
    std::vector<std::vector<double>> lattice_;
};

struct Normalization {
    double scale[3];
    double offset[3];
};

std::vector<double> iota_positions(int n, double shift) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[i] = i + shift;
    return v;
}

// Maps each channel's range over the reference grid onto [0.1, 0.9].
Normalization normalize_reference(const ContinuousTexture& tex, int w, int h, Frame& reference) {
    Normalization norm{};
    const auto xs = iota_positions(w, 0.0), ys = iota_positions(h, 0.0);
    for (int c = 0; c < 3; ++c) {
        const auto raw = tex.raw_grid(c, xs, ys);
        const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
        const double span = std::max(*hi - *lo, 1e-12);
        norm.scale[c] = 0.8 / span;
        norm.offset[c] = 0.1 - *lo * norm.scale[c];
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double v = norm.offset[c] + norm.scale[c] * raw[static_cast<std::size_t>(y) * w + x];
                reference.at(c, x, y) = static_cast<float>(std::clamp(v, 0.1, 0.9));
            }
        }
    }
    return norm;
}

Frame render(const ContinuousTexture& tex, const Normalization& norm, const MotionModel& model, int frame,
             int w, int h) {
    Frame out(w, h, 3);
    auto translated = [&](Vec2 offset) {
        // F_j(q) = T(q - offset): separable evaluation.
        const auto xs = iota_positions(w, -static_cast<double>(offset.x));
        const auto ys = iota_positions(h, -static_cast<double>(offset.y));
        for (int c = 0; c < 3; ++c) {
            const auto raw = tex.raw_grid(c, xs, ys);
            auto plane = out.plane(c);
            for (std::size_t i = 0; i < plane.size(); ++i) {
                plane[i] = static_cast<float>(norm.offset[c] + norm.scale[c] * raw[i]);
            }
        }
    };
    std::visit(Overloaded{
                   [&](const mm::Constant& m) {
                       translated({m.velocity.x * static_cast<float>(frame), m.velocity.y * static_cast<float>(frame)});
                   },
                   [&](const mm::Drift& m) { translated(drift_offset(m, frame)); },
                   [&](const mm::Rotation&) {
                       for (int y = 0; y < h; ++y) {
                           for (int x = 0; x < w; ++x) {
                               const Point2 p = scene_position_inverse(model, frame, {double(x), double(y)});
                               for (int c = 0; c < 3; ++c) {
                                   out.at(c, x, y) =
                                       static_cast<float>(norm.offset[c] + norm.scale[c] * tex.raw(c, p.x, p.y));
                               }
                           }
                       }
                   },
               },
               model);
    return out;
}

MotionField long_field(const MotionModel& model, int k, int w, int h) {
    MotionField f(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Point2 q = scene_position(model, k, {double(x), double(y)});
            f.set(x, y, {static_cast<float>(q.x - x), static_cast<float>(q.y - y)});
        }
    }
    return f;
}

// a_i on the grid of frame i - sign(i).
Point2 hop_target(const MotionModel& model, int i, Point2 q) {
    const int s = i > 0 ? 1 : -1;
    return scene_position(model, i, scene_position_inverse(model, i - s, q));
}

MotionField hop_field(const MotionModel& model, int i, int w, int h) {
    MotionField f(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Point2 q = hop_target(model, i, {double(x), double(y)});
            f.set(x, y, {static_cast<float>(q.x - x), static_cast<float>(q.y - y)});
        }
    }
    return f;
}

std::vector<double> parse_numbers(const std::string& text) {
    std::vector<double> values;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw InputError("invalid number '" + item + "' in motion spec");
        }
        if (used != item.size()) throw InputError("invalid number '" + item + "' in motion spec");
        values.push_back(v);
    }
    return values;
}

}  // namespace

Point2 scene_position(const MotionModel& model, int frame, Point2 p) {
    return std::visit(Overloaded{
                          [&](const mm::Constant& m) {
                              return Point2{p.x + double(m.velocity.x) * frame, p.y + double(m.velocity.y) * frame};
                          },
                          [&](const mm::Drift& m) {
                              const Vec2 o = drift_offset(m, frame);
                              return Point2{p.x + o.x, p.y + o.y};
                          },
                          [&](const mm::Rotation& m) {
                              return rotate(p, {m.center.x, m.center.y}, m.degrees_per_hop * frame);
                          },
                      },
                      model);
}

Point2 scene_position_inverse(const MotionModel& model, int frame, Point2 q) {
    return std::visit(Overloaded{
                          [&](const mm::Constant& m) {
                              return Point2{q.x - double(m.velocity.x) * frame, q.y - double(m.velocity.y) * frame};
                          },
                          [&](const mm::Drift& m) {
                              const Vec2 o = drift_offset(m, frame);
                              return Point2{q.x - o.x, q.y - o.y};
                          },
                          [&](const mm::Rotation& m) {
                              return rotate(q, {m.center.x, m.center.y}, -m.degrees_per_hop * frame);
                          },
                      },
                      model);
}

double max_hop_displacement(const MotionModel& model, int width, int height, int neighbors) {
    double worst = 0.0;
    const Point2 corners[] = {{0, 0}, {double(width - 1), 0}, {0, double(height - 1)},
                              {double(width - 1), double(height - 1)}};
    for (int m = 1; m <= neighbors; ++m) {
        for (int i : {m, -m}) {
            // Hop fields of these models are affine, so corners bound the norm.
            for (const Point2& q : corners) {
                const Point2 t = hop_target(model, i, q);
                worst = std::max(worst, std::hypot(t.x - q.x, t.y - q.y));
            }
        }
    }
    return worst;
}

MotionModel parse_motion(const std::string& text, int width, int height) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw InputError("motion spec '" + text + "' lacks a ':'");
    const std::string kind = text.substr(0, colon);
    const std::vector<double> v = parse_numbers(text.substr(colon + 1));
    if (kind == "const" && v.size() == 2) {
        return mm::Constant{{static_cast<float>(v[0]), static_cast<float>(v[1])}};
    }
    if (kind == "drift" && v.size() == 4) {
        return mm::Drift{{static_cast<float>(v[0]), static_cast<float>(v[1])},
                         {static_cast<float>(v[2]), static_cast<float>(v[3])}};
    }
    if (kind == "rot" && v.size() == 1) {
        return mm::Rotation{{0.5f * static_cast<float>(width - 1), 0.5f * static_cast<float>(height - 1)}, v[0]};
    }
    if (kind == "rot" && v.size() == 3) {
        return mm::Rotation{{static_cast<float>(v[0]), static_cast<float>(v[1])}, v[2]};
    }
    throw InputError("unrecognized motion spec '" + text + "'");
}

std::string format_motion(const MotionModel& model) {
    std::ostringstream out;
    out.precision(9);
    std::visit(Overloaded{
                   [&](const mm::Constant& m) { out << "const:" << m.velocity.x << ',' << m.velocity.y; },
                   [&](const mm::Drift& m) {
                       out << "drift:" << m.velocity.x << ',' << m.velocity.y << ',' << m.acceleration.x << ','
                           << m.acceleration.y;
                   },
                   [&](const mm::Rotation& m) {
                       out << "rot:" << m.center.x << ',' << m.center.y << ',' << m.degrees_per_hop;
                   },
               },
               model);
    return out.str();
}

double texture_sigma(double cutoff) {
    return std::sqrt(2.0 * std::numbers::ln2) / (std::numbers::pi * cutoff);
}

Frame texture(std::uint64_t seed, int width, int height, double cutoff) {
    if (!(cutoff > 0.0 && cutoff <= 1.0)) throw InputError("texture cutoff must be in (0, 1]");
    if (width <= 0 || height <= 0) throw InputError("texture size must be positive");
    const ContinuousTexture tex(seed, cutoff, 0.0, 0.0, width - 1.0, height - 1.0);
    Frame out(width, height, 3);
    normalize_reference(tex, width, height, out);
    return out;
}

void SynthSpec::validate() const {
    if (width < 32 || height < 32) throw InputError("synth size must be at least 32x32");
    if (neighbors < 1) throw InputError("synth needs N >= 1");
    if (!(texture_cutoff > 0.0 && texture_cutoff <= 1.0)) throw InputError("texture cutoff must be in (0, 1]");
    if (!(noise.sigma >= 0.0)) throw InputError("noise sigma must be >= 0");
    if (blur_radius < 0) throw InputError("blur radius must be >= 0");

    const double hop = max_hop_displacement(motion, width, height, neighbors);
    if (hop > kMaxHopDisplacement) {
        throw InputError("displacement bound violated: per-hop displacement " + std::to_string(hop) +
                         " px exceeds " + std::to_string(kMaxHopDisplacement));
    }
    for (int k : {neighbors, -neighbors}) {
        std::size_t inside = 0;
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const Point2 q = scene_position(motion, k, {double(x), double(y)});
                if (q.x >= 0.0 && q.x <= width - 1.0 && q.y >= 0.0 && q.y <= height - 1.0) ++inside;
            }
        }
        const double fraction = static_cast<double>(inside) / (static_cast<double>(width) * height);
        if (fraction < 0.75) {
            throw InputError("displacement bound violated: only " + std::to_string(100.0 * fraction) +
                             "% of reference pixels stay in frame at k=" + std::to_string(k));
        }
    }
}

SynthOutput generate(const SynthSpec& spec) {
    spec.validate();
    const int w = spec.width, h = spec.height, n = spec.neighbors;

    // Lattice must cover every position any frame samples.
    double x0 = 0.0, y0 = 0.0, x1 = w - 1.0, y1 = h - 1.0;
    for (int j = -n; j <= n; ++j) {
        for (Point2 q : {Point2{0, 0}, Point2{w - 1.0, 0}, Point2{0, h - 1.0}, Point2{w - 1.0, h - 1.0}}) {
            const Point2 p = scene_position_inverse(spec.motion, j, q);
            x0 = std::min(x0, p.x);
            y0 = std::min(y0, p.y);
            x1 = std::max(x1, p.x);
            y1 = std::max(y1, p.y);
        }
    }
    const ContinuousTexture tex(spec.texture_seed, spec.texture_cutoff, x0, y0, x1, y1);

    SynthOutput out;
    out.clean_reference = Frame(w, h, 3);
    const Normalization norm = normalize_reference(tex, w, h, out.clean_reference);

    std::vector<Frame> clean, degraded;
    for (int j = -n; j <= n; ++j) {
        Frame f = j == 0 ? out.clean_reference : render(tex, norm, spec.motion, j, w, h);
        Frame d = f;
        if (spec.degradation == DegradationKind::BoxBlur) d = box_blur(d, spec.blur_radius);
        if (spec.degradation != DegradationKind::None) {
            d = add_gaussian_noise(d, {spec.noise.sigma, derive_seed(spec.noise.seed, static_cast<std::uint64_t>(j + n))});
        }
        clean.push_back(std::move(f));
        degraded.push_back(std::move(d));
    }
    out.clean = Sequence(std::move(clean));
    out.sequence = Sequence(std::move(degraded));

    for (int m = 1; m <= n; ++m) {
        for (int k : {m, -m}) {
            out.gt_hop_fields[k] = hop_field(spec.motion, k, w, h);
            out.gt_long_fields[k] = long_field(spec.motion, k, w, h);
        }
    }
    return out;
}

std::string describe(const SynthSpec& spec) {
    std::ostringstream out;
    out.precision(9);
    out << "size = " << spec.width << 'x' << spec.height << '\n';
    out << "n = " << spec.neighbors << '\n';
    out << "motion = " << format_motion(spec.motion) << '\n';
    out << "texture-seed = " << spec.texture_seed << '\n';
    out << "cutoff = " << spec.texture_cutoff << '\n';
    out << "sigma = " << spec.noise.sigma << '\n';
    out << "seed = " << spec.noise.seed << '\n';
    switch (spec.degradation) {
        case DegradationKind::None: out << "degradation = none\n"; break;
        case DegradationKind::GaussianNoise: out << "degradation = noise\n"; break;
        case DegradationKind::BoxBlur: out << "degradation = blur\nblur-radius = " << spec.blur_radius << '\n'; break;
    }
    return out.str();
}

fs::path write_synth(const SynthSpec& spec, const SynthOutput& output, const fs::path& directory) {
    fs::create_directories(directory / "clean");
    const int n = spec.neighbors;
    for (int j = -n; j <= n; ++j) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%03d.png", j + n);
        save_frame(output.sequence.at(j), directory / name);
    }
    for (const auto& [k, field] : output.gt_long_fields) {
        write_field(field, directory / ("flow_k" + std::string(k > 0 ? "+" : "") + std::to_string(k) + ".mfld"));
    }
    save_frame(output.clean_reference, directory / "clean" / "reference.png");

    const fs::path manifest = directory / "manifest.txt";
    std::ofstream out(manifest);
    if (!out) throw InputError("cannot write " + manifest.string());
    out << describe(spec);
    out << "frames = frame_%03d.png\n";
    out << "reference = clean/reference.png\n";
    return manifest;
}

}  // namespace talign
