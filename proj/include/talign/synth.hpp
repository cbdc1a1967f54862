#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>

#include "talign/frame.hpp"
#include "talign/motion.hpp"

namespace talign {

namespace motion_model {

// Translation by v pixels per hop.
struct Constant {
    Vec2 velocity;
};

// Cumulative offset at frame j: v0 * j + accel * j^2 / 2.
struct Drift {
    Vec2 velocity;
    Vec2 acceleration;
};

// Rotation by `degrees_per_hop` about `center` (pixel coordinates).
struct Rotation {
    Vec2 center;
    double degrees_per_hop = 0.0;
};

}  // namespace motion_model

using MotionModel = std::variant<motion_model::Constant, motion_model::Drift, motion_model::Rotation>;

/// Where the scene point at reference position p sits in frame j.
/// Frame j is generated as F_j(q) = T(position^-1(j, q)).
struct Point2 {
    double x = 0.0;
    double y = 0.0;
};
Point2 scene_position(const MotionModel& model, int frame, Point2 p);
Point2 scene_position_inverse(const MotionModel& model, int frame, Point2 q);

// Largest per-hop displacement magnitude a spec may declare.
inline constexpr double kMaxHopDisplacement = 32.0;

/// Parses `const:vx,vy`, `drift:vx,vy,ax,ay` or `rot:cx,cy,degrees`.
/// For `rot`, the center may be omitted (`rot:degrees`) and defaults to the
/// frame center.
MotionModel parse_motion(const std::string& text, int width, int height);
std::string format_motion(const MotionModel& model);

// Largest per-hop displacement over a width x height grid, hops up to |n|.
double max_hop_displacement(const MotionModel& model, int width, int height, int neighbors);

enum class DegradationKind { None, GaussianNoise, BoxBlur };

struct SynthSpec {
    int width = 128;
    int height = 128;
    int neighbors = 2;
    MotionModel motion = motion_model::Constant{};
    std::uint64_t texture_seed = 1;
    double texture_cutoff = 0.25;
    NoiseSpec noise;
    DegradationKind degradation = DegradationKind::GaussianNoise;
    int blur_radius = 1;  // BoxBlur only; noise is still added when sigma > 0

    void validate() const;
};

struct SynthOutput {
    Frame clean_reference;
    Sequence sequence;                           // degraded
    Sequence clean;                              // undegraded, same geometry
    std::map<int, MotionField> gt_hop_fields;    // i -> a_i on frame (i - sign i)'s grid
    std::map<int, MotionField> gt_long_fields;   // k -> A_k on the reference grid
};

/// Band-limited RGB texture: Gaussian white noise on the integer lattice
/// convolved with a Gaussian of sigma = sqrt(2 ln 2) / (pi * cutoff) pixels,
/// which puts the half-power point at cutoff * Nyquist. Each channel is mapped
/// affinely onto [0.1, 0.9].
Frame texture(std::uint64_t seed, int width, int height, double cutoff);

// Gaussian sigma in pixels for a normalized cutoff.
double texture_sigma(double cutoff);

/// Generates frames by evaluating the continuous texture under each frame's
/// cumulative transform (no chained resampling), then degrades each frame
/// with a seed derived from spec.noise.seed and the frame offset.
SynthOutput generate(const SynthSpec& spec);

// Flat `key = value` description of a spec (also parsed by the CLI).
std::string describe(const SynthSpec& spec);

/// Writes frame_%03d.png (index = offset + N), flow_k<+/-k>.mfld for every
/// gt_long field, clean/reference.png and manifest.txt. Returns the manifest path.
std::filesystem::path write_synth(const SynthSpec& spec, const SynthOutput& output,
                                  const std::filesystem::path& directory);

}  // namespace talign
