#pragma once

#include <span>

#include "talign/frame.hpp"
#include "talign/motion.hpp"

namespace talign {

// out(x, y) = source(x + dx, y + dy), bilinear, edge-clamped.
Frame backward_warp(const Frame& source, const MotionField& field);

/// result(x) = inner(x) + outer(x + inner(x)).
/// `inner` maps the reference grid to an intermediate frame and `outer` maps
/// the intermediate frame onward.
MotionField compose_fields(const MotionField& outer, const MotionField& inner);

/// Applies a chain of hop fields in order: chain[0] is applied to `source`
/// first, the last entry produces the result on the reference grid.
Frame apply_chain(const Frame& source, std::span<const MotionField> chain);

// Single field equivalent of `apply_chain`.
MotionField chain_displacement(std::span<const MotionField> chain);

}  // namespace talign
