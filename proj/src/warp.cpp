#include "talign/warp.hpp"

#include "talign/errors.hpp"

namespace talign {

Frame backward_warp(const Frame& source, const MotionField& field) {
    if (!field.same_shape(source)) throw DimensionError("backward_warp: field does not match source dimensions");
    Frame out(source.width(), source.height(), source.channels());
    for (int c = 0; c < source.channels(); ++c) {
        for (int y = 0; y < source.height(); ++y) {
            for (int x = 0; x < source.width(); ++x) {
                const Vec2 d = field.at(x, y);
                out.at(c, x, y) = sample_bilinear(source, c, static_cast<float>(x) + d.x, static_cast<float>(y) + d.y);
            }
        }
    }
    return out;
}

MotionField compose_fields(const MotionField& outer, const MotionField& inner) {
    if (!outer.same_shape(inner)) throw DimensionError("compose_fields: dimension mismatch");
    MotionField out(inner.width(), inner.height());
    for (int y = 0; y < inner.height(); ++y) {
        for (int x = 0; x < inner.width(); ++x) {
            const Vec2 a = inner.at(x, y);
            const Vec2 b = outer.sample(static_cast<float>(x) + a.x, static_cast<float>(y) + a.y);
            out.set(x, y, {a.x + b.x, a.y + b.y});
        }
    }
    return out;
}

Frame apply_chain(const Frame& source, std::span<const MotionField> chain) {
    Frame carried = source;
    for (const MotionField& hop : chain) carried = backward_warp(carried, hop);
    return carried;
}

MotionField chain_displacement(std::span<const MotionField> chain) {
    if (chain.empty()) throw InputError("chain_displacement: empty chain");
    // The last hop lands on the reference grid, so it is the innermost field.
    MotionField total = chain.front();
    for (std::size_t j = 1; j < chain.size(); ++j) total = compose_fields(total, chain[j]);
    return total;
}

}  // namespace talign
