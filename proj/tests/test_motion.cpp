#include <doctest.h>

#include <cmath>
#include <fstream>

#include "support.hpp"
#include "talign/errors.hpp"
#include "talign/eval.hpp"
#include "talign/motion.hpp"
#include "talign/synth.hpp"

using namespace talign;

namespace {

Frame textured(std::uint64_t seed, int size = 96) { return to_descriptor(texture(seed, size, size, 0.25)); }

// Frames of a noisy constant translation plus the hop ground truth.
struct Pair {
    Frame source, target;
    MotionField gt;
};

Pair translated_pair(Vec2 v, double sigma, std::uint64_t seed) {
    SynthSpec spec;
    spec.width = spec.height = 96;
    spec.neighbors = 1;
    spec.motion = motion_model::Constant{v};
    spec.texture_seed = seed;
    spec.noise = {sigma, seed + 100};
    const SynthOutput out = generate(spec);
    return {to_descriptor(out.sequence.at(1)), to_descriptor(out.sequence.at(0)), out.gt_hop_fields.at(1)};
}

}  // namespace

TEST_CASE("block_cost closed forms") {
    const Frame t = textured(3);
    MotionParams p;
    CHECK(block_cost(t, t, {8, 8}, {0, 0}, p) == 0.0);

    const Frame zero(32, 32, 3, 0.25f), half(32, 32, 3, 0.75f);
    CHECK(block_cost(half, zero, {0, 0}, {5, -2}, p) == doctest::Approx(0.5));
    CHECK(block_cost(half, zero, {24, 24}, {0.5f, 0.25f}, p) == doctest::Approx(0.5));

    const Frame s = support::shifted(t, -1, 0);  // s(x) = t(x - 1), so t(x) = s(x + 1)
    CHECK(block_cost(s, t, {16, 16}, {1, 0}, p) == 0.0);
    CHECK(block_cost(s, t, {16, 16}, {0, 0}, p) > 0.0);

    CHECK_THROWS_AS(block_cost(t, t, {90, 0}, {0, 0}, p), InputError);
    CHECK_THROWS_AS(block_cost(t, t, {-1, 0}, {0, 0}, p), InputError);
}

TEST_CASE("block origins tile the frame") {
    CHECK(block_starts(32, 8) == std::vector<int>{0, 8, 16, 24});
    CHECK(block_starts(30, 8) == std::vector<int>{0, 8, 16, 22});
    CHECK(block_starts(8, 8) == std::vector<int>{0});
}

TEST_CASE("identical frames give a zero field") {
    const Frame t = textured(5);
    const MotionField f = estimate(t, t, MotionParams{});
    CHECK(f.max_abs_component() == 0.0f);

    const Frame flat(40, 40, 3, 0.5f);
    const MotionEstimate e = estimate_motion(flat, flat, MotionParams{});
    for (const auto& b : e.blocks) CHECK(b.vector == Vec2{0, 0});
    CHECK(e.field.max_abs_component() == 0.0f);
}

TEST_CASE("integer translations are recovered exactly") {
    const Frame t = textured(7);
    for (auto [dx, dy] : {std::pair{3, 0}, std::pair{-2, 5}, std::pair{0, -7}}) {
        const Frame s = support::shifted(t, -dx, -dy);
        const MotionEstimate e = estimate_motion(s, t, MotionParams{});
        const MotionParams p;
        for (const auto& b : e.blocks) {
            const bool clear = b.origin.x - p.search_radius >= 0 && b.origin.y - p.search_radius >= 0 &&
                               b.origin.x + p.block_size + p.search_radius <= t.width() &&
                               b.origin.y + p.block_size + p.search_radius <= t.height();
            if (clear) CHECK(b.vector == Vec2{float(dx), float(dy)});
        }
        for (int y = 20; y < 76; ++y)
            for (int x = 20; x < 76; ++x) CHECK(e.field.at(x, y) == Vec2{float(dx), float(dy)});
    }
}

TEST_CASE("subpixel translation is refined by the polish") {
    const Pair pair = translated_pair({3.5f, 1.25f}, 0.0, 11);
    const MotionField f = estimate(pair.source, pair.target, MotionParams{});
    const EndpointError e = endpoint_error(f, pair.gt, 16);
    CHECK(e.mean < 0.05);

    MotionParams integer_only;
    integer_only.lk_iterations = 0;
    const EndpointError coarse = endpoint_error(estimate(pair.source, pair.target, integer_only), pair.gt, 16);
    CHECK(e.mean < coarse.mean);
}

TEST_CASE("prior is never beaten by the integer stage") {
    const Pair pair = translated_pair({6.0f, -2.0f}, 10.0, 21);
    MotionField prior(96, 96);
    Xorshift64Star rng(99);
    for (auto& v : prior.dx()) v = static_cast<float>(6.0 + 3.0 * rng.normal());
    for (auto& v : prior.dy()) v = static_cast<float>(-2.0 + 3.0 * rng.normal());

    const MotionEstimate e = estimate_motion(pair.source, pair.target, MotionParams{}, &prior);
    for (const auto& b : e.blocks) {
        CHECK(std::isfinite(b.prior_cost));
        CHECK(b.cost <= b.prior_cost);
    }
    const std::vector<BlockMatch> scored = score_field(pair.source, pair.target, prior, MotionParams{});
    REQUIRE(scored.size() == e.blocks.size());
    for (std::size_t i = 0; i < scored.size(); ++i) CHECK(scored[i].cost == e.blocks[i].prior_cost);

    const MotionEstimate plain = estimate_motion(pair.source, pair.target, MotionParams{});
    for (const auto& b : plain.blocks) CHECK(std::isnan(b.prior_cost));
}

TEST_CASE("ground truth prior does not increase endpoint error") {
    for (std::uint64_t seed : {31u, 32u, 33u}) {
        const Pair pair = translated_pair({4.3f, 2.6f}, 20.0, seed);
        const MotionField without = estimate(pair.source, pair.target, MotionParams{});
        const MotionField with = estimate(pair.source, pair.target, MotionParams{}, pair.gt);
        CHECK(endpoint_error(with, pair.gt, 16).mean <= endpoint_error(without, pair.gt, 16).mean);
    }
}

TEST_CASE("estimation is deterministic") {
    const Pair pair = translated_pair({2.5f, 1.0f}, 10.0, 41);
    CHECK(estimate(pair.source, pair.target, MotionParams{}) == estimate(pair.source, pair.target, MotionParams{}));
}

TEST_CASE("estimate rejects bad inputs") {
    const Frame t = textured(1);
    CHECK_THROWS_AS(estimate(t, Frame(64, 64, 5), MotionParams{}), DimensionError);
    CHECK_THROWS_AS(estimate(t, t, MotionParams{}, MotionField(10, 10)), DimensionError);
    CHECK_THROWS_AS(estimate(Frame(6, 6, 3), Frame(6, 6, 3), MotionParams{}), InputError);

    MotionParams p;
    p.block_size = 3;
    CHECK_THROWS_AS(estimate(t, t, p), InputError);
    p = {};
    p.search_radius = 0;
    CHECK_THROWS_AS(estimate(t, t, p), InputError);
    p = {};
    p.pyramid_levels = 0;
    CHECK_THROWS_AS(estimate(t, t, p), InputError);
}

TEST_CASE("motion fields round trip through the binary format") {
    const auto dir = support::scratch_dir("motion_mfld");
    MotionField f(5, 3);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 5; ++x) f.set(x, y, {x * 0.5f - 1.0f, y * -1.25f});
    write_field(f, dir / "f.mfld");
    CHECK(read_field(dir / "f.mfld") == f);

    std::ifstream in(dir / "f.mfld", std::ios::binary);
    char header[12];
    in.read(header, 12);
    CHECK(std::string(header, 4) == "MFLD");
    CHECK(static_cast<unsigned char>(header[4]) == 5);
    CHECK(static_cast<unsigned char>(header[8]) == 3);
    CHECK(std::filesystem::file_size(dir / "f.mfld") == 12 + 2 * 15 * 4);

    std::ofstream(dir / "bad.mfld", std::ios::binary) << "NOPE";
    CHECK_THROWS_AS(read_field(dir / "bad.mfld"), InputError);
}
