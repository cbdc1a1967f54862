#include <doctest.h>

#include <cmath>
#include <fstream>

#include "support.hpp"
#include "talign/errors.hpp"
#include "talign/frame.hpp"
#include "talign/image_io.hpp"

using namespace talign;

TEST_CASE("frame stores planar samples and clamps reads at the edge") {
    Frame f(4, 3, 2, 0.25f);
    CHECK(f.size() == 24);
    f.at(1, 3, 2) = 0.75f;
    CHECK(f.plane(1)[2 * 4 + 3] == 0.75f);
    CHECK(f.clamped(1, 10, 10) == 0.75f);
    CHECK(f.clamped(0, -5, -5) == 0.25f);
    CHECK_THROWS_AS(Frame(0, 3, 1), InputError);
}

TEST_CASE("sequence requires an odd frame count and matching shapes") {
    std::vector<Frame> three(3, Frame(8, 8, 3));
    Sequence s(three);
    CHECK(s.neighbors() == 1);
    CHECK(&s.reference() == &s.at(0));

    CHECK_THROWS_AS(Sequence(std::vector<Frame>(2, Frame(8, 8, 3))), InputError);
    CHECK_THROWS_AS(Sequence(std::vector<Frame>(1, Frame(8, 8, 3))), InputError);
    std::vector<Frame> mixed{Frame(64, 64, 3), Frame(32, 64, 3), Frame(64, 64, 3)};
    CHECK_THROWS_AS(Sequence{mixed}, DimensionError);
}

TEST_CASE("luma uses full-range BT.601 weights") {
    Frame rgb(3, 1, 3);
    const float px[3][3] = {{1, 1, 1}, {1, 0, 0}, {0, 0, 0}};
    for (int x = 0; x < 3; ++x)
        for (int c = 0; c < 3; ++c) rgb.at(c, x, 0) = px[x][c];
    const Frame y = rgb_to_luma(rgb);
    CHECK(y.channels() == 1);
    CHECK(y.at(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(y.at(0, 1, 0) == doctest::Approx(0.299).epsilon(1e-6));
    CHECK(y.at(0, 2, 0) == 0.0f);
    CHECK_THROWS_AS(rgb_to_luma(Frame(2, 2, 1)), InputError);
}

TEST_CASE("luma commutes with convex combinations") {
    const Frame a = support::random_frame(16, 16, 3, 1), b = support::random_frame(16, 16, 3, 2);
    const float alpha = 0.3f;
    Frame mix(16, 16, 3);
    for (std::size_t i = 0; i < mix.size(); ++i) mix.samples()[i] = alpha * a.samples()[i] + (1 - alpha) * b.samples()[i];
    const Frame la = rgb_to_luma(a), lb = rgb_to_luma(b), lm = rgb_to_luma(mix);
    for (std::size_t i = 0; i < lm.size(); ++i) {
        CHECK(std::abs(lm.samples()[i] - (alpha * la.samples()[i] + (1 - alpha) * lb.samples()[i])) < 1e-6);
    }
}

TEST_CASE("descriptor gradient channels") {
    SUBCASE("constant frame has zero gradients") {
        const Frame d = to_descriptor(Frame(8, 8, 3, 0.4f));
        REQUIRE(d.channels() == 5);
        for (int c = 3; c < 5; ++c)
            for (float v : d.plane(c)) CHECK(v == 0.0f);
        CHECK(d.at(0, 3, 3) == 0.4f);
    }
    SUBCASE("horizontal ramp gives half the slope") {
        Frame ramp(10, 6, 3);
        const float slope = 0.05f;
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < 6; ++y)
                for (int x = 0; x < 10; ++x) ramp.at(c, x, y) = slope * x;
        const Frame d = to_descriptor(ramp);
        for (int y = 0; y < 6; ++y) {
            for (int x = 1; x < 9; ++x) {
                CHECK(d.at(3, x, y) == doctest::Approx(0.5 * slope).epsilon(1e-5));
                CHECK(d.at(4, x, y) == doctest::Approx(0.0).epsilon(1e-6));
            }
        }
    }
    SUBCASE("one pixel checkerboard has zero interior x gradient") {
        Frame board(8, 8, 3);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) board.at(c, x, y) = static_cast<float>((x + y) % 2);
        const Frame d = to_descriptor(board);
        for (int y = 1; y < 7; ++y)
            for (int x = 1; x < 7; ++x) CHECK(d.at(3, x, y) == 0.0f);
    }
}

TEST_CASE("gaussian noise statistics and determinism") {
    const Frame clean(256, 256, 3, 0.5f);
    CHECK(add_gaussian_noise(clean, {0.0, 9}) == clean);

    const Frame noisy = add_gaussian_noise(clean, {20.0, 42});
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < noisy.size(); ++i) {
        const double d = double(noisy.samples()[i]) - clean.samples()[i];
        sum += d;
        sum2 += d * d;
    }
    const double n = static_cast<double>(noisy.size());
    const double std = std::sqrt(sum2 / n - (sum / n) * (sum / n));
    CHECK(std >= 0.0768);
    CHECK(std <= 0.0800);

    CHECK(add_gaussian_noise(clean, {20.0, 42}) == noisy);
    CHECK_FALSE(add_gaussian_noise(clean, {20.0, 43}) == noisy);
    CHECK_THROWS_AS(add_gaussian_noise(clean, {-1.0, 1}), InputError);
}

TEST_CASE("generator sequence is pinned") {
    // Independent transcription of the documented xorshift64* recurrence.
    auto splitmix = [](std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    };
    std::uint64_t state = splitmix(7);
    Xorshift64Star rng(7);
    for (int i = 0; i < 100; ++i) {
        state ^= state >> 12;
        state ^= state << 25;
        state ^= state >> 27;
        CHECK(rng.next() == state * 0x2545F4914F6CDD1Dull);
    }

    Xorshift64Star a(11), b(11);
    const double u1 = 1.0 - b.uniform(), u2 = b.uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    CHECK(a.normal() == doctest::Approx(r * std::cos(2 * M_PI * u2)).epsilon(1e-12));
    CHECK(a.normal() == doctest::Approx(r * std::sin(2 * M_PI * u2)).epsilon(1e-12));
}

TEST_CASE("png round trip is lossless on the 8-bit grid") {
    const auto dir = support::scratch_dir("frame_png");
    Frame rgb(7, 5, 3);
    int k = 0;
    for (float& s : rgb.samples()) s = static_cast<float>((k++ * 37) % 256) / 255.0f;
    save_frame(rgb, dir / "rgb.png");
    CHECK(load_png(dir / "rgb.png") == rgb);

    Frame gray(4, 4, 1);
    gray.at(0, 0, 0) = 1.0f;
    gray.at(0, 1, 0) = 0.5f;
    gray.at(0, 2, 0) = 2.0f;
    gray.at(0, 3, 0) = -1.0f;
    save_frame(gray, dir / "gray.png");
    const Frame back = load_png(dir / "gray.png");
    CHECK(back.at(0, 0, 0) == 1.0f);
    CHECK(back.at(0, 1, 0) == 128.0f / 255.0f);
    CHECK(back.at(0, 2, 0) == 1.0f);
    CHECK(back.at(0, 3, 0) == 0.0f);

    CHECK_THROWS_AS(save_frame(Frame(4, 4, 5), dir / "five.png"), InputError);
    CHECK_THROWS_AS(load_png(dir / "missing.png"), InputError);
}

TEST_CASE("load_sequence from pattern and directory") {
    const auto dir = support::scratch_dir("frame_seq");
    for (int i = 0; i < 5; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "f_%03d.png", i);
        save_frame(Frame(64, 64, 3, i / 10.0f), dir / name);
    }
    const Sequence s = load_sequence((dir / "f_%03d.png").string(), SequenceKind::PngSequence);
    CHECK(s.neighbors() == 2);
    CHECK(s.reference().channels() == 3);
    CHECK(s.at(-2).at(0, 0, 0) == 0.0f);

    const Sequence from_dir = load_sequence(dir.string(), SequenceKind::PngSequence);
    CHECK(from_dir.at(2) == s.at(2));

    std::filesystem::remove(dir / "f_004.png");
    CHECK_THROWS_AS(load_sequence((dir / "f_%03d.png").string(), SequenceKind::PngSequence), InputError);

    save_frame(Frame(32, 64, 3), dir / "f_004.png");
    save_frame(Frame(64, 64, 3), dir / "f_005.png");
    save_frame(Frame(64, 64, 3), dir / "f_006.png");
    CHECK_THROWS_AS(load_sequence((dir / "f_%03d.png").string(), SequenceKind::PngSequence), InputError);
    CHECK_THROWS_AS(load_sequence((dir / "nothing").string(), SequenceKind::PngSequence), InputError);
}

namespace {

void write_y4m(const std::filesystem::path& path, const std::string& colorspace, int frames, unsigned char y,
               unsigned char u, unsigned char v) {
    std::ofstream out(path, std::ios::binary);
    out << "YUV4MPEG2 W4 H2 F25:1 Ip A1:1 " << colorspace << "\n";
    for (int f = 0; f < frames; ++f) {
        out << "FRAME\n";
        for (int i = 0; i < 8; ++i) out.put(static_cast<char>(y));
        for (int i = 0; i < 2; ++i) out.put(static_cast<char>(u));
        for (int i = 0; i < 2; ++i) out.put(static_cast<char>(v));
    }
}

}  // namespace

TEST_CASE("y4m reader converts 4:2:0 to RGB") {
    const auto dir = support::scratch_dir("frame_y4m");
    write_y4m(dir / "gray.y4m", "C420jpeg", 3, 128, 128, 128);
    const Sequence s = load_sequence((dir / "gray.y4m").string(), SequenceKind::Y4m);
    CHECK(s.neighbors() == 1);
    for (int c = 0; c < 3; ++c) CHECK(s.reference().at(c, 1, 1) == doctest::Approx(128.0 / 255.0).epsilon(1e-6));

    write_y4m(dir / "tint.y4m", "C420", 1, 120, 100, 160);
    const Frame tint = read_y4m(dir / "tint.y4m").front();
    CHECK(tint.at(0, 3, 1) == doctest::Approx((120 + 1.402 * 32) / 255.0).epsilon(1e-5));
    CHECK(tint.at(1, 3, 1) == doctest::Approx((120 - 0.344136 * -28 - 0.714136 * 32) / 255.0).epsilon(1e-5));
    CHECK(tint.at(2, 3, 1) == doctest::Approx((120 + 1.772 * -28) / 255.0).epsilon(1e-5));

    write_y4m(dir / "clip.y4m", "C420", 1, 10, 0, 128);
    CHECK(read_y4m(dir / "clip.y4m").front().at(2, 0, 0) == 0.0f);

    write_y4m(dir / "deep.y4m", "C420p10", 3, 0, 0, 0);
    CHECK_THROWS_AS(read_y4m(dir / "deep.y4m"), InputError);
    write_y4m(dir / "even.y4m", "C420", 2, 0, 0, 0);
    CHECK_THROWS_AS(load_sequence((dir / "even.y4m").string(), SequenceKind::Y4m), InputError);
}
