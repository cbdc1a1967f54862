#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "support.hpp"
#include "talign/eval.hpp"
#include "talign/image_io.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

Result run_cli(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + TALIGN_BIN + " " + args + " 2>&1";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) r.out.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

// Value of `metric name=<name> value=<v>` in `text`; NaN when absent.
double metric(const std::string& text, const std::string& name) {
    const std::string key = "metric name=" + name + " value=";
    const auto pos = text.find(key);
    return pos == std::string::npos ? std::nan("") : std::stod(text.substr(pos + key.size()));
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

std::string pattern(const fs::path& dir) { return "'" + (dir / "frame_%03d.png").string() + "'"; }

}  // namespace

TEST_CASE("synth writes frames, fields and a manifest deterministically") {
    const fs::path dir = support::scratch_dir("cli_synth");
    const std::string args = "synth --size 256x256 --n 2 --motion const:4,0 --sigma 20 --seed 7 --out ";
    const Result r = run_cli(args + (dir / "a").string());
    REQUIRE(r.code == 0);
    CHECK(r.out == (dir / "a" / "manifest.txt").string() + "\n");
    int pngs = 0, fields = 0;
    for (const auto& e : fs::directory_iterator(dir / "a")) {
        pngs += e.path().extension() == ".png";
        fields += e.path().extension() == ".mfld";
    }
    CHECK(pngs == 5);
    CHECK(fields == 4);

    REQUIRE(run_cli(args + (dir / "b").string()).code == 0);
    for (const auto& e : fs::directory_iterator(dir / "a")) {
        if (e.is_regular_file() && e.path().filename() != "manifest.txt") {
            CHECK(slurp(e.path()) == slurp(dir / "b" / e.path().filename()));
        }
    }

    // The manifest is itself a config file that reproduces the frames.
    REQUIRE(run_cli("synth --config " + (dir / "a" / "manifest.txt").string() + " --out " + (dir / "c").string())
                .code == 0);
    CHECK(slurp(dir / "a" / "frame_004.png") == slurp(dir / "c" / "frame_004.png"));
}

TEST_CASE("synth rejects invalid specs with exit 2") {
    const fs::path dir = support::scratch_dir("cli_synth_bad");
    Result r = run_cli("synth --size 64x64 --motion const:10,0 --out " + dir.string());
    CHECK(r.code == 2);
    CHECK(r.out.find("displacement bound violated") != std::string::npos);
    CHECK(run_cli("synth --size 64by64 --out " + dir.string()).code == 2);
    CHECK(run_cli("synth --motion warp:1 --out " + dir.string()).code == 2);
    CHECK(run_cli("synth").code == 2);
}

TEST_CASE("restore denoises a static clip") {
    const fs::path dir = support::scratch_dir("cli_restore_static");
    REQUIRE(run_cli("synth --size 96x96 --sigma 20 --seed 3 --out " + dir.string()).code == 0);
    const Result r = run_cli("restore " + pattern(dir) + " --schedule iterative --fusion arw --gt " +
                            (dir / "clean" / "reference.png").string() + " --out " + (dir / "out.png").string());
    REQUIRE(r.code == 0);
    const double gain = metric(r.out, "psnr") - metric(r.out, "psnr_single");
    CHECK(gain >= 6.0);
    CHECK(metric(r.out, "ssim") > metric(r.out, "ssim_single"));
    CHECK(fs::exists(dir / "out.png"));

    // The printed PSNR is the PSNR of the written image.
    const talign::Frame restored = talign::load_png(dir / "out.png");
    const talign::Frame gt = talign::load_png(dir / "clean" / "reference.png");
    CHECK(std::abs(talign::psnr(restored, gt) - metric(r.out, "psnr")) < 0.05);
}

TEST_CASE("restore without priors reproduces progressive output") {
    const fs::path dir = support::scratch_dir("cli_restore_prior");
    REQUIRE(run_cli("synth --size 96x96 --motion const:5,1.5 --sigma 10 --seed 4 --out " + dir.string()).code == 0);
    const std::string base = "restore " + pattern(dir) + " --diag --out ";
    const Result no_prior = run_cli(base + (dir / "a.png").string() + " --schedule iterative --no-prior");
    const Result prog = run_cli(base + (dir / "b.png").string() + " --schedule progressive");
    const Result iter = run_cli(base + (dir / "c.png").string() + " --schedule iterative");
    REQUIRE(no_prior.code == 0);
    REQUIRE(prog.code == 0);
    REQUIRE(iter.code == 0);
    CHECK(slurp(dir / "a.png") == slurp(dir / "b.png"));
    CHECK(lines(iter.out).size() == 6);
    CHECK(lines(prog.out).size() == 4);
    CHECK(run_cli(base + (dir / "d.png").string() + " --schedule progressive --no-prior").code == 2);
}

TEST_CASE("restore reports endpoint error against ground-truth fields") {
    const fs::path dir = support::scratch_dir("cli_restore_flow");
    REQUIRE(run_cli("synth --size 96x96 --motion const:3,0 --sigma 5 --seed 2 --out " + dir.string()).code == 0);
    const Result r = run_cli("restore " + pattern(dir) + " --gt-flow " + dir.string() + " --fusion mean --out " +
                            (dir / "o.png").string());
    REQUIRE(r.code == 0);
    CHECK(metric(r.out, "epe_mean") < 0.5);
    CHECK(metric(r.out, "epe_p90") >= metric(r.out, "epe_mean") - 1e-3);
}

TEST_CASE("restore input errors exit 2") {
    const fs::path dir = support::scratch_dir("cli_restore_bad");
    CHECK(run_cli("restore " + pattern(dir) + " --out " + (dir / "o.png").string()).code == 2);
    REQUIRE(run_cli("synth --size 64x64 --out " + (dir / "s").string()).code == 0);
    fs::remove(dir / "s" / "frame_004.png");
    CHECK(run_cli("restore " + pattern(dir / "s") + " --out " + (dir / "o.png").string()).code == 2);

    REQUIRE(run_cli("synth --size 64x64 --n 1 --out " + (dir / "t").string()).code == 0);
    REQUIRE(run_cli("synth --size 80x64 --n 1 --out " + (dir / "u").string()).code == 0);
    const Result mismatch = run_cli("restore " + pattern(dir / "t") + " --gt " +
                                   (dir / "u" / "clean" / "reference.png").string());
    CHECK(mismatch.code == 2);
    CHECK(run_cli("restore " + pattern(dir / "t") + " --lk-window 4").code == 2);
    CHECK(run_cli("restore " + pattern(dir / "t") + " --alpha 1").code == 2);
    CHECK(run_cli("restore " + pattern(dir / "t") + " --schedule greedy").code == 2);
}

TEST_CASE("restore reads a key = value config") {
    const fs::path dir = support::scratch_dir("cli_config");
    REQUIRE(run_cli("synth --size 64x64 --n 1 --motion const:1,0 --sigma 5 --out " + dir.string()).code == 0);
    std::ofstream(dir / "run.cfg") << "# comparison run\nschedule = progressive\nfusion = mean\nprior-weight = 0.5\n"
                                      "exclude-reference = false\n";
    const std::string cfg = " --config " + (dir / "run.cfg").string();
    CHECK(run_cli("restore " + pattern(dir) + cfg + " --out " + (dir / "a.png").string()).code == 0);
    CHECK(run_cli("restore " + pattern(dir) + " --schedule progressive --fusion mean --out " +
                 (dir / "b.png").string())
              .code == 0);
    CHECK(slurp(dir / "a.png") == slurp(dir / "b.png"));

    // Command-line values win over the file.
    const Result over = run_cli("restore " + pattern(dir) + cfg + " --schedule iterative --diag");
    CHECK(over.code == 0);
    CHECK(lines(over.out).size() == 2);

    std::ofstream(dir / "bad.cfg") << "schedul = iterative\n";
    CHECK(run_cli("restore " + pattern(dir) + " --config " + (dir / "bad.cfg").string()).code == 2);
    CHECK(run_cli("restore " + pattern(dir) + " --config " + (dir / "missing.cfg").string()).code == 2);
}

TEST_CASE("bench table shape and formats") {
    const Result csv = run_cli("bench --bins 4 --seeds 1 --size 64 --format csv");
    REQUIRE(csv.code == 0);
    const auto rows = lines(csv.out);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == "bin,schedule,fusion,psnr_aligned,psnr_restored,epe_mean,epe_p90");
    CHECK(rows[1].rfind("4,independent,arw,", 0) == 0);
    CHECK(rows[2].rfind("4,progressive,arw,", 0) == 0);
    CHECK(rows[3].rfind("4,iterative,arw,", 0) == 0);

    const Result text = run_cli("bench --bins 4 --seeds 1 --size 64");
    REQUIRE(text.code == 0);
    CHECK(lines(text.out).size() == 4);
    CHECK(text.out.find("psnr_restored") != std::string::npos);

    const Result both = run_cli("bench --bins 2,4 --seeds 1 --size 64 --schedules iterative --fusions arw,mean "
                               "--format csv");
    REQUIRE(both.code == 0);
    const auto both_rows = lines(both.out);
    REQUIRE(both_rows.size() == 5);
    CHECK(both_rows[1].rfind("2,iterative,arw,", 0) == 0);
    CHECK(both_rows[2].rfind("2,iterative,mean,", 0) == 0);
    CHECK(both_rows[4].rfind("4,iterative,mean,", 0) == 0);
}

TEST_CASE("bench is deterministic regardless of worker count") {
    const std::string args = "bench --bins 2,6 --seeds 2 --size 64 --seed 11 --format csv";
    const Result one = run_cli(args, "TA_THREADS=1");
    const Result three = run_cli(args, "TA_THREADS=3");
    REQUIRE(one.code == 0);
    CHECK(one.out == three.out);
    CHECK(run_cli("bench --bins 2,6 --seeds 2 --size 64 --seed 12 --format csv").out != one.out);
}

TEST_CASE("independent alignment error grows with motion") {
    const Result r = run_cli("bench --bins 1,2,4,6,8,10 --schedules independent --seeds 2 --size 96 --format csv");
    REQUIRE(r.code == 0);
    const auto rows = lines(r.out);
    REQUIRE(rows.size() == 7);
    double previous = -1.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        std::vector<std::string> cols;
        std::istringstream in(rows[i]);
        for (std::string c; std::getline(in, c, ',');) cols.push_back(c);
        REQUIRE(cols.size() == 7);
        const double epe = std::stod(cols[5]);
        CHECK(epe >= previous);
        previous = epe;
    }
}

TEST_CASE("bench rejects invalid bins") {
    CHECK(run_cli("bench --bins 0").code == 2);
    CHECK(run_cli("bench --bins -3,4").code == 2);
    CHECK(run_cli("bench --bins 40 --seeds 1").code == 2);
    CHECK(run_cli("bench --bins abc").code == 2);
}

TEST_CASE("eval prints metric lines") {
    const fs::path dir = support::scratch_dir("cli_eval");
    REQUIRE(run_cli("synth --size 64x64 --n 1 --motion const:2,0 --sigma 10 --out " + dir.string()).code == 0);
    const std::string a = (dir / "frame_001.png").string(), b = (dir / "clean" / "reference.png").string();

    Result r = run_cli("eval " + a + " " + a);
    REQUIRE(r.code == 0);
    CHECK(lines(r.out)[0] == "metric name=psnr value=99.0000");

    r = run_cli("eval " + a + " " + b + " --luma");
    REQUIRE(r.code == 0);
    int psnr_lines = 0;
    for (const auto& l : lines(r.out)) psnr_lines += l.rfind("metric name=psnr ", 0) == 0;
    CHECK(psnr_lines == 1);
    const double luma = talign::psnr(talign::rgb_to_luma(talign::load_png(a)), talign::rgb_to_luma(talign::load_png(b)));
    CHECK(std::abs(metric(r.out, "psnr") - luma) < 1e-4);

    const std::string field = (dir / "flow_k+1.mfld").string();
    r = run_cli("eval --flow " + field + " --gt-flow " + field);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("metric name=epe_mean value=0.0000") != std::string::npos);
    CHECK(run_cli("eval --flow " + field + " --gt-flow " + (dir / "flow_k-1.mfld").string()).out.find(
              "epe_mean value=4.0000") != std::string::npos);

    const fs::path other = support::scratch_dir("cli_eval_other");
    REQUIRE(run_cli("synth --size 80x64 --n 1 --out " + other.string()).code == 0);
    CHECK(run_cli("eval " + a + " " + (other / "frame_001.png").string()).code == 2);
    CHECK(run_cli("eval --flow " + field + " --gt-flow " + (other / "flow_k+1.mfld").string()).code == 2);
    CHECK(run_cli("eval " + a).code == 2);
    CHECK(run_cli("eval " + a + " " + (dir / "nope.png").string()).code == 2);
}
