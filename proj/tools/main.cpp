#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <filesystem>
#include <iostream>
#include <string>

#include "pipeline.hpp"
#include "talign/errors.hpp"
#include "talign/eval.hpp"
#include "talign/image_io.hpp"
#include "talign/parallel.hpp"
#include "talign/synth.hpp"
#include "talign/warp.hpp"

namespace fs = std::filesystem;
using namespace talign;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitInternal = 3;

void add_motion_options(CLI::App& app, MotionParams& p) {
    app.add_option("--block-size", p.block_size, "block matching block size")->capture_default_str();
    app.add_option("--search-radius", p.search_radius, "integer search radius in pixels")->capture_default_str();
    app.add_option("--lk-iterations", p.lk_iterations, "Lucas-Kanade iterations per level")->capture_default_str();
    app.add_option("--lk-window", p.lk_window, "Lucas-Kanade window side (odd)")->capture_default_str();
    app.add_option("--pyramid-levels", p.pyramid_levels, "Lucas-Kanade pyramid levels")->capture_default_str();
    app.add_option("--prior-weight", p.prior_weight, "pull toward the prior field during refinement")
        ->capture_default_str();
    app.add_option("--max-displacement", p.max_displacement, "bound on any vector component")->capture_default_str();
}

void add_fusion_options(CLI::App& app, FusionParams& p, std::string& reduce, bool& exclude_reference) {
    app.add_option("--alpha", p.alpha, "consistency exponent (< 0)")->capture_default_str();
    app.add_option("--ref-weight", p.reference_weight, "weight of the reference frame")->capture_default_str();
    app.add_flag("--exclude-reference", exclude_reference, "leave the reference frame out of the fused sum");
    app.add_flag("--average-includes-reference", p.average_includes_reference,
                 "include the reference in the consistency average");
    app.add_option("--consistency-reduce", reduce, "channelwise or pixelwise")
        ->check(CLI::IsMember({"channelwise", "pixelwise"}))
        ->capture_default_str();
}

void finish_fusion(FusionParams& p, const std::string& reduce, bool exclude_reference) {
    p.consistency_reduce = *parse_consistency_reduce(reduce);
    p.include_reference = !exclude_reference;
    p.validate();
}

void print_metric(std::string_view name, double value) { std::cout << format_metric(name, value) << '\n'; }

Frame metric_view(const Frame& f, bool luma) { return luma && f.channels() == 3 ? rgb_to_luma(f) : f; }

Frame ssim_view(const Frame& f) { return f.channels() == 3 ? rgb_to_luma(f) : f; }

void require_same_image_shape(const Frame& a, const Frame& b, const std::string& what) {
    if (!a.same_shape(b)) {
        throw InputError(what + ": dimensions differ (" + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                         "x" + std::to_string(a.channels()) + " vs " + std::to_string(b.width()) + "x" +
                         std::to_string(b.height()) + "x" + std::to_string(b.channels()) + ")");
    }
}

std::string flow_name(int k) { return std::string("flow_k") + (k > 0 ? "+" : "") + std::to_string(k) + ".mfld"; }

// --- synth -----------------------------------------------------------------

struct SynthArgs {
    std::string size = "128x128";
    int neighbors = 2;
    std::string motion = "const:0,0";
    double sigma = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t texture_seed = 1;
    double cutoff = 0.25;
    std::string degradation = "noise";
    int blur_radius = 1;
    std::string out;
};

void parse_size(const std::string& text, int& width, int& height) {
    int consumed = 0;
    if (std::sscanf(text.c_str(), "%dx%d%n", &width, &height, &consumed) != 2 ||
        consumed != static_cast<int>(text.size())) {
        throw InputError("size must look like WxH, got '" + text + "'");
    }
}

int cmd_synth(const SynthArgs& a) {
    SynthSpec spec;
    parse_size(a.size, spec.width, spec.height);
    spec.neighbors = a.neighbors;
    spec.motion = parse_motion(a.motion, spec.width, spec.height);
    spec.noise = {a.sigma, a.seed};
    spec.texture_seed = a.texture_seed;
    spec.texture_cutoff = a.cutoff;
    spec.blur_radius = a.blur_radius;
    if (a.degradation == "none") spec.degradation = DegradationKind::None;
    else if (a.degradation == "blur") spec.degradation = DegradationKind::BoxBlur;
    else spec.degradation = DegradationKind::GaussianNoise;
    const SynthOutput out = generate(spec);
    std::cout << write_synth(spec, out, a.out).string() << '\n';
    return 0;
}

// --- restore ---------------------------------------------------------------

struct RestoreArgs {
    std::string input;
    std::string kind = "auto";
    std::string schedule = "iterative";
    std::string fusion = "arw";
    bool no_prior = false;
    int max_refines = -1;
    MotionParams motion;
    FusionParams fusion_params;
    std::string reduce = "channelwise";
    bool exclude_reference = false;
    std::string gt;
    std::string gt_flow;
    int crop = 0;
    int flow_crop = 16;
    bool luma = false;
    std::string out;
    bool diag = false;
    std::string dump_dir;
};

int cmd_restore(RestoreArgs& a) {
    cli::RestoreConfig config;
    config.schedule.kind = *parse_schedule(a.schedule);
    if (a.no_prior && config.schedule.kind != ScheduleKind::Iterative) {
        throw InputError("--no-prior is only valid with --schedule iterative");
    }
    config.schedule.use_prior = !a.no_prior;
    config.schedule.max_refines_per_index = a.max_refines;
    config.schedule.motion = a.motion;
    config.schedule.motion.validate();
    finish_fusion(a.fusion_params, a.reduce, a.exclude_reference);
    config.fusion = a.fusion_params;
    config.fusion_kind = *cli::parse_fusion(a.fusion);

    SequenceKind kind = SequenceKind::PngSequence;
    if (a.kind == "y4m" || (a.kind == "auto" && fs::path(a.input).extension() == ".y4m")) kind = SequenceKind::Y4m;
    const Sequence seq = load_sequence(a.input, kind);

    std::optional<Frame> gt;
    if (!a.gt.empty()) {
        gt = load_png(a.gt);
        require_same_image_shape(*gt, seq.reference(), "--gt");
    }
    std::map<int, MotionField> gt_fields;
    if (!a.gt_flow.empty()) {
        for (int k = -seq.neighbors(); k <= seq.neighbors(); ++k) {
            if (k == 0) continue;
            MotionField f = read_field(fs::path(a.gt_flow) / flow_name(k));
            if (!f.same_shape(seq.reference())) throw InputError("--gt-flow: field " + flow_name(k) + " has wrong size");
            gt_fields.emplace(k, std::move(f));
        }
    }
    const GroundTruth truth{{}, gt_fields, a.flow_crop};

    const cli::Restoration r = cli::restore(seq, config, gt_fields.empty() ? nullptr : &truth);
    if (!a.out.empty()) {
        if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
        save_frame(r.restored, a.out);
    }
    if (a.diag) {
        for (const ExecRecord& rec : r.alignment.diagnostics) std::cout << format_exec(rec) << '\n';
    }
    if (!a.dump_dir.empty() && r.fusion_diagnostics) {
        std::vector<int> offsets;
        for (const auto& [k, frame] : r.aligned) offsets.push_back(k);
        dump_fusion_diagnostics(*r.fusion_diagnostics, offsets, a.dump_dir);
    }
    if (gt) {
        const Frame restored = metric_view(r.restored, a.luma), single = metric_view(seq.reference(), a.luma);
        const Frame truth_view = metric_view(*gt, a.luma);
        print_metric("psnr", psnr_interior(restored, truth_view, a.crop));
        print_metric("ssim", ssim(ssim_view(r.restored), ssim_view(*gt)));
        print_metric("psnr_single", psnr_interior(single, truth_view, a.crop));
        print_metric("ssim_single", ssim(ssim_view(seq.reference()), ssim_view(*gt)));
    }
    if (!gt_fields.empty()) {
        double mean = 0.0, p90 = 0.0;
        for (const auto& [k, chain] : r.alignment.chains) {
            const EndpointError e = endpoint_error(chain_displacement(chain), gt_fields.at(k), a.flow_crop);
            mean += e.mean / static_cast<double>(gt_fields.size());
            p90 += e.p90 / static_cast<double>(gt_fields.size());
        }
        print_metric("epe_mean", mean);
        print_metric("epe_p90", p90);
    }
    return 0;
}

// --- bench -----------------------------------------------------------------

struct BenchArgs {
    cli::BenchConfig config;
    std::vector<std::string> schedules{"independent", "progressive", "iterative"};
    std::vector<std::string> fusions{"arw"};
    std::string reduce = "channelwise";
    bool exclude_reference = false;
    std::string format = "text";
};

int cmd_bench(BenchArgs& a) {
    a.config.schedules.clear();
    for (const std::string& s : a.schedules) a.config.schedules.push_back(*parse_schedule(s));
    a.config.fusions.clear();
    for (const std::string& f : a.fusions) a.config.fusions.push_back(*cli::parse_fusion(f));
    finish_fusion(a.config.fusion, a.reduce, a.exclude_reference);
    const auto rows = cli::run_bench(a.config, worker_count());
    std::cout << cli::format_bench(rows, a.format == "csv");
    return 0;
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
    std::vector<std::string> images;
    bool luma = false;
    int crop = 0;
    std::string flow;
    std::string gt_flow;
    int flow_crop = 16;
};

int cmd_eval(const EvalArgs& a) {
    if (a.images.empty() && a.flow.empty()) throw InputError("eval needs two images or --flow with --gt-flow");
    if (!a.images.empty()) {
        if (a.images.size() != 2) throw InputError("eval needs exactly two images");
        const Frame x = load_png(a.images[0]), y = load_png(a.images[1]);
        require_same_image_shape(x, y, "eval");
        print_metric("psnr", psnr_interior(metric_view(x, a.luma), metric_view(y, a.luma), a.crop));
        print_metric("ssim", ssim(ssim_view(x), ssim_view(y)));
    }
    if (!a.flow.empty()) {
        const MotionField f = read_field(a.flow), g = read_field(a.gt_flow);
        if (!f.same_shape(g)) throw InputError("eval: field dimensions differ");
        const EndpointError e = endpoint_error(f, g, a.flow_crop);
        print_metric("epe_mean", e.mean);
        print_metric("epe_p90", e.p90);
    }
    return 0;
}

std::string trim(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = text.find_last_not_of(" \t\r");
    std::string out = text.substr(first, last - first + 1);
    if (out.size() >= 2 && (out.front() == '"' || out.front() == '\'') && out.back() == out.front()) {
        out = out.substr(1, out.size() - 2);
    }
    return out;
}

/// Turns `key = value` lines of a --config file into `--key value` arguments
/// for `sub`. Keys also given on the command line are skipped so the command
/// line wins. Blank lines and `#` comments are ignored.
std::vector<std::string> config_arguments(const CLI::App& sub, const std::string& path,
                                          const std::vector<std::string>& given,
                                          const std::vector<std::string>& ignored_keys) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read config file " + path);
    std::vector<std::string> args;
    std::string line;
    for (int number = 1; std::getline(in, line); ++number) {
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InputError(path + ":" + std::to_string(number) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (std::find(ignored_keys.begin(), ignored_keys.end(), key) != ignored_keys.end()) continue;
        const std::string flag = "--" + key;
        const CLI::Option* opt = sub.get_option_no_throw(flag);
        if (opt == nullptr || key == "config") {
            throw InputError(path + ":" + std::to_string(number) + ": unknown key '" + key + "'");
        }
        const bool on_command_line = std::any_of(given.begin(), given.end(), [&](const std::string& a) {
            return a == flag || a.rfind(flag + "=", 0) == 0;
        });
        if (on_command_line) continue;
        if (opt->get_expected_min() == 0) {
            if (value == "true" || value == "1" || value == "yes") args.push_back(flag);
            else if (value != "false" && value != "0" && value != "no") {
                throw InputError(path + ":" + std::to_string(number) + ": '" + key + "' expects true or false");
            }
        } else {
            args.push_back(flag);
            args.push_back(value);
        }
    }
    return args;
}

/// argv with any `--config FILE` of the chosen subcommand expanded in place.
std::vector<std::string> expand_config(const CLI::App& app, int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    if (args.empty()) return args;
    const CLI::App* sub = app.get_subcommand_no_throw(args.front());
    if (sub == nullptr) return args;
    std::string path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) return args;
    // A synth manifest also records where its outputs were written.
    const std::vector<std::string> ignored =
        sub->get_name() == "synth" ? std::vector<std::string>{"frames", "reference"} : std::vector<std::string>{};
    const std::vector<std::string> extra = config_arguments(*sub, path, args, ignored);
    args.insert(args.begin() + 1, extra.begin(), extra.end());
    return args;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Temporal alignment and fusion toolkit for multi-frame restoration"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();

    SynthArgs synth;
    CLI::App* s = app.add_subcommand("synth", "generate a synthetic sequence with ground-truth motion");
    std::string config_path;
    s->add_option("--config", config_path, "read options from a key = value file (a manifest works)");
    s->add_option("--size", synth.size, "frame size WxH");
    s->add_option("--n", synth.neighbors, "neighbors per side");
    s->add_option("--motion", synth.motion, "const:vx,vy | drift:vx,vy,ax,ay | rot:[cx,cy,]degrees");
    s->add_option("--sigma", synth.sigma, "noise sigma on the 0-255 scale");
    s->add_option("--seed", synth.seed, "noise seed");
    s->add_option("--texture-seed", synth.texture_seed, "texture seed");
    s->add_option("--cutoff", synth.cutoff, "texture cutoff as a fraction of Nyquist");
    s->add_option("--degradation", synth.degradation, "none, noise or blur")
        ->check(CLI::IsMember({"none", "noise", "blur"}));
    s->add_option("--blur-radius", synth.blur_radius, "box blur radius for --degradation blur");
    s->add_option("--out", synth.out, "output directory")->required();

    RestoreArgs restore;
    CLI::App* r = app.add_subcommand("restore", "align and fuse a frame window onto its center frame");
    r->add_option("--config", config_path, "read options from a key = value file");
    r->add_option("input", restore.input, "frame pattern (frame_%03d.png), directory or .y4m file")->required();
    r->add_option("--kind", restore.kind, "auto, png or y4m")->check(CLI::IsMember({"auto", "png", "y4m"}));
    r->add_option("--schedule", restore.schedule, "independent, progressive or iterative")
        ->check(CLI::IsMember({"independent", "progressive", "iterative"}));
    r->add_option("--fusion", restore.fusion, "arw or mean")->check(CLI::IsMember({"arw", "mean"}));
    r->add_flag("--no-prior", restore.no_prior, "iterative only: reuse first estimates instead of refining");
    r->add_option("--max-refines", restore.max_refines, "iterative only: refinements per index, -1 unlimited");
    add_motion_options(*r, restore.motion);
    add_fusion_options(*r, restore.fusion_params, restore.reduce, restore.exclude_reference);
    r->add_option("--gt", restore.gt, "clean reference image; prints psnr/ssim lines");
    r->add_option("--gt-flow", restore.gt_flow, "directory with flow_k<k>.mfld fields; prints epe lines");
    r->add_option("--crop", restore.crop, "border excluded from psnr");
    r->add_option("--flow-crop", restore.flow_crop, "border excluded from epe");
    r->add_flag("--luma", restore.luma, "compute psnr on luma");
    r->add_option("--out", restore.out, "restored PNG path");
    r->add_flag("--diag", restore.diag, "print one line per sub-alignment execution");
    r->add_option("--dump-dir", restore.dump_dir, "write fusion weight and consistency maps here");

    BenchArgs bench;
    CLI::App* b = app.add_subcommand("bench", "motion-magnitude benchmark over synthetic sequences");
    b->add_option("--config", config_path, "read options from a key = value file");
    b->add_option("--bins", bench.config.bins, "per-hop motion magnitudes in pixels")->delimiter(',');
    b->add_option("--schedules", bench.schedules, "schedules to compare")
        ->delimiter(',')
        ->check(CLI::IsMember({"independent", "progressive", "iterative"}));
    b->add_option("--fusions", bench.fusions, "fusions to compare")->delimiter(',')->check(CLI::IsMember({"arw", "mean"}));
    b->add_option("--seeds", bench.config.seeds, "seeds per cell");
    b->add_option("--seed", bench.config.master_seed, "master seed");
    b->add_option("--size", bench.config.size, "square frame side");
    b->add_option("--n", bench.config.neighbors, "neighbors per side");
    b->add_option("--sigma", bench.config.sigma, "noise sigma on the 0-255 scale");
    b->add_option("--cutoff", bench.config.cutoff, "texture cutoff as a fraction of Nyquist");
    b->add_option("--direction", bench.config.direction_degrees, "motion direction in degrees");
    b->add_option("--crop", bench.config.crop, "border excluded from psnr and epe");
    add_motion_options(*b, bench.config.motion);
    add_fusion_options(*b, bench.config.fusion, bench.reduce, bench.exclude_reference);
    b->add_option("--format", bench.format, "text or csv")->check(CLI::IsMember({"text", "csv"}));

    EvalArgs eval;
    CLI::App* e = app.add_subcommand("eval", "compare two images and optionally two motion fields");
    e->add_option("images", eval.images, "two PNG images");
    e->add_flag("--luma", eval.luma, "compute psnr on luma");
    e->add_option("--crop", eval.crop, "border excluded from psnr");
    e->add_option("--flow", eval.flow, "estimated field (.mfld)");
    e->add_option("--gt-flow", eval.gt_flow, "ground-truth field (.mfld)");
    e->add_option("--flow-crop", eval.flow_crop, "border excluded from epe");
    e->get_option("--flow")->needs(e->get_option("--gt-flow"));
    e->get_option("--gt-flow")->needs(e->get_option("--flow"));

    try {
        std::vector<std::string> args = expand_config(app, argc, argv);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : kExitInput;
    } catch (const InputError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitInput;
    }

    try {
        if (s->parsed()) return cmd_synth(synth);
        if (r->parsed()) return cmd_restore(restore);
        if (b->parsed()) return cmd_bench(bench);
        return cmd_eval(eval);
    } catch (const InputError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitInput;
    } catch (const fs::filesystem_error& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitInput;
    } catch (const std::exception& err) {
        std::cerr << "internal error: " << err.what() << '\n';
        return kExitInternal;
    }
}
