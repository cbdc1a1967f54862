#include "talign/schedule.hpp"

#include <cstdio>

#include "talign/errors.hpp"
#include "talign/eval.hpp"
#include "talign/warp.hpp"

namespace talign {

std::string_view to_string(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::Independent: return "independent";
        case ScheduleKind::Progressive: return "progressive";
        case ScheduleKind::Iterative: return "iterative";
    }
    return "unknown";
}

std::optional<ScheduleKind> parse_schedule(std::string_view name) {
    if (name == "independent") return ScheduleKind::Independent;
    if (name == "progressive") return ScheduleKind::Progressive;
    if (name == "iterative") return ScheduleKind::Iterative;
    return std::nullopt;
}

ExecutionPlan plan(ScheduleKind kind, int neighbors) {
    if (neighbors < 1) throw InputError("plan: neighbor count must be >= 1, got " + std::to_string(neighbors));
    ExecutionPlan p;
    p.kind = kind;
    p.neighbors = neighbors;
    for (int side : {1, -1}) {
        for (int m = 1; m <= neighbors; ++m) {
            const int k = side * m;
            if (kind == ScheduleKind::Iterative) {
                for (int j = m; j >= 1; --j) p.execs.push_back({side * j, k, m + 1 - j});
            } else {
                p.execs.push_back({k, k, 1});
            }
        }
    }
    return p;
}

namespace {

double mean_cost(const std::vector<BlockMatch>& blocks) {
    if (blocks.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& b : blocks) sum += b.cost;
    return sum / static_cast<double>(blocks.size());
}

std::optional<double> exec_epe(const GroundTruth* gt, const std::map<int, MotionField>& fields, int key,
                               const MotionField& field) {
    if (gt == nullptr) return std::nullopt;
    const auto it = fields.find(key);
    if (it == fields.end()) return std::nullopt;
    return endpoint_error(field, it->second, gt->border_crop).mean;
}

void run_iterative_side(const Sequence& seq, const ScheduleOptions& opt, const GroundTruth* gt, int side,
                        AlignmentOutput& out) {
    const ExecutionPlan full = plan(ScheduleKind::Iterative, seq.neighbors());
    SubAlignmentState state;
    Frame carried;
    for (const SubAlignmentExec& e : full.execs) {
        if (e.side() != side) continue;
        if (e.i == e.k) carried = seq.at(e.k);
        const Frame& target = seq.at(e.i - side);

        const int done = state.refinements[e.i];
        if (done + 1 != e.t) throw InvariantError("refinement counter out of step for a_" + std::to_string(e.i));

        ExecRecord rec;
        rec.exec = e;
        MotionField field;
        const bool refine =
            e.t > 1 && opt.use_prior && (opt.max_refines_per_index < 0 || e.t - 1 <= opt.max_refines_per_index);
        if (e.t == 1 || refine) {
            const MotionField* prior = refine ? &state.fields.at(e.i) : nullptr;
            MotionEstimate est = estimate_motion(carried, target, opt.motion, prior);
            rec.estimated = true;
            rec.used_prior = refine;
            rec.blocks = std::move(est.blocks);
            field = std::move(est.field);
        } else {
            // Without refinement the first estimate is kept and reused as-is.
            field = state.fields.at(e.i);
            rec.blocks = score_field(carried, target, field, opt.motion);
        }
        rec.mean_cost = mean_cost(rec.blocks);
        rec.epe = gt ? exec_epe(gt, gt->hop_fields, e.i, field) : std::nullopt;

        carried = backward_warp(carried, field);
        out.chains[e.k].push_back(field);
        state.fields[e.i] = std::move(field);
        state.refinements[e.i] = e.t;
        out.diagnostics.push_back(std::move(rec));
        if (e.i == side) out.aligned[e.k] = carried;
    }
    for (auto& [i, f] : state.fields) out.final_fields[i] = std::move(f);
    for (const auto& [i, n] : state.refinements) out.refinements[i] = n;
}

void run_progressive_side(const Sequence& seq, const ScheduleOptions& opt, const GroundTruth* gt, int side,
                          AlignmentOutput& out) {
    std::vector<MotionField> tail;  // h_{k-1}, ..., h_1 for the current k
    for (int m = 1; m <= seq.neighbors(); ++m) {
        const int k = side * m;
        MotionEstimate est = estimate_motion(seq.at(k), seq.at(k - side), opt.motion);

        ExecRecord rec;
        rec.exec = {k, k, 1};
        rec.estimated = true;
        rec.mean_cost = est.mean_block_cost();
        rec.epe = exec_epe(gt, gt ? gt->hop_fields : std::map<int, MotionField>{}, k, est.field);
        rec.blocks = std::move(est.blocks);
        out.diagnostics.push_back(std::move(rec));

        std::vector<MotionField> chain{est.field};
        chain.insert(chain.end(), tail.begin(), tail.end());
        Frame carried = seq.at(k);
        for (const MotionField& hop : chain) carried = backward_warp(carried, hop);
        out.aligned[k] = std::move(carried);

        tail.insert(tail.begin(), est.field);
        out.final_fields[k] = std::move(est.field);
        out.refinements[k] = 1;
        out.chains[k] = std::move(chain);
    }
}

void run_independent_side(const Sequence& seq, const ScheduleOptions& opt, const GroundTruth* gt, int side,
                          AlignmentOutput& out) {
    for (int m = 1; m <= seq.neighbors(); ++m) {
        const int k = side * m;
        MotionParams params = opt.motion;
        params.search_radius = opt.motion.search_radius * m;
        MotionEstimate est = estimate_motion(seq.at(k), seq.reference(), params);

        ExecRecord rec;
        rec.exec = {k, k, 1};
        rec.estimated = true;
        rec.mean_cost = est.mean_block_cost();
        rec.epe = exec_epe(gt, gt ? gt->long_fields : std::map<int, MotionField>{}, k, est.field);
        rec.blocks = std::move(est.blocks);
        out.diagnostics.push_back(std::move(rec));

        out.aligned[k] = backward_warp(seq.at(k), est.field);
        out.chains[k] = {est.field};
        out.refinements[k] = 1;
        out.final_fields[k] = std::move(est.field);
    }
}

}  // namespace

AlignmentOutput run(const Sequence& sequence, const ScheduleOptions& options, const GroundTruth* ground_truth) {
    options.motion.validate();
    if (sequence.neighbors() < 1) throw InputError("run: sequence has no neighbors");
    if (sequence.reference().channels() < 3) {
        throw InputError("run: descriptor frames need >= 3 channels, got " +
                         std::to_string(sequence.reference().channels()));
    }
    AlignmentOutput out;
    for (int side : {1, -1}) {
        switch (options.kind) {
            case ScheduleKind::Iterative: run_iterative_side(sequence, options, ground_truth, side, out); break;
            case ScheduleKind::Progressive: run_progressive_side(sequence, options, ground_truth, side, out); break;
            case ScheduleKind::Independent: run_independent_side(sequence, options, ground_truth, side, out); break;
        }
    }
    if (out.aligned.size() != static_cast<std::size_t>(2 * sequence.neighbors())) {
        throw InvariantError("run: expected one aligned frame per neighbor");
    }
    return out;
}

std::string format_exec(const ExecRecord& record) {
    char epe[32] = "na";
    if (record.epe) std::snprintf(epe, sizeof epe, "%.4f", *record.epe);
    char line[160];
    std::snprintf(line, sizeof line, "exec side=%c i=%d k=%d t=%d cost=%.6f epe=%s",
                  record.exec.side() > 0 ? '+' : '-', std::abs(record.exec.i), std::abs(record.exec.k),
                  record.exec.t, record.mean_cost, epe);
    return line;
}

}  // namespace talign
