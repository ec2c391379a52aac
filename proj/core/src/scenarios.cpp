#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "rdg/experiment.hpp"
#include "rdg/io.hpp"
#include "rdg/lyapunov.hpp"
#include "rdg/parallel.hpp"
#include "rdg/rng.hpp"

namespace rdg {

using nlohmann::json;

namespace {

constexpr double kConvergenceTolerance = 1e-6;
constexpr std::size_t kConvergenceWindow = 200;
constexpr double kOracleTolerance = 1e-9;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string label(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

UpdateRule make_rule(const RuleConfig& r, double eps) {
    if (r.type == "degroot") return DeGroot{};
    if (r.type == "eps_degroot") return EpsDeGroot{eps};
    if (r.type == "granular") return GranularDeGroot{r.W};
    throw std::invalid_argument("unknown rule '" + r.type + "'");
}

SimConfig sim_config(const ExperimentConfig& c, double eps, DistortionModel distortion) {
    SimConfig s;
    s.graph = c.graph;
    s.rule = make_rule(c.rule, eps);
    s.bots = c.bots;
    s.distortion = distortion;
    s.init = c.init;
    s.horizon = c.horizon;
    s.seed = c.seed;
    s.settle = SettleRule{kConvergenceTolerance, kConvergenceWindow};
    return s;
}

std::vector<NodeId> default_probes(const ExperimentConfig& c, const Graph& g) {
    if (!c.probes.empty()) return c.probes;
    std::vector<NodeId> p;
    const std::size_t n = g.node_count();
    for (std::size_t k = 0; k < std::min<std::size_t>(5, n); ++k) p.push_back(static_cast<NodeId>(k * n / 5));
    return p;
}

/// Sample times for fan charts: every step early on, then geometrically spaced.
bool sample_time(std::size_t t, std::size_t& next) {
    if (t < 100) return true;
    if (t < next) return false;
    next = t + std::max<std::size_t>(1, t / 50);
    return true;
}

class ResultBuilder {
public:
    explicit ResultBuilder(const ExperimentConfig& c) {
        r_.scenario = c.scenario;
        r_.config = to_json(c);
        r_.config_hash = config_hash(c);
        r_.seed = c.seed;
        r_.version = version();
    }
    void metric(const std::string& name, double v) { r_.metrics.emplace_back(name, v); }
    void audit(const std::string& name, const AuditReport& a) { r_.audits.emplace_back(name, a); }
    void note(std::string s) { r_.notes.push_back(std::move(s)); }
    void series(Series s) { r_.series.push_back(std::move(s)); }
    void file(std::string name, std::string content) { r_.files.emplace_back(std::move(name), std::move(content)); }
    json& details() { return r_.details; }
    ScenarioResult finish(bool pass) {
        r_.pass = pass;
        return std::move(r_);
    }

private:
    ScenarioResult r_;
};

// ---- fragility -----------------------------------------------------------------

ScenarioResult fragility_bot(const ExperimentConfig& c) {
    ResultBuilder out(c);
    const Graph g = generate(c.graph);
    const SimConfig cfg = sim_config(c, 0.0, {});
    const OpinionState init = initial_state(g, cfg);
    const double target = c.bots.front().value;
    const auto probes = default_probes(c, g);

    Simulator sim(g, cfg.rule, cfg.bots, cfg.distortion, cfg.seed, init);
    std::vector<std::size_t> checkpoints = c.checkpoints;
    std::sort(checkpoints.begin(), checkpoints.end());
    const std::size_t last_checkpoint = checkpoints.empty() ? 0 : checkpoints.back();

    Series fan{"trajectory", "fan", "t", "opinion", {}, std::vector<std::vector<double>>(probes.size()), {}, ""};
    for (NodeId p : probes) fan.labels.push_back("agent " + std::to_string(p));
    auto sample = [&](const OpinionState& s) {
        fan.x.push_back(static_cast<double>(s.t));
        for (std::size_t k = 0; k < probes.size(); ++k) fan.y[k].push_back(s.now[probes[k]]);
    };
    auto distance = [&](const OpinionState& s) {
        double d = 0.0;
        for (double v : s.now) d = std::max(d, std::abs(v - target));
        return d;
    };

    sample(sim.state());
    std::size_t next_sample = 0;
    std::optional<std::size_t> reached;
    double oracle_gap = 0.0;
    std::size_t ck = 0;
    if (distance(sim.state()) <= c.tolerance) reached = 0;
    while (sim.state().t < c.horizon && (!reached || sim.state().t < last_checkpoint)) {
        sim.step();
        const auto& s = sim.state();
        if (sample_time(s.t, next_sample)) sample(s);
        if (!reached && distance(s) <= c.tolerance) reached = s.t;
        while (ck < checkpoints.size() && checkpoints[ck] == s.t) {
            double gap = 0.0;
            for (NodeId i = 0; i < g.node_count(); ++i)
                gap = std::max(gap, std::abs(s.now[i] - degroot_closed_form(g, init.now, c.bots, i, s.t)));
            out.metric("oracle_gap_t" + std::to_string(s.t), gap);
            oracle_gap = std::max(oracle_gap, gap);
            ++ck;
        }
    }
    if (fan.x.back() != static_cast<double>(sim.state().t)) sample(sim.state());

    out.metric("target", target);
    out.metric("steps_run", static_cast<double>(sim.state().t));
    out.metric("consensus_reached", reached ? 1.0 : 0.0);
    out.metric("consensus_time", reached ? static_cast<double>(*reached) : -1.0);
    out.metric("final_max_distance", distance(sim.state()));
    out.metric("oracle_max_gap", oracle_gap);
    fan.annotation = reached ? "all agents within " + label(c.tolerance) + " of " + label(target) + " at t = " +
                                   std::to_string(*reached)
                             : "no consensus within the horizon";
    out.series(std::move(fan));
    return out.finish(reached.has_value() && oracle_gap <= kOracleTolerance);
}

ScenarioResult fragility_bias(const ExperimentConfig& c) {
    ResultBuilder out(c);
    const Graph g = generate(c.graph);
    const SimConfig cfg = sim_config(c, 0.0, c.distortion);
    const OpinionState init = initial_state(g, cfg);
    const double init_max = *std::max_element(init.now.begin(), init.now.end());
    const double init_min = *std::min_element(init.now.begin(), init.now.end());
    const bool up = c.distortion.kind == DistortionKind::plus_bias;
    const double bar = up ? init_max + c.threshold : init_min - c.threshold;

    Series band{"opinion_range", "line", "t", "opinion", {}, {{}, {}}, {"min", "max"}, ""};
    Simulator sim(g, cfg.rule, cfg.bots, cfg.distortion, cfg.seed, init);
    std::optional<std::size_t> crossed;
    std::size_t next_sample = 0;
    auto sample = [&](const OpinionState& s) {
        band.x.push_back(static_cast<double>(s.t));
        band.y[0].push_back(*std::min_element(s.now.begin(), s.now.end()));
        band.y[1].push_back(*std::max_element(s.now.begin(), s.now.end()));
    };
    sample(sim.state());
    while (sim.state().t < c.horizon) {
        sim.step();
        const auto& s = sim.state();
        if (sample_time(s.t, next_sample)) sample(s);
        const double extreme = up ? *std::min_element(s.now.begin(), s.now.end())
                                  : *std::max_element(s.now.begin(), s.now.end());
        if (up ? extreme > bar : extreme < bar) {
            crossed = s.t;
            break;
        }
    }
    if (band.x.back() != static_cast<double>(sim.state().t)) sample(sim.state());
    const auto& s = sim.state();
    double mean0 = 0.0, mean1 = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        mean0 += init.now[i];
        mean1 += s.now[i];
    }
    mean0 /= static_cast<double>(s.size());
    mean1 /= static_cast<double>(s.size());

    out.metric("initial_min", init_min);
    out.metric("initial_max", init_max);
    out.metric("bar", bar);
    out.metric("crossed", crossed ? 1.0 : 0.0);
    out.metric("crossing_time", crossed ? static_cast<double>(*crossed) : -1.0);
    out.metric("final_min", *std::min_element(s.now.begin(), s.now.end()));
    out.metric("final_max", *std::max_element(s.now.begin(), s.now.end()));
    out.metric("drift_per_step", s.t ? (mean1 - mean0) / static_cast<double>(s.t) : 0.0);
    band.annotation = crossed ? "every opinion past " + label(bar) + " at t = " + std::to_string(*crossed)
                              : "bar not crossed within the horizon";
    out.series(std::move(band));
    return out.finish(crossed.has_value());
}

// ---- learning ------------------------------------------------------------------

struct SweepPoint {
    double eps;
    double gamma;
    double beta;
};

std::vector<SweepPoint> sweep_points(const ExperimentConfig& c, DistortionKind kind) {
    std::vector<SweepPoint> pts;
    const bool distorted = kind != DistortionKind::none;
    if (c.sweep.eps.empty()) {
        const double gamma = c.rule.gamma.value_or(0.95 * c.rule.eps);
        pts.push_back({c.rule.eps, gamma, distorted ? c.distortion.beta : 0.0});
    } else {
        for (double e : c.sweep.eps)
            pts.push_back({e, c.sweep.gamma_factor * e, distorted ? c.sweep.beta_factor * e : 0.0});
    }
    std::sort(pts.begin(), pts.end(), [](const SweepPoint& a, const SweepPoint& b) { return a.eps > b.eps; });
    return pts;
}

std::string z_values_csv(const LearningEstimate& est) {
    std::string s = "replication,seed,agent,z_even,z_odd\n";
    for (std::size_t r = 0; r < est.z_values.size(); ++r)
        for (std::size_t k = 0; k < est.audited.size(); ++k)
            s += std::to_string(r) + "," + std::to_string(est.seeds[r]) + "," + std::to_string(est.audited[k]) +
                 "," + fmt(est.z_values[r][k].first) + "," + fmt(est.z_values[r][k].second) + "\n";
    return s;
}

void report_learning(ResultBuilder& out, const std::string& prefix, const LearningEstimate& est, std::size_t R) {
    out.metric(prefix + "R", static_cast<double>(R));
    out.metric(prefix + "audited", static_cast<double>(est.audited.size()));
    out.metric(prefix + "max_frequency", est.max_frequency);
    out.metric(prefix + "fraction_passing_wilson", est.fraction_passing);
    out.metric(prefix + "pass_wilson", est.pass ? 1.0 : 0.0);
    out.metric(prefix + "mean_audited_error", est.mean_audited_error);
    out.metric(prefix + "unconverged_runs", static_cast<double>(est.unconverged_runs));
    out.metric(prefix + "unconverged_agents", static_cast<double>(est.unconverged_agents));
    out.metric(prefix + "max_steps", static_cast<double>(est.max_steps));
}

bool non_increasing(const std::vector<double>& v) {
    for (std::size_t k = 1; k < v.size(); ++k)
        if (v[k] > v[k - 1]) return false;
    return true;
}

struct Lane {
    Simulator sim;
    ConvergenceTracker tracker;
    int zero_steps = 0;
    std::optional<std::size_t> frozen_at;

    Lane(const Graph& g, const SimConfig& cfg, OpinionState init)
        : sim(g, cfg.rule, cfg.bots, cfg.distortion, cfg.seed, std::move(init)),
          tracker(g.node_count(), kConvergenceTolerance, kConvergenceWindow) {}

    DistortionKind kind = DistortionKind::none;

    bool deterministic() const {
        return kind != DistortionKind::uniform_noise && kind != DistortionKind::per_step_adversarial;
    }

    void advance() {
        if (frozen_at) return;
        sim.step();
        tracker.observe(sim.state());
        zero_steps = sim.last_movement() == 0.0 ? zero_steps + 1 : 0;
        // Two exact zero-movement steps of a deterministic rule repeat forever.
        if (zero_steps >= 2 && deterministic()) frozen_at = sim.state().t;
    }
    bool done() const { return frozen_at.has_value() || tracker.all_converged(); }
    /// Layer at time t, for t at or after the freeze.
    const std::vector<double>& layer(std::size_t t) const {
        const auto& s = sim.state();
        if (!frozen_at) return s.now;
        return (t - *frozen_at) % 2 == 0 ? s.now : s.prev;
    }
    ReplicationOutcome outcome(std::span<const NodeId> audited, std::uint64_t seed) const {
        ReplicationOutcome o;
        o.seed = seed;
        o.steps = frozen_at ? *frozen_at : tracker.steps();
        o.settled = done();
        // A frozen lane has period two, so its parity limits are read off the last two layers.
        const auto z = parity_limits(sim.state());
        for (NodeId i : audited) {
            o.z.push_back(z[i]);
            o.converged.push_back(frozen_at || tracker.converged(i));
        }
        return o;
    }
};

struct BracketRun {
    std::vector<ReplicationOutcome> noise, plus, minus;
    AuditReport bracket{Condition::A1};
};

/// Runs uniform-noise, plus-bias and minus-bias lanes in lockstep from shared
/// initial states and checks minus <= noise <= plus at every step.
BracketRun bracket_replications(const Graph& g, const ExperimentConfig& c, const SweepPoint& p,
                                std::span<const NodeId> audited, std::size_t workers) {
    const std::size_t reps = c.replications;
    BracketRun out;
    out.noise.resize(reps);
    out.plus.resize(reps);
    out.minus.resize(reps);
    std::vector<AuditReport> reports(reps, AuditReport{Condition::A1});

    parallel_for(reps, workers, [&](std::size_t r) {
        const std::uint64_t seed = replication_seed(c.seed, r);
        auto cfg_for = [&](DistortionKind kind) {
            SimConfig s = sim_config(c, p.eps, DistortionModel{kind, p.beta, c.distortion.seed});
            s.seed = seed;
            return s;
        };
        const SimConfig noise_cfg = cfg_for(DistortionKind::uniform_noise);
        const OpinionState init = initial_state(g, noise_cfg);
        Lane noise(g, noise_cfg, init), plus(g, cfg_for(DistortionKind::plus_bias), init),
            minus(g, cfg_for(DistortionKind::minus_bias), init);
        noise.kind = DistortionKind::uniform_noise;
        plus.kind = DistortionKind::plus_bias;
        minus.kind = DistortionKind::minus_bias;

        AuditReport& rep = reports[r];
        auto compare = [&](std::size_t t) {
            const auto& lo = minus.layer(t);
            const auto& mid = noise.layer(t);
            const auto& hi = plus.layer(t);
            for (NodeId i = 0; i < g.node_count(); ++i) {
                rep.record(lo[i] - mid[i], 0.0, Witness{i, t, mid[i]});
                rep.record(mid[i] - hi[i], 0.0, Witness{i, t, mid[i]});
            }
        };
        compare(0);
        std::size_t t = 0;
        while (t < c.horizon && !(noise.done() && plus.done() && minus.done())) {
            noise.advance();
            plus.advance();
            minus.advance();
            ++t;
            compare(t);
        }
        out.noise[r] = noise.outcome(audited, seed);
        out.plus[r] = plus.outcome(audited, seed);
        out.minus[r] = minus.outcome(audited, seed);
    });
    for (const auto& rep : reports) out.bracket.merge(rep);
    return out;
}

ScenarioResult learning_scenario(const ExperimentConfig& c, std::size_t workers) {
    ResultBuilder out(c);
    const Graph g = generate(c.graph);
    const bool distortion_scenario = c.scenario == "robust-distortion";

    std::vector<DistortionKind> kinds;
    if (distortion_scenario) {
        if (c.variants.empty()) kinds.push_back(c.distortion.kind);
        for (const auto& v : c.variants) kinds.push_back(distortion_from_string(v));
    } else {
        kinds.push_back(c.distortion.kind);
    }
    auto has_kind = [&](DistortionKind k) { return std::find(kinds.begin(), kinds.end(), k) != kinds.end(); };
    const bool bracket = distortion_scenario && has_kind(DistortionKind::uniform_noise) &&
                         has_kind(DistortionKind::plus_bias) && has_kind(DistortionKind::minus_bias);

    LearningCriterion crit = c.criterion;
    bool threshold_ok = true;
    bool trend_ok = true;
    Series sweep{"learning_error", "sweep", "eps", "mean audited learning error", {}, {}, {}, ""};
    for (const auto& pt : sweep_points(c, DistortionKind::none)) sweep.x.push_back(pt.eps);
    std::optional<AuditReport> bracket_report;
    std::map<double, BracketRun> bracket_runs;

    if (bracket) {
        const auto pts = sweep_points(c, DistortionKind::uniform_noise);
        const auto target = std::find_if(pts.begin(), pts.end(), [&](const SweepPoint& p) { return p.eps == c.rule.eps; });
        if (target != pts.end()) {
            const std::size_t R = exempt_radius_for(c, g, target->gamma, target->beta);
            const auto audited = audited_agents(g, c.bots, R);
            bracket_runs.emplace(target->eps, bracket_replications(g, c, *target, audited, workers));
            bracket_report = bracket_runs.at(target->eps).bracket;
        }
    }

    for (DistortionKind kind : kinds) {
        const std::string kname = kind == DistortionKind::none ? "" : to_string(kind) + "/";
        std::vector<double> errors;
        for (const auto& pt : sweep_points(c, kind)) {
            crit.exempt_radius = exempt_radius_for(c, g, pt.gamma, pt.beta);
            const std::string prefix = kname + "eps=" + label(pt.eps) + "/";
            LearningEstimate est;
            const auto it = bracket_runs.find(pt.eps);
            if (it != bracket_runs.end() && kind != DistortionKind::none) {
                auto outcomes = kind == DistortionKind::uniform_noise ? it->second.noise
                                : kind == DistortionKind::plus_bias   ? it->second.plus
                                                                      : it->second.minus;
                est = summarize_learning(audited_agents(g, c.bots, crit.exempt_radius), std::move(outcomes), crit,
                                         c.seed);
            } else {
                const SimConfig cfg = sim_config(c, pt.eps, DistortionModel{kind, pt.beta, c.distortion.seed});
                est = learning_estimate(g, cfg, crit, c.replications, c.seed, workers);
            }
            out.metric(prefix + "gamma", pt.gamma);
            out.metric(prefix + "beta", pt.beta);
            report_learning(out, prefix, est, crit.exempt_radius);
            errors.push_back(est.mean_audited_error);
            if (pt.eps == c.rule.eps) {
                if (c.scenario != "eps-sweep") threshold_ok = threshold_ok && est.max_frequency <= crit.rho;
                std::string name = "z_values";
                if (!kname.empty()) name += "_" + to_string(kind);
                out.file(name + ".csv", z_values_csv(est));
            }
        }
        const bool trend = non_increasing(errors);
        out.metric(kname + "trend_non_increasing", trend ? 1.0 : 0.0);
        if (c.scenario != "robust-bot" || errors.size() > 1) trend_ok = trend_ok && trend;
        sweep.y.push_back(errors);
        sweep.labels.push_back(kind == DistortionKind::none ? "no distortion" : to_string(kind));
    }
    if (bracket_report) {
        out.audit("bracket", *bracket_report);
        out.metric("bracket_checks", static_cast<double>(bracket_report->checks));
        out.metric("bracket_worst_violation", bracket_report->worst_violation);
    }
    sweep.annotation = "eps decreasing to the right; delta = " + label(crit.delta);
    std::reverse(sweep.x.begin(), sweep.x.end());
    for (auto& y : sweep.y) std::reverse(y.begin(), y.end());
    out.series(std::move(sweep));

    out.note("learning error of an agent is max(|Z_even - mu|, |Z_odd - mu|); an agent fails a replication when it "
             "exceeds delta or has not converged (tolerance 1e-6 over 200 steps) by the horizon");
    out.note("threshold verdict: empirical failure frequency <= rho at eps = " + label(c.rule.eps) +
             "; the Wilson-adjusted rule (frequency + half-width <= rho) is reported alongside");
    const bool pass = threshold_ok && (c.scenario == "robust-bot" ? trend_ok : trend_ok) &&
                      (!bracket_report || bracket_report->pass);
    return out.finish(c.scenario == "eps-sweep" ? trend_ok : pass);
}

// ---- audits --------------------------------------------------------------------

struct AuditRun {
    AuditReport a2{Condition::A2}, a3{Condition::A3}, lyap{Condition::Lyapunov}, variation{Condition::Variation};
    std::size_t unconverged_probes = 0;
    double max_drift = 0.0;
    std::vector<double> first_lyapunov;
    std::vector<std::vector<double>> first_probe_series;
    std::optional<TrajectorySnapshot> snapshot;
};

AuditRun audit_runs(const Graph& g, const ExperimentConfig& c, const RobustnessParams& params,
                    const DistortionModel& distortion, std::span<const NodeId> probes, std::size_t workers,
                    bool keep_snapshot) {
    std::vector<AuditRun> runs(c.replications);
    parallel_for(c.replications, workers, [&](std::size_t r) {
        AuditRun& run = runs[r];
        SimConfig cfg = sim_config(c, c.rule.eps, distortion);
        cfg.seed = replication_seed(c.seed, r);
        Simulator sim(g, cfg.rule, cfg.bots, cfg.distortion, cfg.seed, initial_state(g, cfg));
        StepAuditor auditor(g, cfg.bots, params);
        std::vector<LyapunovTracker> trackers;
        for (NodeId p : probes) trackers.emplace_back(g, LyapunovConfig{p, 1.0 - params.gamma});
        std::vector<std::vector<double>> series(probes.size());
        auto record = [&] {
            for (std::size_t k = 0; k < probes.size(); ++k) series[k].push_back(sim.state().now[probes[k]]);
        };
        const bool snap = keep_snapshot && r == 0;
        TrajectorySnapshot snapshot;
        if (snap) snapshot.layers.push_back(sim.state().now);
        record();
        for (std::size_t t = 0; t < c.horizon; ++t) {
            sim.step();
            auditor.observe(sim.state());
            for (auto& tr : trackers) tr.observe(sim.state());
            record();
            if (snap) snapshot.layers.push_back(sim.state().now);
        }
        run.a2 = auditor.a2();
        run.a3 = auditor.a3();
        for (std::size_t k = 0; k < probes.size(); ++k) {
            const auto& tr = trackers[k];
            auto mono = check_lyapunov_monotone(tr.series(), tr.mass());
            if (mono.witness) mono.witness->agent = probes[k];
            run.lyap.merge(mono);
            auto var = check_variation_bound(series[k], tr.series(), 0, c.horizon, params.eta, tr.mass());
            if (var.witness) var.witness->agent = probes[k];
            run.variation.merge(var);
            run.max_drift = std::max(run.max_drift, tr.max_drift());
            if (!limit_estimate(series[k], kConvergenceTolerance, kConvergenceWindow).converged)
                ++run.unconverged_probes;
        }
        if (r == 0) {
            run.first_lyapunov.assign(trackers.front().series().begin(), trackers.front().series().end());
            run.first_probe_series = std::move(series);
            if (snap) {
                json header = {{"graph", to_json(c.graph)},
                               {"bots", json::array()},
                               {"rule", {{"type", "eps_degroot"}, {"eps", c.rule.eps}}},
                               {"distortion", {{"kind", to_string(distortion.kind)}, {"beta", distortion.beta}}},
                               {"seed", cfg.seed},
                               {"n", g.node_count()},
                               {"T", c.horizon}};
                for (const auto& b : c.bots) header["bots"].push_back({{"node", b.node}, {"value", b.value}});
                snapshot.header_json = header.dump();
                run.snapshot = std::move(snapshot);
            }
        }
    });
    AuditRun total = std::move(runs.front());
    for (std::size_t r = 1; r < runs.size(); ++r) {
        total.a2.merge(runs[r].a2);
        total.a3.merge(runs[r].a3);
        total.lyap.merge(runs[r].lyap);
        total.variation.merge(runs[r].variation);
        total.unconverged_probes += runs[r].unconverged_probes;
        total.max_drift = std::max(total.max_drift, runs[r].max_drift);
    }
    return total;
}

ScenarioResult lyapunov_audit(const ExperimentConfig& c, std::size_t workers) {
    ResultBuilder out(c);
    const Graph g = generate(c.graph);
    const auto probes = default_probes(c, g);
    const RobustnessParams params = eps_degroot_params(c.rule.eps, c.rule.gamma.value_or(0.95 * c.rule.eps));

    AuditRun plain = audit_runs(g, c, params, {}, probes, workers, c.save_trajectory);
    bool pass = true;
    auto add = [&](const std::string& suffix, AuditRun& run) {
        for (auto* rep : {&run.a2, &run.a3, &run.lyap, &run.variation}) {
            out.audit(to_string(rep->condition) + suffix, *rep);
            pass = pass && rep->pass;
        }
        out.metric("unconverged_probes" + suffix, static_cast<double>(run.unconverged_probes));
        out.metric("tracker_max_drift" + suffix, run.max_drift);
    };
    out.metric("eta", params.eta);
    out.metric("probes", static_cast<double>(probes.size()));
    out.metric("runs", static_cast<double>(c.replications));
    add("", plain);

    if (c.distortion.kind != DistortionKind::none) {
        const RobustnessParams reduced = beta_reduction(params, c.distortion.beta);
        AuditRun distorted = audit_runs(g, c, reduced, c.distortion, probes, workers, false);
        out.metric("distorted_eps", reduced.eps);
        out.metric("distorted_gamma", reduced.gamma);
        add("/distorted", distorted);
    }

    Series lyap{"lyapunov", "line", "t", "L(t)", {}, {plain.first_lyapunov}, {"center " + std::to_string(probes[0])},
                ""};
    for (std::size_t t = 0; t < plain.first_lyapunov.size(); ++t) lyap.x.push_back(static_cast<double>(t));
    lyap.annotation = "ratio r = 1 - gamma = " + label(1.0 - params.gamma);
    out.series(std::move(lyap));

    Series fan{"trajectory", "fan", "t", "opinion", {}, plain.first_probe_series, {}, ""};
    for (NodeId p : probes) fan.labels.push_back("agent " + std::to_string(p));
    for (std::size_t t = 0; t <= c.horizon; ++t) fan.x.push_back(static_cast<double>(t));
    out.series(std::move(fan));

    if (plain.snapshot) out.file("trajectory.bin", encode_snapshot(*plain.snapshot));
    return out.finish(pass);
}

// ---- random walks and granular -------------------------------------------------

ScenarioResult rw_decay(const ExperimentConfig& c) {
    ResultBuilder out(c);
    const Graph g = generate(c.graph);
    const NodeId origin = walk_origin(c, g);
    const DecayFit fit = p_t_decay_fit(g, origin, c.walk.t_min, c.walk.t_max);
    out.metric("origin", origin);
    out.metric("eccentricity", eccentricity(g, origin));
    out.metric("slope", fit.slope);
    out.metric("intercept", fit.intercept);
    out.metric("empirical_constant", fit.empirical_constant);
    out.metric("p_t_min", fit.p_t.front());
    out.metric("p_t_max", fit.p_t.back());

    Series s{"p_t", "loglog", "t", "max_j Pr(R_t = j)", {}, {fit.p_t}, {"p_t"}, ""};
    for (auto t : fit.times) s.x.push_back(static_cast<double>(t));
    char buf[96];
    std::snprintf(buf, sizeof buf, "fitted slope %.4f, empirical C %.4f", fit.slope, fit.empirical_constant);
    s.annotation = buf;
    out.series(std::move(s));
    return out.finish(fit.slope >= c.walk.slope_min && fit.slope <= c.walk.slope_max);
}

ScenarioResult granular_majority(const ExperimentConfig& c, std::size_t workers) {
    ResultBuilder out(c);
    std::vector<std::size_t> mismatches(c.replications, 0);
    std::vector<std::size_t> degrees(c.replications, 0);
    parallel_for(c.replications, workers, [&](std::size_t k) {
        GraphSpec spec = c.graph;
        if (auto* rr = std::get_if<spec::RandomRegular>(&spec)) rr->seed = replication_seed(rr->seed, k);
        const Graph g = generate(spec);
        degrees[k] = g.degree_bound();
        SimConfig cfg = sim_config(c, 0.0, {});
        cfg.graph = spec;
        cfg.seed = replication_seed(c.seed, k);
        cfg.record = RecordMode::full;
        cfg.settle.reset();
        const auto traj = run(g, cfg);
        const auto ref = majority_reference(g, traj.layers.front(), c.horizon);
        for (std::size_t t = 0; t < ref.size(); ++t)
            for (std::size_t i = 0; i < ref[t].size(); ++i)
                if (ref[t][i] != traj.layers[t][i]) ++mismatches[k];
    });
    std::size_t total = 0;
    for (auto m : mismatches) total += m;
    const std::size_t d = *std::max_element(degrees.begin(), degrees.end());
    const auto params = granular_params(c.rule.W, d);
    out.metric("graphs", static_cast<double>(c.replications));
    out.metric("steps", static_cast<double>(c.horizon));
    out.metric("mismatches", static_cast<double>(total));
    out.metric("degree_bound", static_cast<double>(d));
    out.metric("gamma", params.gamma);
    out.metric("eta", params.eta);
    out.metric("eps_W", params.eps_W);
    out.metric("rho_W", params.rho_W);
    return out.finish(total == 0);
}

}  // namespace

std::vector<std::vector<double>> majority_reference(const Graph& g, std::span<const double> initial,
                                                    std::size_t steps) {
    std::vector<std::vector<double>> layers;
    layers.emplace_back(initial.begin(), initial.end());
    std::vector<double> before(initial.begin(), initial.end());
    for (std::size_t t = 0; t < steps; ++t) {
        const auto& cur = layers.back();
        std::vector<double> next(cur.size());
        for (NodeId i = 0; i < cur.size(); ++i) {
            std::size_t ones = 0;
            for (NodeId j : g.neighbors(i)) ones += cur[j] > 0.5 ? 1 : 0;
            const std::size_t deg = g.degree(i);
            next[i] = 2 * ones > deg ? 1.0 : (2 * ones < deg ? 0.0 : before[i]);
        }
        before = cur;
        layers.push_back(std::move(next));
    }
    return layers;
}

std::vector<std::pair<std::string, AuditReport>> audit_trajectory(const TrajectorySnapshot& snap,
                                                                  const json& params) {
    const json header = json::parse(snap.header_json);
    const Graph g = generate(graph_spec_from_json(header.at("graph")));
    if (snap.layers.size() < 2) throw std::invalid_argument("trajectory needs at least two layers");
    if (snap.layers.front().size() != g.node_count())
        throw std::invalid_argument("trajectory width does not match the graph in its header");
    std::vector<Bot> bots;
    for (const auto& b : header.value("bots", json::array()))
        bots.push_back(Bot{b.at("node").get<NodeId>(), b.at("value").get<double>()});

    RobustnessParams p;
    p.eps = params.at("eps").get<double>();
    p.gamma = params.at("gamma").get<double>();
    p.eta = params.value("eta", 2.0 * (p.eps - p.gamma));
    validate(p);
    if (params.contains("beta")) p = beta_reduction(p, params["beta"].get<double>());

    std::vector<NodeId> probes;
    if (params.contains("probes")) {
        probes = params["probes"].get<std::vector<NodeId>>();
    } else {
        for (std::size_t k = 0; k < std::min<std::size_t>(5, g.node_count()); ++k)
            probes.push_back(static_cast<NodeId>(k * g.node_count() / 5));
    }
    for (NodeId i : probes)
        if (i >= g.node_count()) throw std::invalid_argument("probe " + std::to_string(i) + " out of range");

    StepAuditor auditor(g, bots, p);
    std::vector<LyapunovTracker> trackers;
    for (NodeId i : probes) trackers.emplace_back(g, LyapunovConfig{i, 1.0 - p.gamma});
    OpinionState s;
    for (std::size_t t = 1; t < snap.layers.size(); ++t) {
        s.t = t;
        s.now = snap.layers[t];
        s.prev = snap.layers[t - 1];
        s.prev2 = snap.layers[t >= 2 ? t - 2 : 0];
        auditor.observe(s);
        for (auto& tr : trackers) tr.observe(s);
    }

    std::vector<std::pair<std::string, AuditReport>> out{{"A2", auditor.a2()}, {"A3", auditor.a3()}};
    AuditReport lyap(Condition::Lyapunov), var(Condition::Variation);
    const std::size_t b = snap.layers.size() - 1;
    for (std::size_t k = 0; k < probes.size(); ++k) {
        auto mono = check_lyapunov_monotone(trackers[k].series(), trackers[k].mass());
        if (mono.witness) mono.witness->agent = probes[k];
        lyap.merge(mono);
        std::vector<double> series(snap.layers.size());
        for (std::size_t t = 0; t < series.size(); ++t) series[t] = snap.layers[t][probes[k]];
        if (b >= 2) {
            auto v = check_variation_bound(series, trackers[k].series(), 0, b, p.eta, trackers[k].mass());
            if (v.witness) v.witness->agent = probes[k];
            var.merge(v);
        }
    }
    out.emplace_back("Lyapunov", lyap);
    out.emplace_back("Variation", var);
    return out;
}

double ScenarioResult::metric(const std::string& name) const {
    for (const auto& [k, v] : metrics)
        if (k == name) return v;
    throw std::out_of_range("no metric '" + name + "'");
}

json to_json(const AuditReport& r) {
    json j = {{"condition", to_string(r.condition)},
              {"pass", r.pass},
              {"worst_violation", r.worst_violation},
              {"checks", r.checks}};
    if (r.witness) j["witness"] = {{"agent", r.witness->agent}, {"time", r.witness->time}, {"v", r.witness->v}};
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

json to_json(const ScenarioResult& r) {
    json j;
    j["scenario"] = r.scenario;
    j["pass"] = r.pass;
    j["metrics"] = json::array();
    for (const auto& [k, v] : r.metrics) j["metrics"].push_back({{"name", k}, {"value", v}});
    j["audits"] = json::array();
    for (const auto& [k, a] : r.audits) {
        json e = to_json(a);
        e["name"] = k;
        j["audits"].push_back(e);
    }
    j["notes"] = r.notes;
    j["series"] = json::array();
    for (const auto& s : r.series)
        j["series"].push_back({{"name", s.name},
                               {"kind", s.kind},
                               {"x_label", s.x_label},
                               {"y_label", s.y_label},
                               {"x", s.x},
                               {"y", s.y},
                               {"labels", s.labels},
                               {"annotation", s.annotation}});
    j["details"] = r.details;
    j["provenance"] = {{"config", r.config}, {"config_hash", r.config_hash}, {"seed", r.seed}, {"version", r.version}};
    return j;
}

ScenarioResult result_from_json(const json& j) {
    auto str = [](const json& v) { return v.get<std::string>(); };
    ScenarioResult r;
    r.scenario = str(j.at("scenario"));
    r.pass = j.at("pass").get<bool>();
    for (const auto& m : j.at("metrics")) r.metrics.emplace_back(str(m.at("name")), m.at("value").get<double>());
    for (const auto& a : j.at("audits")) {
        AuditReport rep;
        const auto cond = str(a.at("condition"));
        for (auto c : {Condition::A1, Condition::A2, Condition::A3, Condition::Lyapunov, Condition::Variation,
                       Condition::TV})
            if (to_string(c) == cond) rep.condition = c;
        rep.pass = a.at("pass").get<bool>();
        rep.worst_violation = a.at("worst_violation").get<double>();
        rep.checks = a.at("checks").get<std::size_t>();
        if (a.contains("witness")) {
            const auto& w = a["witness"];
            rep.witness = Witness{w.at("agent").get<NodeId>(), w.at("time").get<std::size_t>(), w.at("v").get<double>()};
        }
        if (a.contains("note")) rep.note = str(a["note"]);
        r.audits.emplace_back(str(a.at("name")), rep);
    }
    r.notes = j.value("notes", std::vector<std::string>{});
    for (const auto& s : j.at("series"))
        r.series.push_back(Series{str(s.at("name")), str(s.at("kind")), str(s.at("x_label")), str(s.at("y_label")),
                                  s.at("x").get<std::vector<double>>(),
                                  s.at("y").get<std::vector<std::vector<double>>>(),
                                  s.at("labels").get<std::vector<std::string>>(), str(s.at("annotation"))});
    r.details = j.value("details", json::object());
    const auto& p = j.at("provenance");
    r.config = p.at("config");
    r.config_hash = str(p.at("config_hash"));
    r.seed = p.at("seed").get<std::uint64_t>();
    r.version = str(p.at("version"));
    return r;
}

ScenarioResult run_scenario(const ExperimentConfig& cfg, std::size_t workers) {
    const auto diagnostics = validate(cfg);
    if (!diagnostics.empty()) {
        std::string msg = "invalid config:";
        for (const auto& d : diagnostics) msg += "\n  " + d;
        throw std::invalid_argument(msg);
    }
    const auto& s = cfg.scenario;
    if (s == "fragility-bot") return fragility_bot(cfg);
    if (s == "fragility-bias") return fragility_bias(cfg);
    if (s == "robust-bot" || s == "robust-distortion" || s == "eps-sweep") return learning_scenario(cfg, workers);
    if (s == "lyapunov-audit") return lyapunov_audit(cfg, workers);
    if (s == "rw-decay") return rw_decay(cfg);
    if (s == "granular-majority") return granular_majority(cfg, workers);
    throw std::invalid_argument("unknown scenario '" + s + "'");
}

namespace {

std::string series_csv(const Series& s) {
    std::string out = s.x_label.empty() ? "x" : s.x_label;
    for (std::size_t k = 0; k < s.y.size(); ++k) out += "," + (k < s.labels.size() ? s.labels[k] : "y" + std::to_string(k));
    out += '\n';
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        out += fmt(s.x[i]);
        for (const auto& y : s.y) out += "," + (i < y.size() ? fmt(y[i]) : std::string());
        out += '\n';
    }
    return out;
}

}  // namespace

void write_result(const ScenarioResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::string metrics = "name,value\n";
    for (const auto& [k, v] : result.metrics) metrics += k + "," + fmt(v) + "\n";
    for (const auto& s : result.series) atomic_write(dir / (s.name + ".csv"), series_csv(s));
    for (const auto& [name, content] : result.files) atomic_write(dir / name, content);
    atomic_write(dir / "metrics.csv", metrics);
    atomic_write(dir / "result.json", to_json(result).dump(2) + "\n");
}

std::vector<std::filesystem::path> emit_plots(const ScenarioResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    for (const auto& s : result.series) {
        const auto svg = dir / (s.name + ".svg");
        const auto csv = dir / (s.name + ".csv");
        atomic_write(svg, render_svg(s));
        atomic_write(csv, series_csv(s));
        written.push_back(svg);
        written.push_back(csv);
    }
    return written;
}

}  // namespace rdg
