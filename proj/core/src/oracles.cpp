#include "rdg/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rdg/parallel.hpp"
#include "rdg/rng.hpp"

namespace rdg {

double WalkDistribution::max_prob() const {
    return probs.empty() ? 0.0 : *std::max_element(probs.begin(), probs.end());
}

double WalkDistribution::sum_of_squares() const {
    double s = 0.0;
    for (double p : probs) s += p * p;
    return s;
}

namespace {

void propagate(const Graph& g, const std::vector<char>& absorbing, const std::vector<double>& cur,
               std::vector<double>& next) {
    std::fill(next.begin(), next.end(), 0.0);
    for (NodeId j = 0; j < g.node_count(); ++j) {
        const double p = cur[j];
        if (p == 0.0) continue;
        if (absorbing[j]) {
            next[j] += p;
            continue;
        }
        const auto nb = g.neighbors(j);
        const double share = p / static_cast<double>(nb.size());
        for (NodeId k : nb) next[k] += share;
    }
}

WalkDistribution walk_impl(const Graph& g, const std::vector<char>& absorbing, NodeId i, std::size_t t) {
    if (i >= g.node_count()) throw std::invalid_argument("walk origin out of range");
    WalkDistribution w;
    w.origin = i;
    w.t = t;
    w.probs.assign(g.node_count(), 0.0);
    w.probs[i] = 1.0;
    std::vector<double> next(g.node_count());
    for (std::size_t s = 0; s < t; ++s) {
        propagate(g, absorbing, w.probs, next);
        w.probs.swap(next);
    }
    for (NodeId j = 0; j < g.node_count(); ++j)
        if (absorbing[j]) w.absorbed += w.probs[j];
    return w;
}

}  // namespace

WalkDistribution walk_distribution(const Graph& g, NodeId i, std::size_t t) {
    return walk_impl(g, std::vector<char>(g.node_count(), 0), i, t);
}

WalkDistribution absorbing_walk_distribution(const Graph& g, std::span<const NodeId> absorbing, NodeId i,
                                             std::size_t t) {
    std::vector<char> mask(g.node_count(), 0);
    for (NodeId b : absorbing) {
        if (b >= g.node_count()) throw std::invalid_argument("absorbing node out of range");
        mask[b] = 1;
    }
    return walk_impl(g, mask, i, t);
}

double degroot_closed_form(const Graph& g, std::span<const double> initial, std::span<const Bot> bots, NodeId i,
                           std::size_t t) {
    if (initial.size() != g.node_count()) throw std::invalid_argument("initial opinions do not match the graph");
    std::vector<double> b0(initial.begin(), initial.end());
    std::vector<NodeId> nodes;
    for (const auto& bot : bots) {
        if (bot.node >= g.node_count()) throw std::invalid_argument("bot node out of range");
        b0[bot.node] = bot.value;
        nodes.push_back(bot.node);
    }
    const auto w = absorbing_walk_distribution(g, nodes, i, t);
    double v = 0.0;
    for (NodeId j = 0; j < g.node_count(); ++j) v += w.probs[j] * b0[j];
    return v;
}

DecayFit p_t_decay_fit(const Graph& g, NodeId i, std::size_t t_min, std::size_t t_max) {
    if (t_min < 1 || t_max <= t_min) throw std::invalid_argument("decay fit needs 1 <= t_min < t_max");
    if (i >= g.node_count()) throw std::invalid_argument("walk origin out of range");
    const std::uint32_t ecc = eccentricity(g, i);
    if (ecc < t_max)
        throw std::invalid_argument("eccentricity " + std::to_string(ecc) + " of the origin is below t_max " +
                                    std::to_string(t_max));

    DecayFit fit;
    const std::vector<char> none(g.node_count(), 0);
    std::vector<double> cur(g.node_count(), 0.0), next(g.node_count());
    cur[i] = 1.0;
    for (std::size_t t = 1; t <= t_max; ++t) {
        propagate(g, none, cur, next);
        cur.swap(next);
        if (t < t_min) continue;
        double p = 0.0;
        for (NodeId j = 0; j < g.node_count(); ++j) {
            p = std::max(p, cur[j]);
            fit.empirical_constant =
                std::max(fit.empirical_constant, cur[j] * std::sqrt(static_cast<double>(t)) / g.degree(j));
        }
        fit.times.push_back(t);
        fit.p_t.push_back(p);
    }

    const double m = static_cast<double>(fit.times.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < fit.times.size(); ++k) {
        const double x = std::log(static_cast<double>(fit.times[k]));
        const double y = std::log(fit.p_t[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    fit.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    fit.intercept = (sy - fit.slope * sx) / m;
    return fit;
}

HoeffdingBound hoeffding_tail_bound(double delta, std::span<const double> probs) {
    if (probs.empty()) throw std::invalid_argument("empty distribution");
    double sq = 0.0, mx = 0.0;
    for (double p : probs) {
        sq += p * p;
        mx = std::max(mx, p);
    }
    return {std::exp(-delta * delta / (2.0 * sq)), std::exp(-delta * delta / (2.0 * mx))};
}

double Horizon::rho1(double c1) const { return std::exp(-c1 * rho1_exponent); }

Horizon horizon_and_rho1(double delta, double eps, double d) {
    if (!(delta > 0.0) || !(eps > 0.0) || !(d > 0.0)) throw std::invalid_argument("delta, eps and d must be > 0");
    // delta / (3 eps) lands just below an integer for inputs like 0.3 / 0.03.
    const double raw = delta / (3.0 * eps) - 1.0;
    Horizon h;
    h.n = static_cast<long long>(std::floor(raw + 1e-9 * (1.0 + std::abs(raw))));
    if (h.n < 1) throw std::invalid_argument("horizon n = " + std::to_string(h.n) + " < 1: delta too small for eps");
    h.rho1_exponent = std::pow(delta, 2.5) / (d * std::sqrt(eps));
    return h;
}

LimitEstimate limit_estimate(std::span<const double> series, double tolerance, std::size_t window) {
    if (window == 0) throw std::invalid_argument("window must be > 0");
    if (series.size() < std::max<std::size_t>(2 * window, 3))
        throw std::invalid_argument("series shorter than twice the window");
    const std::size_t last = series.size() - 1;
    LimitEstimate est;
    est.z_even = series[last % 2 == 0 ? last : last - 1];
    est.z_odd = series[last % 2 == 1 ? last : last - 1];
    const std::size_t first = last - 2 >= window ? last - 2 - window + 1 : 0;
    for (std::size_t t = first; t + 2 <= last; ++t)
        est.window_delta = std::max(est.window_delta, std::abs(series[t + 2] - series[t]));
    est.converged = est.window_delta <= tolerance;
    return est;
}

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z) {
    if (trials == 0) throw std::invalid_argument("Wilson interval needs at least one trial");
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    return {(p + z2 / (2.0 * n)) / denom, z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n))};
}

std::size_t default_exempt_radius(double gamma, double beta, std::size_t cap) {
    const double g = gamma - beta;
    if (!(g > 0.0)) throw std::invalid_argument("gamma - beta must be > 0");
    const double r = std::ceil(std::pow(g, -1.00001));
    if (r >= static_cast<double>(cap)) return cap;
    return static_cast<std::size_t>(r);
}

ConvergenceTracker::ConvergenceTracker(std::size_t node_count, double tolerance, std::size_t window)
    : tolerance_(tolerance), window_(window), quiet_(node_count, 0) {
    if (window == 0) throw std::invalid_argument("window must be > 0");
}

void ConvergenceTracker::observe(const OpinionState& s) {
    if (s.size() != quiet_.size()) throw std::invalid_argument("state size does not match the tracker");
    ++steps_;
    bool all = true;
    for (std::size_t i = 0; i < quiet_.size(); ++i) {
        if (std::abs(s.now[i] - s.prev2[i]) <= tolerance_) {
            ++quiet_[i];
        } else {
            quiet_[i] = 0;
            all = false;
        }
    }
    all_quiet_ = all ? all_quiet_ + 1 : 0;
}

bool ConvergenceTracker::converged(NodeId i) const { return steps_ >= 2 * window_ && quiet_[i] >= window_; }

bool ConvergenceTracker::all_converged() const { return steps_ >= 2 * window_ && all_quiet_ >= window_; }

std::vector<std::pair<double, double>> parity_limits(const OpinionState& s) {
    std::vector<std::pair<double, double>> z(s.size());
    const bool even_now = s.t % 2 == 0;
    for (std::size_t i = 0; i < s.size(); ++i)
        z[i] = even_now ? std::pair{s.now[i], s.prev[i]} : std::pair{s.prev[i], s.now[i]};
    return z;
}

std::vector<NodeId> audited_agents(const Graph& g, std::span<const Bot> bots, std::size_t exempt_radius) {
    std::vector<NodeId> out;
    if (bots.empty()) {
        for (NodeId i = 0; i < g.node_count(); ++i) out.push_back(i);
        return out;
    }
    std::vector<NodeId> sources;
    for (const auto& b : bots) sources.push_back(b.node);
    const auto dist = bfs_distances(g, sources);
    for (NodeId i = 0; i < g.node_count(); ++i)
        if (dist[i] > exempt_radius) out.push_back(i);
    return out;
}

ReplicationOutcome run_replication(const Graph& g, const SimConfig& config, std::span<const NodeId> audited) {
    const SettleRule rule = config.settle.value_or(SettleRule{});
    Simulator sim(g, config.rule, config.bots, config.distortion, config.seed, initial_state(g, config));
    ConvergenceTracker tracker(g.node_count(), rule.tolerance, rule.window);
    ReplicationOutcome out;
    out.seed = config.seed;
    while (tracker.steps() < config.horizon) {
        sim.step();
        tracker.observe(sim.state());
        if (tracker.all_converged()) {
            out.settled = true;
            break;
        }
    }
    out.steps = tracker.steps();
    const auto z = parity_limits(sim.state());
    for (NodeId i : audited) {
        out.z.push_back(z[i]);
        out.converged.push_back(tracker.converged(i));
    }
    return out;
}

LearningEstimate summarize_learning(std::vector<NodeId> audited, std::vector<ReplicationOutcome> outcomes,
                                    const LearningCriterion& criterion, std::uint64_t base_seed) {
    if (outcomes.empty()) throw std::invalid_argument("replications must be >= 1");
    LearningEstimate est;
    est.audited = std::move(audited);
    est.replications = outcomes.size();
    est.base_seed = base_seed;
    const std::size_t m = est.audited.size();
    for (const auto& o : outcomes) {
        if (o.z.size() != m || o.converged.size() != m)
            throw std::invalid_argument("replication outcome does not match the audited set");
        est.seeds.push_back(o.seed);
        est.max_steps = std::max(est.max_steps, o.steps);
        const auto missing = static_cast<std::size_t>(std::count(o.converged.begin(), o.converged.end(), 0));
        est.unconverged_agents += missing;
        if (missing) ++est.unconverged_runs;
    }

    est.failure_frequency.assign(m, 0.0);
    est.half_width.assign(m, 0.0);
    est.mean_error.assign(m, 0.0);
    const double reps = static_cast<double>(outcomes.size());
    std::size_t passing = 0;
    double error_total = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        std::size_t failures = 0;
        double err_sum = 0.0;
        for (const auto& o : outcomes) {
            const auto [ze, zo] = o.z[k];
            const double err = std::max(std::abs(ze - criterion.mu), std::abs(zo - criterion.mu));
            err_sum += err;
            if (!o.converged[k] || err > criterion.delta) ++failures;
        }
        const double freq = static_cast<double>(failures) / reps;
        est.failure_frequency[k] = freq;
        est.half_width[k] = wilson_interval(failures, outcomes.size()).half_width;
        est.mean_error[k] = err_sum / reps;
        est.max_frequency = std::max(est.max_frequency, freq);
        error_total += err_sum;
        if (freq + est.half_width[k] <= criterion.rho) ++passing;
    }
    est.fraction_passing = m == 0 ? 1.0 : static_cast<double>(passing) / static_cast<double>(m);
    est.mean_audited_error = m == 0 ? 0.0 : error_total / (static_cast<double>(m) * reps);
    est.pass = passing == m;
    est.z_values.reserve(outcomes.size());
    for (auto& o : outcomes) est.z_values.push_back(std::move(o.z));
    return est;
}

LearningEstimate learning_estimate(const Graph& g, const SimConfig& config, const LearningCriterion& criterion,
                                   std::size_t replications, std::uint64_t base_seed, std::size_t workers) {
    if (replications < 1) throw std::invalid_argument("replications must be >= 1");
    if (!(criterion.delta > 0.0) || !(criterion.rho > 0.0)) throw std::invalid_argument("delta and rho must be > 0");
    auto audited = audited_agents(g, config.bots, criterion.exempt_radius);
    std::vector<ReplicationOutcome> outcomes(replications);
    parallel_for(replications, workers, [&](std::size_t r) {
        SimConfig cfg = config;
        cfg.seed = replication_seed(base_seed, r);
        outcomes[r] = run_replication(g, cfg, audited);
    });
    return summarize_learning(std::move(audited), std::move(outcomes), criterion, base_seed);
}

}  // namespace rdg
