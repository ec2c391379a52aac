#include "rdg/audit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rdg/rng.hpp"

namespace rdg {

void validate(const RobustnessParams& p) {
    if (!(p.eps > 0.0) || !(p.gamma > 0.0) || !(p.eta > 0.0))
        throw std::invalid_argument("robustness parameters must be positive");
    if (p.gamma > p.eps) throw std::invalid_argument("gamma <= eps required");
}

std::string to_string(Condition c) {
    switch (c) {
        case Condition::A1: return "A1";
        case Condition::A2: return "A2";
        case Condition::A3: return "A3";
        case Condition::Lyapunov: return "Lyapunov";
        case Condition::Variation: return "Variation";
        case Condition::TV: return "TV";
    }
    return "?";
}

void AuditReport::record(double violation, double slack, const Witness& w) {
    ++checks;
    if (violation > slack) {
        if (pass || violation > worst_violation) witness = w;
        pass = false;
    }
    worst_violation = std::max(worst_violation, violation);
}

void AuditReport::merge(const AuditReport& other) {
    checks += other.checks;
    if (!other.pass && (pass || other.worst_violation > worst_violation)) witness = other.witness;
    pass = pass && other.pass;
    worst_violation = std::max(worst_violation, other.worst_violation);
}

namespace {

struct A3Outcome {
    double violation;
    double slack;
    double v;
};

A3Outcome a3_worst(double x_prev2, double y, double x_new, const RobustnessParams& p, std::size_t grid) {
    const double lhs = p.eta * std::abs(x_new - x_prev2);
    A3Outcome worst{-INFINITY, 0.0, y};
    auto test = [&](double v) {
        const double a = (x_prev2 - v) * (x_prev2 - v);
        const double b = (x_new - v) * (x_new - v);
        const double violation = lhs - (a - b);
        const double slack = audit_slack(lhs + a + b);
        if (violation - slack > worst.violation - worst.slack) worst = {violation, slack, v};
    };
    test(y - p.gamma);
    test(y + p.gamma);
    if (grid >= 2)
        for (std::size_t k = 1; k + 1 < grid; ++k)
            test(y - p.gamma + 2.0 * p.gamma * static_cast<double>(k) / static_cast<double>(grid - 1));
    return worst;
}

}  // namespace

AuditReport check_A3(double x_prev2, double y, double x_new, const RobustnessParams& params,
                     std::size_t v_grid_points) {
    if (v_grid_points < 3) throw std::invalid_argument("check_A3 needs at least 3 grid points");
    AuditReport report{Condition::A3};
    const auto w = a3_worst(x_prev2, y, x_new, params, v_grid_points);
    report.record(w.violation, w.slack, Witness{0, 0, w.v});
    return report;
}

AuditReport check_A2(double x_new, double y_true, double eps) {
    AuditReport report{Condition::A2};
    const double violation = std::abs(x_new - y_true) - eps;
    report.record(violation, audit_slack(std::abs(x_new) + std::abs(y_true) + eps), Witness{0, 0, y_true});
    return report;
}

AuditReport check_A1_coupling(const Graph& g, const SimConfig& config, OpinionState low, OpinionState high,
                              std::size_t steps) {
    AuditReport report{Condition::A1};
    auto compare = [&](const OpinionState& a, const OpinionState& b) {
        for (NodeId i = 0; i < a.now.size(); ++i)
            report.record(a.now[i] - b.now[i], 0.0, Witness{i, a.t, b.now[i]});
    };
    for (std::size_t i = 0; i < low.now.size(); ++i)
        if (low.now[i] > high.now[i] || low.prev[i] > high.prev[i])
            throw std::invalid_argument("check_A1_coupling: initial states are not ordered");
    Simulator lo(g, config.rule, config.bots, config.distortion, config.seed, std::move(low));
    Simulator hi(g, config.rule, config.bots, config.distortion, config.seed, std::move(high));
    compare(lo.state(), hi.state());
    for (std::size_t k = 0; k < steps; ++k) {
        lo.step();
        hi.step();
        compare(lo.state(), hi.state());
    }
    return report;
}

AuditReport check_A1_coupling(const Graph& g, const SimConfig& config, const OrderPerturbation& perturb) {
    OpinionState low = initial_state(g, config);
    std::vector<double> raised = low.now;
    const auto roles = role_table(g.node_count(), config.bots);
    for (NodeId i = 0; i < raised.size(); ++i) {
        if (roles[i]) continue;
        if (to_unit(hash_coords(perturb.seed, 1, i)) < perturb.fraction)
            raised[i] += perturb.max_raise * to_unit(hash_coords(perturb.seed, 2, i));
    }
    if (const auto* gr = std::get_if<GranularDeGroot>(&config.rule))
        for (NodeId i = 0; i < raised.size(); ++i)
            if (!roles[i]) raised[i] = granular_project(0.0, raised[i], gr->W);
    const std::size_t steps = config.horizon;
    return check_A1_coupling(g, config, std::move(low), OpinionState::from_initial(std::move(raised)), steps);
}

double variation(std::span<const double> series, std::size_t a, std::size_t b) {
    if (b <= a) throw std::invalid_argument("variation needs b > a");
    if (series.size() <= b) throw std::invalid_argument("variation: recording window does not reach time b");
    double v = 0.0;
    for (std::size_t t = a + 1; t < b; ++t) v += std::abs(series[t + 1] - series[t - 1]);
    return v;
}

AuditReport check_lyapunov_monotone(std::span<const double> lyap, double mass) {
    AuditReport report{Condition::Lyapunov};
    const double slack = 1e-9 * mass;
    for (std::size_t t = 1; t < lyap.size(); ++t)
        report.record(lyap[t] - lyap[t - 1], slack, Witness{0, t, lyap[t]});
    return report;
}

AuditReport check_variation_bound(std::span<const double> series, std::span<const double> lyap, std::size_t a,
                                  std::size_t b, double eta, double mass) {
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
    if (lyap.size() < b) throw std::invalid_argument("Lyapunov series does not reach time b-1");
    AuditReport report{Condition::Variation};
    const double v = variation(series, a, b);
    const double drop = lyap[a] - lyap[b - 1];
    report.record(eta * v - drop, 1e-9 * (1.0 + mass), Witness{0, b, v});

    auto mono = check_lyapunov_monotone(lyap.subspan(a, b - a), mass);
    if (!mono.pass) {
        report.note = "Lyapunov series increased on [a, b-1]";
        if (mono.witness) mono.witness->time += a;
    }
    mono.condition = Condition::Variation;
    report.merge(mono);
    return report;
}

AuditReport check_variation_bound(const Graph& g, NodeId i, double gamma, double eta,
                                  const std::vector<std::vector<double>>& layers, std::size_t a, std::size_t b) {
    if (layers.size() <= b) throw std::invalid_argument("recording does not reach time b");
    const auto w = slot_weights<double>(g, i, 1.0 - gamma);
    std::vector<double> lyap(b);
    for (std::size_t t = 0; t < b; ++t) lyap[t] = lyapunov<double>(g, w, layers[t], layers[t + 1]);
    std::vector<double> series(b + 1);
    for (std::size_t t = 0; t <= b; ++t) series[t] = layers[t][i];
    auto report = check_variation_bound(series, lyap, a, b, eta, weight_mass(g, i, 1.0 - gamma));
    if (report.witness) report.witness->agent = i;
    return report;
}

double tv_weight_gap(const Graph& g, NodeId i, NodeId j, double r) {
    if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("tv_weight_gap needs r in (0,1)");
    const auto dist = bfs_distances(g, i);
    const auto nb = g.neighbors(j);
    std::vector<double> q(nb.size());
    double total = 0.0;
    for (std::size_t k = 0; k < nb.size(); ++k) {
        q[k] = integer_power(r, std::min(dist[j], dist[nb[k]]));
        total += q[k];
    }
    const double u = 1.0 / static_cast<double>(nb.size());
    double tv = 0.0;
    for (double w : q) tv += std::max(0.0, u - w / total);
    return tv;
}

RobustnessParams eps_degroot_params(double eps, double gamma) {
    if (!(gamma > 0.0) || !(gamma < eps)) throw std::invalid_argument("eps_degroot_params needs 0 < gamma < eps");
    return {eps, gamma, 2.0 * (eps - gamma)};
}

namespace {

std::vector<double> sorted_unique(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::vector<double> out;
    for (double x : v)
        if (out.empty() || x - out.back() > 1e-12 * (1.0 + std::abs(x))) out.push_back(x);
    return out;
}

double packing_radius(const std::vector<double>& sorted) {
    if (sorted.size() < 2) return 1.0;
    double gap = INFINITY;
    for (std::size_t k = 1; k < sorted.size(); ++k) gap = std::min(gap, sorted[k] - sorted[k - 1]);
    return gap / 2.0;
}

}  // namespace

std::vector<double> granular_average_set(std::span<const double> W, std::size_t d) {
    if (W.empty()) throw std::invalid_argument("W must be nonempty");
    if (d < 1) throw std::invalid_argument("degree bound must be >= 1");
    const std::vector<double> base = sorted_unique({W.begin(), W.end()});
    std::vector<double> all;
    std::vector<double> sums = base;  // distinct k-term sums
    const std::size_t max_terms = std::max<std::size_t>(d, 2);
    for (std::size_t k = 1; k <= max_terms; ++k) {
        if (k > 1) {
            std::vector<double> next;
            next.reserve(sums.size() * base.size());
            for (double s : sums)
                for (double w : base) next.push_back(s + w);
            sums = sorted_unique(std::move(next));
        }
        if (k <= d || k == 2)
            for (double s : sums) all.push_back(s / static_cast<double>(k));
    }
    return sorted_unique(std::move(all));
}

GranularParams granular_params(std::span<const double> W, std::size_t d) {
    const std::vector<double> w = sorted_unique({W.begin(), W.end()});
    if (w.empty()) throw std::invalid_argument("W must be nonempty");
    GranularParams p;
    p.eps_W = std::max(w.front(), 1.0 - w.back());
    for (std::size_t k = 1; k < w.size(); ++k) p.eps_W = std::max(p.eps_W, (w[k] - w[k - 1]) / 2.0);
    p.rho_W = packing_radius(w);
    p.gamma = p.eta = packing_radius(granular_average_set(w, d));
    return p;
}

RobustnessParams beta_reduction(const RobustnessParams& params, double beta) {
    if (beta < 0.0) throw std::invalid_argument("beta must be >= 0");
    if (!(beta < params.gamma)) throw std::invalid_argument("beta must be < gamma (beta in [0, gamma))");
    return {params.eps + beta, params.gamma - beta, params.eta};
}

StepAuditor::StepAuditor(const Graph& g, std::span<const Bot> bots, RobustnessParams params, bool check_a3,
                         std::size_t v_grid_points)
    : graph_(&g),
      roles_(role_table(g.node_count(), bots)),
      params_(params),
      check_a3_(check_a3),
      grid_(v_grid_points) {
    if (grid_ < 3) throw std::invalid_argument("StepAuditor needs at least 3 grid points");
}

void StepAuditor::observe(const OpinionState& s) {
    const Graph& g = *graph_;
    for (NodeId i = 0; i < g.node_count(); ++i) {
        if (roles_[i]) continue;
        double sum = 0.0;
        for (NodeId j : g.neighbors(i)) sum += s.prev[j];
        const double y = sum / static_cast<double>(g.degree(i));
        const double x_new = s.now[i];
        a2_.record(std::abs(x_new - y) - params_.eps, audit_slack(std::abs(x_new) + std::abs(y) + params_.eps),
                   Witness{i, s.t, y});
        if (check_a3_) {
            const auto w = a3_worst(s.prev2[i], y, x_new, params_, grid_);
            a3_.record(w.violation, w.slack, Witness{i, s.t, w.v});
        }
    }
}

}  // namespace rdg
