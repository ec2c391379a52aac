#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rdg/dynamics.hpp"
#include "rdg/graph.hpp"
#include "rdg/lyapunov.hpp"

namespace rdg {

/// (eps, gamma, eta): approximate-averaging radius, robustness radius and
/// robustness rate of an update rule. Requires 0 < gamma <= eps, eta > 0.
struct RobustnessParams {
    double eps = 0.0;
    double gamma = 0.0;
    double eta = 0.0;
};

void validate(const RobustnessParams& p);

enum class Condition { A1, A2, A3, Lyapunov, Variation, TV };
std::string to_string(Condition c);

struct Witness {
    NodeId agent = 0;
    std::size_t time = 0;
    double v = 0.0;  // test point for A3; compared value for the other audits
};

/// Outcome of one audit. `worst_violation` is the largest amount by which a
/// checked inequality was exceeded (<= 0 when it always held); `pass` is
/// decided per check against a slack scaled to the compared magnitudes.
struct AuditReport {
    AuditReport() = default;
    explicit AuditReport(Condition c) : condition(c) {}

    Condition condition = Condition::A3;
    bool pass = true;
    double worst_violation = 0.0;
    std::optional<Witness> witness;
    std::size_t checks = 0;
    std::string note;

    /// Folds a single check into the report.
    void record(double violation, double slack, const Witness& w);
    void merge(const AuditReport& other);
};

/// Absolute slack for an inequality whose sides have the given magnitude.
inline double audit_slack(double magnitude) { return 1e-9 * (1.0 + magnitude); }

/// eta |x_new - x_prev2| <= (x_prev2 - v)^2 - (x_new - v)^2 for all v in
/// [y - gamma, y + gamma]. The right side is affine in v, so the interval
/// endpoints are the exact worst cases; a uniform grid is checked as well.
AuditReport check_A3(double x_prev2, double y, double x_new, const RobustnessParams& params,
                     std::size_t v_grid_points = 33);

/// |x_new - y_true| <= eps.
AuditReport check_A2(double x_new, double y_true, double eps);

/// Runs the two trajectories with shared randomness and checks low <= high
/// pointwise at every step.
AuditReport check_A1_coupling(const Graph& g, const SimConfig& config, OpinionState low, OpinionState high,
                              std::size_t steps);

/// Raises a random subset of coordinates by up to `max_raise`.
struct OrderPerturbation {
    double max_raise = 0.1;
    double fraction = 0.5;
    std::uint64_t seed = 1;
};

/// Builds the ordered pair from config's initial state and `perturb`, then couples.
AuditReport check_A1_coupling(const Graph& g, const SimConfig& config, const OrderPerturbation& perturb);

/// V_a^b = sum_{a<t<b} |A_{t+1} - A_{t-1}| over a series indexed from t = 0.
/// Throws std::invalid_argument unless b > a and the series covers [0, b].
double variation(std::span<const double> series, std::size_t a, std::size_t b);

/// Checks V_a^b <= (L(a) - L(b-1)) / eta and that L is non-increasing on
/// [a, b-1]. `lyapunov_series[t]` = L_{i,1-gamma}(t), `mass` = M_i(1-gamma)
/// scales the slack.
AuditReport check_variation_bound(std::span<const double> series, std::span<const double> lyapunov_series,
                                  std::size_t a, std::size_t b, double eta, double mass);

/// Same check computing L_{i,1-gamma} from a full recording layers[t][agent].
AuditReport check_variation_bound(const Graph& g, NodeId i, double gamma, double eta,
                                  const std::vector<std::vector<double>>& layers, std::size_t a, std::size_t b);

/// Non-increase of a Lyapunov series with slack 1e-9 * mass.
AuditReport check_lyapunov_monotone(std::span<const double> lyapunov_series, double mass);

/// Total-variation distance between the uniform law on N_j and the law
/// proportional to r^{d(i,(j,k))}, k in N_j.
double tv_weight_gap(const Graph& g, NodeId i, NodeId j, double r);

/// (eps, gamma, 2(eps - gamma)). Throws unless 0 < gamma < eps.
RobustnessParams eps_degroot_params(double eps, double gamma);

struct GranularParams {
    double eps_W = 0.0;  // covering radius of W in [0,1]
    double rho_W = 0.0;  // packing radius of W (half the minimum gap; 1 for a singleton)
    double gamma = 0.0;
    double eta = 0.0;
};

/// k-term averages of W for k = 1..d, merged with the 2-term averages, sorted
/// and deduplicated.
std::vector<double> granular_average_set(std::span<const double> W, std::size_t d);

GranularParams granular_params(std::span<const double> W, std::size_t d);

/// (eps + beta, gamma - beta, eta). Throws unless 0 <= beta < gamma.
RobustnessParams beta_reduction(const RobustnessParams& params, double beta);

/// Per-step A2/A3 audits over a running simulation. Feed it the state right
/// after each step; it audits every regular agent's update against the true
/// (undistorted) neighbor average.
class StepAuditor {
public:
    StepAuditor(const Graph& g, std::span<const Bot> bots, RobustnessParams params, bool check_a3 = true,
                std::size_t v_grid_points = 33);

    void observe(const OpinionState& after_step);

    const AuditReport& a2() const { return a2_; }
    const AuditReport& a3() const { return a3_; }

private:
    const Graph* graph_;
    std::vector<std::optional<double>> roles_;
    RobustnessParams params_;
    bool check_a3_;
    std::size_t grid_;
    AuditReport a2_{Condition::A2};
    AuditReport a3_{Condition::A3};
};

}  // namespace rdg
