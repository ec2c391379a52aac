#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rdg/dynamics.hpp"
#include "rdg/graph.hpp"

namespace rdg {

/// Law of R_t for a simple random walk started at `origin`.
struct WalkDistribution {
    NodeId origin = 0;
    std::size_t t = 0;
    std::vector<double> probs;
    double absorbed = 0.0;  // mass sitting on absorbing nodes (absorbing walks only)

    double max_prob() const;
    double sum_of_squares() const;
};

/// Exact propagation probs_t(k) = sum_{j ~ k} probs_{t-1}(j) / deg(j).
WalkDistribution walk_distribution(const Graph& g, NodeId i, std::size_t t);

/// Same with `absorbing` nodes keeping their mass forever.
WalkDistribution absorbing_walk_distribution(const Graph& g, std::span<const NodeId> absorbing, NodeId i,
                                             std::size_t t);

/// B_{i,t} = sum_j Pr(R_t = j) B_{j,0}, with bot nodes absorbing.
double degroot_closed_form(const Graph& g, std::span<const double> initial, std::span<const Bot> bots, NodeId i,
                           std::size_t t);

struct DecayFit {
    double slope = 0.0;                // least squares of log p_t on log t
    double intercept = 0.0;
    double empirical_constant = 0.0;   // max over t, j of Pr(R_t = j) sqrt(t) / deg(j)
    std::vector<std::size_t> times;
    std::vector<double> p_t;           // max_j Pr(R_t = j)
};

/// Fits the decay of p_t over t in [t_min, t_max]. Throws std::invalid_argument
/// when the eccentricity of `i` is below t_max or the range is empty.
DecayFit p_t_decay_fit(const Graph& g, NodeId i, std::size_t t_min, std::size_t t_max);

struct HoeffdingBound {
    double sum_of_squares_form = 0.0;  // exp(-delta^2 / (2 sum p^2))
    double max_prob_form = 0.0;        // exp(-delta^2 / (2 p_t))
};

HoeffdingBound hoeffding_tail_bound(double delta, std::span<const double> probs);

struct Horizon {
    long long n = 0;                   // floor(delta / (3 eps) - 1)
    double rho1_exponent = 0.0;        // delta^2.5 / (d sqrt(eps))
    /// exp(-C1 * exponent) for a caller-supplied constant.
    double rho1(double c1) const;
};

/// Throws std::invalid_argument when n < 1.
Horizon horizon_and_rho1(double delta, double eps, double d);

struct LimitEstimate {
    double z_even = 0.0;
    double z_odd = 0.0;
    bool converged = false;
    double window_delta = 0.0;  // max |A_{t+2} - A_t| over the detection window
};

/// Estimates (lim A_{2t}, lim A_{2t+1}) from a series indexed from t = 0.
/// Converged iff every |A_{t+2} - A_t| among the last `window` steps is within
/// `tolerance`. Throws unless the series has at least max(2 * window, 3) samples.
LimitEstimate limit_estimate(std::span<const double> series, double tolerance, std::size_t window);

struct WilsonInterval {
    double center = 0.0;
    double half_width = 0.0;
    double lower() const { return center - half_width; }
    double upper() const { return center + half_width; }
};

/// 95% Wilson score interval for k successes out of n.
WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

struct LearningCriterion {
    double delta = 0.2;
    double rho = 0.1;
    std::size_t exempt_radius = 0;  // agents within this distance of a bot are not audited
    double mu = 0.5;
};

/// Default bot-exemption radius ceil(gamma'^-1.00001), gamma' = gamma - beta,
/// capped at `cap`.
std::size_t default_exempt_radius(double gamma, double beta, std::size_t cap);

/// Online form of limit_estimate for every agent at once. Feed it the state
/// after each step; agent i has converged once |A_{i,t+1} - A_{i,t-1}| stayed
/// within `tolerance` over the last `window` steps and at least 2 * window
/// steps were seen.
class ConvergenceTracker {
public:
    ConvergenceTracker(std::size_t node_count, double tolerance = 1e-6, std::size_t window = 200);

    void observe(const OpinionState& after_step);

    bool converged(NodeId i) const;
    /// Every agent converged; the run can stop.
    bool all_converged() const;
    std::size_t steps() const { return steps_; }

private:
    double tolerance_;
    std::size_t window_;
    std::size_t steps_ = 0;
    std::size_t all_quiet_ = 0;
    std::vector<std::size_t> quiet_;
};

/// (Z_even, Z_odd) of every agent from the last two layers of a run.
std::vector<std::pair<double, double>> parity_limits(const OpinionState& s);

/// Agents farther than `exempt_radius` from every bot (all agents without bots).
std::vector<NodeId> audited_agents(const Graph& g, std::span<const Bot> bots, std::size_t exempt_radius);

struct ReplicationOutcome {
    std::uint64_t seed = 0;
    std::vector<std::pair<double, double>> z;  // per audited agent
    std::vector<char> converged;               // per audited agent
    std::size_t steps = 0;
    bool settled = false;                      // every agent converged before the horizon
};

/// Runs one replication of `config` (with its seed) until every agent
/// converged or the horizon is reached.
ReplicationOutcome run_replication(const Graph& g, const SimConfig& config, std::span<const NodeId> audited);

struct LearningEstimate {
    std::vector<NodeId> audited;            // agents farther than R from every bot
    std::vector<double> failure_frequency;  // per audited agent: Pr(|Z_i - (mu,mu)|_inf > delta or no convergence)
    std::vector<double> half_width;         // Wilson half-width per audited agent
    std::vector<double> mean_error;         // per audited agent: mean |Z_i - (mu,mu)|_inf
    std::size_t replications = 0;
    std::uint64_t base_seed = 0;
    std::vector<std::uint64_t> seeds;
    std::size_t unconverged_runs = 0;       // runs with at least one audited agent not converged
    std::size_t unconverged_agents = 0;     // (run, audited agent) pairs not converged
    std::size_t max_steps = 0;
    double fraction_passing = 0.0;          // audited agents with freq + half-width <= rho
    double max_frequency = 0.0;
    double mean_audited_error = 0.0;
    bool pass = false;                      // every audited agent: freq + half-width <= rho

    /// Raw (Z_even, Z_odd) per replication and audited agent, for export.
    std::vector<std::vector<std::pair<double, double>>> z_values;
};

LearningEstimate summarize_learning(std::vector<NodeId> audited, std::vector<ReplicationOutcome> outcomes,
                                    const LearningCriterion& criterion, std::uint64_t base_seed);

/// Monte Carlo estimate of per-agent learning over independent replications.
/// Replication r runs `config` with seed replication_seed(base_seed, r) and
/// config.settle (default tolerance 1e-6, window 200) as the convergence
/// rule. An audited agent that has not converged at the horizon counts as a
/// failure for that replication. Replications are spread over `workers`
/// threads; results do not depend on the worker count.
LearningEstimate learning_estimate(const Graph& g, const SimConfig& config, const LearningCriterion& criterion,
                                   std::size_t replications, std::uint64_t base_seed, std::size_t workers = 1);

}  // namespace rdg
