#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rdg/graph.hpp"

namespace rdg {

/// Opinions at the current time and the two preceding times.
///
/// With `now = A_t`, the next update A_{t+1} reads each agent's own
/// `prev = A_{t-1}` and its neighbors' `now`. `prev2` is kept so audits can
/// look at (A_{t-2}, A_{t-1}, A_t) after a step.
struct OpinionState {
    std::size_t t = 0;
    std::vector<double> now;
    std::vector<double> prev;
    std::vector<double> prev2;

    /// Time-0 state with A_{-1} = A_{-2} = A_0.
    static OpinionState from_initial(std::vector<double> initial);

    std::size_t size() const { return now.size(); }
};

enum class NoiseKind { uniform, two_point, degenerate };

struct InitialDistribution {
    double mu = 0.5;
    NoiseKind noise = NoiseKind::uniform;
    double K = 0.5;                                          // |x_i| <= K
    std::optional<std::pair<double, double>> clip_range;     // must contain [mu-K, mu+K]
};

struct DeGroot {};
struct EpsDeGroot {
    double eps;
};
struct GranularDeGroot {
    std::vector<double> W;  // strictly increasing, within [0,1]
};
/// Arbitrary local rule, for audit fixtures: new = fn(own A_{t-1}, perceived neighbors at t).
struct CustomRule {
    std::string name;
    std::function<double(double, std::span<const double>)> fn;
};

using UpdateRule = std::variant<DeGroot, EpsDeGroot, GranularDeGroot, CustomRule>;

std::string describe(const UpdateRule& rule);
/// Throws std::invalid_argument when the rule parameters are malformed.
void validate(const UpdateRule& rule);

struct Bot {
    NodeId node;
    double value;
};

enum class DistortionKind { none, plus_bias, minus_bias, uniform_noise, per_step_adversarial };

struct DistortionModel {
    DistortionKind kind = DistortionKind::none;
    double beta = 0.0;
    std::uint64_t seed = 0;  // per_step_adversarial only; uniform_noise uses the run seed
};

std::string to_string(DistortionKind kind);
DistortionKind distortion_from_string(const std::string& name);

enum class RecordMode { full, last_two, probes };

/// Early stop once every agent's same-parity movement |A_{t+1} - A_{t-1}|
/// stayed within `tolerance` for `window` consecutive steps.
struct SettleRule {
    double tolerance = 1e-6;
    std::size_t window = 200;
};

struct SimConfig {
    GraphSpec graph = spec::Path{2};
    UpdateRule rule = DeGroot{};
    std::vector<Bot> bots;
    DistortionModel distortion;
    InitialDistribution init;
    std::size_t horizon = 1;
    std::uint64_t seed = 0;
    RecordMode record = RecordMode::last_two;
    std::vector<NodeId> probes;
    std::optional<SettleRule> settle;
};

struct Trajectory {
    std::vector<std::vector<double>> layers;  // full: layers[t][agent]
    std::vector<NodeId> probes;
    std::vector<std::vector<double>> probe_series;  // probes: probe_series[k][t]
    OpinionState final_state;
    std::size_t steps_run = 0;
    bool settled = false;
};

// ---- single-agent rule pieces ------------------------------------------------

double degroot_value(std::span<const double> neighbors);

/// Projection of `x_prev2` onto [y - eps, y + eps].
inline double eps_degroot_value(double x_prev2, double y, double eps) {
    const double lo = y - eps;
    const double hi = y + eps;
    return x_prev2 < lo ? lo : (x_prev2 > hi ? hi : x_prev2);
}

/// Nearest element of W to x; two-way ties go to the candidate nearer `anchor`,
/// and to the smaller one if both are equally near.
double granular_project(double anchor, double x, std::span<const double> W);

double granular_value(double x_prev2, std::span<const double> neighbor_obs, std::span<const double> W);

// ---- engine ----------------------------------------------------------------

/// Per-node bot value, or nullopt for regular agents.
std::vector<std::optional<double>> role_table(std::size_t node_count, std::span<const Bot> bots);

/// i.i.d. draws A_{i,0} = mu + x_i addressed by (seed, i); bots overridden.
OpinionState sample_initial(const Graph& g, const InitialDistribution& init, std::uint64_t seed,
                            std::span<const Bot> bots = {});

/// Writes the perceived values A'_{j,t} of i's neighbors into `out`.
/// `observed` is the layer at time `t`.
void perceive(const Graph& g, std::span<const double> observed, std::size_t t, NodeId i,
              const DistortionModel& distortion, std::uint64_t seed, std::vector<double>& out);

/// Stateful stepper. Keeps three rotating layers and a scratch buffer; all
/// agents read the same pre-step layers.
class Simulator {
public:
    Simulator(const Graph& g, UpdateRule rule, std::vector<Bot> bots, DistortionModel distortion,
              std::uint64_t seed, OpinionState initial);

    void step();
    const OpinionState& state() const { return state_; }
    const Graph& graph() const { return *graph_; }

    /// max over agents of |A_{t} - A_{t-2}| for the last step.
    double last_movement() const { return last_movement_; }

private:
    template <class Perceived>
    void update_all(Perceived&& perceived, std::vector<double>& next);
    void step_eps_noisy(double eps, std::uint64_t step, std::vector<double>& next);

    const Graph* graph_;
    UpdateRule rule_;
    std::vector<std::optional<double>> roles_;
    DistortionModel distortion_;
    std::uint64_t seed_;
    OpinionState state_;
    std::vector<double> scratch_;
    double last_movement_ = 0.0;
};

/// Functional form of one synchronous step.
OpinionState step(const OpinionState& state, const Graph& g, const UpdateRule& rule,
                  std::span<const Bot> bots, const DistortionModel& distortion, std::uint64_t seed);

/// Initial state for `config` on `g`: sampled, bots applied, and projected onto W
/// for granular rules.
OpinionState initial_state(const Graph& g, const SimConfig& config);

Trajectory run(const Graph& g, const SimConfig& config);
Trajectory run(const Graph& g, const SimConfig& config, OpinionState initial);
Trajectory run(const SimConfig& config);

}  // namespace rdg
