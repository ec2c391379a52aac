#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rdg/audit.hpp"
#include "rdg/dynamics.hpp"
#include "rdg/graph.hpp"
#include "rdg/io.hpp"
#include "rdg/oracles.hpp"

namespace rdg {

std::string version();

/// Registered scenario ids, in a fixed order.
const std::vector<std::string>& scenario_ids();

struct RuleConfig {
    std::string type = "eps_degroot";  // degroot | eps_degroot | granular
    double eps = 0.0;
    std::optional<double> gamma;       // robustness radius used by audits and R
    std::vector<double> W;
};

/// eps values swept by the learning scenarios; gamma = gamma_factor * eps and,
/// for distorted runs, beta = beta_factor * eps.
struct SweepConfig {
    std::vector<double> eps;
    double gamma_factor = 0.95;
    double beta_factor = 0.9;
};

struct WalkConfig {
    std::optional<NodeId> origin;  // default: a node of minimum eccentricity
    std::size_t t_min = 100;
    std::size_t t_max = 1000;
    double slope_min = -0.55;
    double slope_max = -0.45;
};

struct ExperimentConfig {
    std::string scenario;
    GraphSpec graph = spec::Torus{21, 21};
    RuleConfig rule;
    std::vector<Bot> bots;
    DistortionModel distortion;
    InitialDistribution init;
    LearningCriterion criterion;
    bool auto_radius = true;  // R from gamma - beta, truncated to half the graph radius
    std::size_t horizon = 1000;
    std::size_t replications = 1;
    std::uint64_t seed = 0;
    std::string output_dir = "results";
    std::vector<NodeId> probes;
    SweepConfig sweep;
    WalkConfig walk;
    double tolerance = 1e-3;               // fragility-bot: distance to the bot value
    double threshold = 10.0;               // fragility-bias: margin above the initial maximum
    std::vector<std::size_t> checkpoints;  // fragility-bot: oracle comparison times
    std::vector<std::string> variants;     // robust-distortion: distortion kinds to run
    bool save_trajectory = false;

    std::vector<std::string> unknown_keys;
    std::string source;  // the text the config was parsed from
};

/// Parses YAML text. Throws std::runtime_error on malformed input; unknown
/// keys are kept in `unknown_keys` and reported by validate.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON form of the parsed config (sorted keys).
nlohmann::json to_json(const ExperimentConfig& cfg);
nlohmann::json to_json(const GraphSpec& spec);
GraphSpec graph_spec_from_json(const nlohmann::json& j);

/// 64-bit FNV-1a of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

/// Every constraint violation found without running; empty when valid.
std::vector<std::string> validate(const ExperimentConfig& cfg);

/// Exact-radius helper shared by validate and the learning scenarios.
std::size_t exempt_radius_for(const ExperimentConfig& cfg, const Graph& g, double gamma, double beta);

/// walk.origin, or the first node of minimum eccentricity.
NodeId walk_origin(const ExperimentConfig& cfg, const Graph& g);

struct Series {
    std::string name;
    std::string kind;  // line | loglog | fan | sweep
    std::string x_label;
    std::string y_label;
    std::vector<double> x;
    std::vector<std::vector<double>> y;  // one or more curves over x
    std::vector<std::string> labels;     // one per curve
    std::string annotation;
};

struct ScenarioResult {
    std::string scenario;
    bool pass = false;
    std::vector<std::pair<std::string, double>> metrics;  // ordered
    std::vector<std::pair<std::string, AuditReport>> audits;
    std::vector<std::string> notes;
    std::vector<Series> series;
    nlohmann::json details = nlohmann::json::object();
    /// Extra files written next to result.json (raw Z values, trajectory snapshots).
    std::vector<std::pair<std::string, std::string>> files;

    nlohmann::json config;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string version;

    double metric(const std::string& name) const;
};

nlohmann::json to_json(const AuditReport& r);
nlohmann::json to_json(const ScenarioResult& r);
ScenarioResult result_from_json(const nlohmann::json& j);

/// Executes the scenario; throws std::invalid_argument listing the
/// diagnostics when the config does not validate. Deterministic given the
/// config; results do not depend on the worker count.
ScenarioResult run_scenario(const ExperimentConfig& cfg, std::size_t workers = 1);

/// Writes result.json, metrics.csv and one CSV per series into `dir`
/// (atomically, file by file).
void write_result(const ScenarioResult& result, const std::filesystem::path& dir);

/// Renders every series of the result as SVG next to a CSV of its points.
/// Returns the written files.
std::vector<std::filesystem::path> emit_plots(const ScenarioResult& result, const std::filesystem::path& dir);

/// SVG text for one series.
std::string render_svg(const Series& s);

/// Audits a saved trajectory. `params` holds eps and gamma (eta defaults to
/// 2(eps - gamma)), optionally beta to audit with beta_reduction, and probes
/// as Lyapunov centers (default: five evenly spaced agents). Graph and bots
/// come from the snapshot header.
std::vector<std::pair<std::string, AuditReport>> audit_trajectory(const TrajectorySnapshot& snap,
                                                                  const nlohmann::json& params);

/// Majority vote with ties kept at A_{i,t-1}, on 0/1 opinions.
std::vector<std::vector<double>> majority_reference(const Graph& g, std::span<const double> initial,
                                                    std::size_t steps);

}  // namespace rdg
