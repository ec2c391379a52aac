#include "rdg/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rdg/rng.hpp"

namespace rdg {

namespace {

constexpr std::uint64_t kInitTag = 0x696e6974ULL;   // "init"
constexpr std::uint64_t kNoiseTag = 0x6e6f6973ULL;  // "nois"
constexpr std::uint64_t kSignTag = 0x7369676eULL;   // "sign"

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

OpinionState OpinionState::from_initial(std::vector<double> initial) {
    OpinionState s;
    s.prev = initial;
    s.prev2 = initial;
    s.now = std::move(initial);
    return s;
}

std::string describe(const UpdateRule& rule) {
    std::ostringstream os;
    std::visit(overloaded{
                   [&](const DeGroot&) { os << "degroot"; },
                   [&](const EpsDeGroot& r) { os << "eps_degroot(eps=" << r.eps << ")"; },
                   [&](const GranularDeGroot& r) {
                       os << "granular_degroot(W={";
                       for (std::size_t k = 0; k < r.W.size(); ++k) os << (k ? "," : "") << r.W[k];
                       os << "})";
                   },
                   [&](const CustomRule& r) { os << "custom(" << r.name << ")"; },
               },
               rule);
    return os.str();
}

void validate(const UpdateRule& rule) {
    std::visit(overloaded{
                   [](const DeGroot&) {},
                   [](const EpsDeGroot& r) {
                       if (!(r.eps > 0.0)) throw std::invalid_argument("eps must be > 0");
                   },
                   [](const GranularDeGroot& r) {
                       if (r.W.empty()) throw std::invalid_argument("W must be nonempty");
                       for (std::size_t k = 0; k < r.W.size(); ++k) {
                           if (r.W[k] < 0.0 || r.W[k] > 1.0)
                               throw std::invalid_argument("W must lie within [0,1]");
                           if (k > 0 && !(r.W[k - 1] < r.W[k]))
                               throw std::invalid_argument("W must be strictly sorted");
                       }
                   },
                   [](const CustomRule& r) {
                       if (!r.fn) throw std::invalid_argument("custom rule has no function");
                   },
               },
               rule);
}

std::string to_string(DistortionKind kind) {
    switch (kind) {
        case DistortionKind::none: return "none";
        case DistortionKind::plus_bias: return "plus_bias";
        case DistortionKind::minus_bias: return "minus_bias";
        case DistortionKind::uniform_noise: return "uniform_noise";
        case DistortionKind::per_step_adversarial: return "per_step_adversarial";
    }
    return "none";
}

DistortionKind distortion_from_string(const std::string& name) {
    for (auto k : {DistortionKind::none, DistortionKind::plus_bias, DistortionKind::minus_bias,
                   DistortionKind::uniform_noise, DistortionKind::per_step_adversarial})
        if (to_string(k) == name) return k;
    throw std::invalid_argument("unknown distortion kind '" + name + "'");
}

double degroot_value(std::span<const double> neighbors) {
    if (neighbors.empty()) throw std::invalid_argument("degroot_value: empty neighbor list");
    double sum = 0.0;
    for (double v : neighbors) sum += v;
    return sum / static_cast<double>(neighbors.size());
}

double granular_project(double anchor, double x, std::span<const double> W) {
    auto hi = std::lower_bound(W.begin(), W.end(), x);
    if (hi == W.begin()) return W.front();
    if (hi == W.end()) return W.back();
    const double upper = *hi;
    const double lower = *(hi - 1);
    const double d_lo = x - lower;
    const double d_hi = upper - x;
    if (d_lo < d_hi) return lower;
    if (d_hi < d_lo) return upper;
    const double a_lo = std::abs(lower - anchor);
    const double a_hi = std::abs(upper - anchor);
    return a_hi < a_lo ? upper : lower;
}

double granular_value(double x_prev2, std::span<const double> neighbor_obs, std::span<const double> W) {
    if (neighbor_obs.empty()) throw std::invalid_argument("granular_value: empty neighbor list");
    double sum = 0.0;
    for (double v : neighbor_obs) sum += granular_project(0.0, v, W);
    return granular_project(x_prev2, sum / static_cast<double>(neighbor_obs.size()), W);
}

std::vector<std::optional<double>> role_table(std::size_t node_count, std::span<const Bot> bots) {
    std::vector<std::optional<double>> roles(node_count);
    for (const auto& b : bots) {
        if (b.node >= node_count) throw std::invalid_argument("bot node out of range");
        roles[b.node] = b.value;
    }
    return roles;
}

OpinionState sample_initial(const Graph& g, const InitialDistribution& init, std::uint64_t seed,
                            std::span<const Bot> bots) {
    if (!(init.K > 0.0) && init.noise != NoiseKind::degenerate)
        throw std::invalid_argument("initial noise needs K > 0");
    if (init.clip_range) {
        const auto [lo, hi] = *init.clip_range;
        const double k = init.noise == NoiseKind::degenerate ? 0.0 : init.K;
        if (init.mu - k < lo || init.mu + k > hi)
            throw std::invalid_argument("clip_range does not contain [mu-K, mu+K]");
    }
    std::vector<double> a(g.node_count());
    for (NodeId i = 0; i < a.size(); ++i) {
        const std::uint64_t bits = hash_coords(seed, kInitTag, i);
        double x = 0.0;
        switch (init.noise) {
            case NoiseKind::uniform: x = init.K * (2.0 * to_unit(bits) - 1.0); break;
            case NoiseKind::two_point: x = (bits >> 63) ? init.K : -init.K; break;
            case NoiseKind::degenerate: x = 0.0; break;
        }
        a[i] = init.mu + x;
    }
    for (const auto& b : bots) {
        if (b.node >= a.size()) throw std::invalid_argument("bot node out of range");
        a[b.node] = b.value;
    }
    return OpinionState::from_initial(std::move(a));
}

namespace {

// One key per step, one per observer, then a single mix per neighbor slot.
inline std::uint64_t step_key(const DistortionModel& d, std::uint64_t seed, std::size_t t) {
    return d.kind == DistortionKind::per_step_adversarial ? hash_coords(d.seed ^ kSignTag, t)
                                                          : hash_coords(seed ^ kNoiseTag, t);
}

inline std::uint64_t agent_key(std::uint64_t step, NodeId i) {
    return mix64(step + 0xd1b54a32d192ed03ULL * (static_cast<std::uint64_t>(i) + 1));
}

inline double noise_offset(const DistortionModel& d, std::uint64_t key, std::size_t slot) {
    switch (d.kind) {
        case DistortionKind::none: return 0.0;
        case DistortionKind::plus_bias: return d.beta;
        case DistortionKind::minus_bias: return -d.beta;
        case DistortionKind::uniform_noise:
            return d.beta * (2.0 * to_unit(mix64(key + 0x9e3779b97f4a7c15ULL * (slot + 1))) - 1.0);
        case DistortionKind::per_step_adversarial:
            return (mix64(key + 0x9e3779b97f4a7c15ULL * (slot + 1)) >> 63) ? d.beta : -d.beta;
    }
    return 0.0;
}

}  // namespace

void perceive(const Graph& g, std::span<const double> observed, std::size_t t, NodeId i,
              const DistortionModel& distortion, std::uint64_t seed, std::vector<double>& out) {
    out.clear();
    const auto nb = g.neighbors(i);
    const std::uint64_t key = agent_key(step_key(distortion, seed, t), i);
    for (std::size_t k = 0; k < nb.size(); ++k) out.push_back(observed[nb[k]] + noise_offset(distortion, key, k));
}

Simulator::Simulator(const Graph& g, UpdateRule rule, std::vector<Bot> bots, DistortionModel distortion,
                     std::uint64_t seed, OpinionState initial)
    : graph_(&g),
      rule_(std::move(rule)),
      roles_(role_table(g.node_count(), bots)),
      distortion_(distortion),
      seed_(seed),
      state_(std::move(initial)) {
    validate(rule_);
    if (distortion_.beta < 0.0) throw std::invalid_argument("distortion beta must be >= 0");
    const std::size_t n = g.node_count();
    if (state_.now.size() != n || state_.prev.size() != n || state_.prev2.size() != n)
        throw std::invalid_argument("opinion state size does not match graph");
    scratch_.reserve(g.degree_bound());
}

template <class Perceived>
void Simulator::update_all(Perceived&& perceived, std::vector<double>& next) {
    const Graph& g = *graph_;
    const auto offsets = g.offsets();
    const auto adj = g.adjacency();
    const std::size_t n = g.node_count();
    const auto& own = state_.prev;

    auto for_regular = [&](auto&& body) {
        for (NodeId i = 0; i < n; ++i) {
            if (roles_[i]) {
                next[i] = *roles_[i];
                continue;
            }
            body(i, offsets[i], offsets[i + 1]);
        }
    };
    auto average = [&](NodeId i, std::size_t b, std::size_t e) {
        double sum = 0.0;
        for (std::size_t s = b; s < e; ++s) sum += perceived(i, s - b, adj[s]);
        return sum / static_cast<double>(e - b);
    };

    std::visit(overloaded{
                   [&](const DeGroot&) {
                       for_regular([&](NodeId i, std::size_t b, std::size_t e) { next[i] = average(i, b, e); });
                   },
                   [&](const EpsDeGroot& r) {
                       for_regular([&](NodeId i, std::size_t b, std::size_t e) {
                           next[i] = eps_degroot_value(own[i], average(i, b, e), r.eps);
                       });
                   },
                   [&](const GranularDeGroot& r) {
                       const std::span<const double> W(r.W);
                       for_regular([&](NodeId i, std::size_t b, std::size_t e) {
                           double sum = 0.0;
                           for (std::size_t s = b; s < e; ++s)
                               sum += granular_project(0.0, perceived(i, s - b, adj[s]), W);
                           next[i] = granular_project(own[i], sum / static_cast<double>(e - b), W);
                       });
                   },
                   [&](const CustomRule& r) {
                       for_regular([&](NodeId i, std::size_t b, std::size_t e) {
                           scratch_.clear();
                           for (std::size_t s = b; s < e; ++s) scratch_.push_back(perceived(i, s - b, adj[s]));
                           next[i] = r.fn(own[i], scratch_);
                       });
                   },
               },
               rule_);
}

// An agent whose own value lies strictly inside [y - (eps - beta), y + (eps - beta)]
// around the true average y keeps it under any perceived average within beta,
// so its noise is never drawn. Other agents take the same path as update_all.
void Simulator::step_eps_noisy(double eps, std::uint64_t step, std::vector<double>& next) {
    const Graph& g = *graph_;
    const auto offsets = g.offsets();
    const auto adj = g.adjacency();
    const auto& own = state_.prev;
    const auto& now = state_.now;
    const double inner = eps - distortion_.beta - 1e-12;
    for (NodeId i = 0; i < g.node_count(); ++i) {
        if (roles_[i]) {
            next[i] = *roles_[i];
            continue;
        }
        const std::size_t b = offsets[i];
        const std::size_t e = offsets[i + 1];
        const double deg = static_cast<double>(e - b);
        double sum = 0.0;
        for (std::size_t s = b; s < e; ++s) sum += now[adj[s]];
        if (std::abs(own[i] - sum / deg) <= inner) {
            next[i] = own[i];
            continue;
        }
        const std::uint64_t key = agent_key(step, i);
        sum = 0.0;
        for (std::size_t s = b; s < e; ++s) sum += now[adj[s]] + noise_offset(distortion_, key, s - b);
        next[i] = eps_degroot_value(own[i], sum / deg, eps);
    }
}

void Simulator::step() {
    const auto& now = state_.now;
    const std::size_t t = state_.t;
    // prev2 is not read by any rule, so its buffer receives the new layer.
    std::vector<double> next = std::move(state_.prev2);

    const DistortionModel& d = distortion_;
    switch (d.kind) {
        case DistortionKind::none:
            update_all([&](NodeId, std::size_t, NodeId j) { return now[j]; }, next);
            break;
        case DistortionKind::plus_bias:
        case DistortionKind::minus_bias: {
            const double shift = d.kind == DistortionKind::plus_bias ? d.beta : -d.beta;
            update_all([&](NodeId, std::size_t, NodeId j) { return now[j] + shift; }, next);
            break;
        }
        default: {
            const std::uint64_t sk = step_key(d, seed_, t);
            if (const auto* r = std::get_if<EpsDeGroot>(&rule_); r && d.beta < r->eps) {
                step_eps_noisy(r->eps, sk, next);
                break;
            }
            NodeId cached = static_cast<NodeId>(-1);
            std::uint64_t key = 0;
            update_all(
                [&](NodeId i, std::size_t slot, NodeId j) {
                    if (i != cached) {
                        cached = i;
                        key = agent_key(sk, i);
                    }
                    return now[j] + noise_offset(d, key, slot);
                },
                next);
            break;
        }
    }

    double movement = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) movement = std::max(movement, std::abs(next[i] - state_.prev[i]));
    last_movement_ = movement;

    state_.prev2 = std::move(state_.prev);
    state_.prev = std::move(state_.now);
    state_.now = std::move(next);
    ++state_.t;
}

OpinionState step(const OpinionState& state, const Graph& g, const UpdateRule& rule, std::span<const Bot> bots,
                  const DistortionModel& distortion, std::uint64_t seed) {
    Simulator sim(g, rule, std::vector<Bot>(bots.begin(), bots.end()), distortion, seed, state);
    sim.step();
    return sim.state();
}

OpinionState initial_state(const Graph& g, const SimConfig& config) {
    OpinionState s = sample_initial(g, config.init, config.seed, config.bots);
    if (const auto* gr = std::get_if<GranularDeGroot>(&config.rule)) {
        validate(config.rule);
        const auto roles = role_table(g.node_count(), config.bots);
        for (std::size_t i = 0; i < s.now.size(); ++i)
            if (!roles[i]) s.now[i] = granular_project(0.0, s.now[i], gr->W);
        s.prev = s.now;
        s.prev2 = s.now;
    }
    return s;
}

Trajectory run(const Graph& g, const SimConfig& config, OpinionState initial) {
    for (NodeId p : config.probes)
        if (p >= g.node_count()) throw std::invalid_argument("probe node out of range");
    if (config.settle && config.settle->window == 0) throw std::invalid_argument("settle window must be > 0");

    Simulator sim(g, config.rule, config.bots, config.distortion, config.seed, std::move(initial));
    Trajectory traj;
    traj.probes = config.probes;
    traj.probe_series.resize(config.probes.size());

    auto record = [&] {
        const auto& s = sim.state();
        switch (config.record) {
            case RecordMode::full: traj.layers.push_back(s.now); break;
            case RecordMode::probes:
                for (std::size_t k = 0; k < config.probes.size(); ++k)
                    traj.probe_series[k].push_back(s.now[config.probes[k]]);
                break;
            case RecordMode::last_two: break;
        }
    };

    record();
    std::size_t quiet = 0;
    for (std::size_t k = 0; k < config.horizon; ++k) {
        sim.step();
        record();
        ++traj.steps_run;
        if (config.settle) {
            quiet = sim.last_movement() <= config.settle->tolerance ? quiet + 1 : 0;
            if (quiet >= config.settle->window) {
                traj.settled = true;
                break;
            }
        }
    }
    traj.final_state = sim.state();
    return traj;
}

Trajectory run(const Graph& g, const SimConfig& config) { return run(g, config, initial_state(g, config)); }

Trajectory run(const SimConfig& config) {
    const Graph g = generate(config.graph);
    return run(g, config);
}

}  // namespace rdg
