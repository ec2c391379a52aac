#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

#include "rdg/experiment.hpp"
#include "rdg/io.hpp"

#ifndef RDG_VERSION
#define RDG_VERSION "0.0.0"
#endif

namespace rdg {

using nlohmann::json;

std::string version() { return RDG_VERSION; }

const std::vector<std::string>& scenario_ids() {
    static const std::vector<std::string> ids = {
        "fragility-bot",     "fragility-bias", "robust-bot",     "robust-distortion",
        "granular-majority", "rw-decay",       "lyapunov-audit", "eps-sweep",
    };
    return ids;
}

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

// ---- YAML reading ------------------------------------------------------------

class Fields {
public:
    Fields(const YAML::Node& node, std::string prefix, std::vector<std::string>& unknown)
        : node_(node), prefix_(std::move(prefix)), unknown_(unknown) {
        if (!node_.IsMap()) throw std::runtime_error("'" + where() + "' must be a mapping");
    }
    ~Fields() {
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!seen_.count(key)) unknown_.push_back(prefix_ + key);
        }
    }
    Fields(const Fields&) = delete;
    Fields& operator=(const Fields&) = delete;

    YAML::Node get(const std::string& key) {
        seen_.insert(key);
        return node_[key];
    }
    bool has(const std::string& key) {
        seen_.insert(key);
        return node_[key].IsDefined() && !node_[key].IsNull();
    }

    template <class T>
    void read(const std::string& key, T& out) {
        if (!has(key)) return;
        try {
            out = node_[key].as<T>();
        } catch (const YAML::Exception&) {
            throw std::runtime_error("'" + prefix_ + key + "' has the wrong type");
        }
    }
    template <class T>
    void read(const std::string& key, std::optional<T>& out) {
        T v{};
        if (!has(key)) return;
        read(key, v);
        out = v;
    }
    std::string child_prefix(const std::string& key) const { return prefix_ + key + "."; }
    std::vector<std::string>& unknown() { return unknown_; }

private:
    std::string where() const { return prefix_.empty() ? "config" : prefix_.substr(0, prefix_.size() - 1); }

    YAML::Node node_;
    std::string prefix_;
    std::vector<std::string>& unknown_;
    std::set<std::string> seen_;
};

GraphSpec parse_graph(Fields& f) {
    std::string type;
    f.read("type", type);
    std::size_t n = 0, width = 0, height = 0, branching = 0, depth = 0, d = 0;
    std::uint64_t seed = 0;
    f.read("n", n);
    f.read("width", width);
    f.read("height", height);
    f.read("branching", branching);
    f.read("depth", depth);
    f.read("d", d);
    f.read("seed", seed);
    if (type == "path") return spec::Path{n};
    if (type == "cycle") return spec::Cycle{n};
    if (type == "grid") return spec::Grid{width, height};
    if (type == "torus") return spec::Torus{width, height};
    if (type == "regular_tree") return spec::RegularTree{branching, depth};
    if (type == "random_regular") return spec::RandomRegular{n, d, seed};
    throw std::runtime_error("unknown graph type '" + type + "'");
}

NoiseKind noise_from_string(const std::string& s) {
    if (s == "uniform") return NoiseKind::uniform;
    if (s == "two_point") return NoiseKind::two_point;
    if (s == "degenerate") return NoiseKind::degenerate;
    throw std::runtime_error("unknown init noise '" + s + "'");
}

std::string to_string(NoiseKind k) {
    switch (k) {
        case NoiseKind::uniform: return "uniform";
        case NoiseKind::two_point: return "two_point";
        case NoiseKind::degenerate: return "degenerate";
    }
    return "?";
}

bool uses_distortion(const ExperimentConfig& c) { return c.distortion.kind != DistortionKind::none; }

bool is_learning(const std::string& s) { return s == "robust-bot" || s == "robust-distortion" || s == "eps-sweep"; }

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw std::runtime_error(std::string("malformed config: ") + e.what());
    }
    ExperimentConfig c;
    c.source = text;
    {
        Fields f(root, "", c.unknown_keys);
        f.read("scenario", c.scenario);
        f.read("seed", c.seed);
        f.read("output_dir", c.output_dir);
        f.read("horizon", c.horizon);
        f.read("replications", c.replications);
        f.read("tolerance", c.tolerance);
        f.read("threshold", c.threshold);
        f.read("checkpoints", c.checkpoints);
        f.read("variants", c.variants);
        f.read("save_trajectory", c.save_trajectory);
        f.read("probes", c.probes);

        if (f.has("graph")) {
            Fields g(f.get("graph"), f.child_prefix("graph"), c.unknown_keys);
            c.graph = parse_graph(g);
        }
        if (f.has("rule")) {
            Fields r(f.get("rule"), f.child_prefix("rule"), c.unknown_keys);
            r.read("type", c.rule.type);
            r.read("eps", c.rule.eps);
            r.read("gamma", c.rule.gamma);
            r.read("W", c.rule.W);
        }
        if (f.has("bots")) {
            const auto list = f.get("bots");
            if (!list.IsSequence()) throw std::runtime_error("'bots' must be a list");
            for (std::size_t k = 0; k < list.size(); ++k) {
                Fields b(list[k], "bots[" + std::to_string(k) + "].", c.unknown_keys);
                Bot bot{0, 1.0};
                b.read("node", bot.node);
                b.read("value", bot.value);
                c.bots.push_back(bot);
            }
        }
        if (f.has("distortion")) {
            Fields d(f.get("distortion"), f.child_prefix("distortion"), c.unknown_keys);
            std::string kind = "none";
            d.read("kind", kind);
            try {
                c.distortion.kind = distortion_from_string(kind);
            } catch (const std::exception& e) {
                throw std::runtime_error(e.what());
            }
            d.read("beta", c.distortion.beta);
            d.read("seed", c.distortion.seed);
        }
        if (f.has("init")) {
            Fields i(f.get("init"), f.child_prefix("init"), c.unknown_keys);
            std::string noise = "uniform";
            i.read("mu", c.init.mu);
            i.read("noise", noise);
            c.init.noise = noise_from_string(noise);
            i.read("K", c.init.K);
            std::vector<double> clip;
            i.read("clip", clip);
            if (!clip.empty()) {
                if (clip.size() != 2) throw std::runtime_error("'init.clip' must be [lo, hi]");
                c.init.clip_range = std::pair{clip[0], clip[1]};
            }
        }
        if (f.has("criterion")) {
            Fields k(f.get("criterion"), f.child_prefix("criterion"), c.unknown_keys);
            k.read("delta", c.criterion.delta);
            k.read("rho", c.criterion.rho);
            if (k.has("R")) {
                const auto node = k.get("R");
                if (node.IsScalar() && node.as<std::string>() == "auto") {
                    c.auto_radius = true;
                } else {
                    k.read("R", c.criterion.exempt_radius);
                    c.auto_radius = false;
                }
            }
        }
        if (f.has("sweep")) {
            Fields s(f.get("sweep"), f.child_prefix("sweep"), c.unknown_keys);
            s.read("eps", c.sweep.eps);
            s.read("gamma_factor", c.sweep.gamma_factor);
            s.read("beta_factor", c.sweep.beta_factor);
        }
        if (f.has("walk")) {
            Fields w(f.get("walk"), f.child_prefix("walk"), c.unknown_keys);
            w.read("origin", c.walk.origin);
            w.read("t_min", c.walk.t_min);
            w.read("t_max", c.walk.t_max);
            w.read("slope_min", c.walk.slope_min);
            w.read("slope_max", c.walk.slope_max);
        }
    }
    c.criterion.mu = c.init.mu;
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) { return parse_config(read_text(path)); }

json to_json(const GraphSpec& spec) {
    return std::visit(
        [](const auto& s) -> json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, spec::Path>) return {{"type", "path"}, {"n", s.n}};
            if constexpr (std::is_same_v<T, spec::Cycle>) return {{"type", "cycle"}, {"n", s.n}};
            if constexpr (std::is_same_v<T, spec::Grid>)
                return {{"type", "grid"}, {"width", s.width}, {"height", s.height}};
            if constexpr (std::is_same_v<T, spec::Torus>)
                return {{"type", "torus"}, {"width", s.width}, {"height", s.height}};
            if constexpr (std::is_same_v<T, spec::RegularTree>)
                return {{"type", "regular_tree"}, {"branching", s.branching}, {"depth", s.depth}};
            if constexpr (std::is_same_v<T, spec::RandomRegular>)
                return {{"type", "random_regular"}, {"n", s.n}, {"d", s.d}, {"seed", s.seed}};
        },
        spec);
}

GraphSpec graph_spec_from_json(const json& j) {
    const auto type = j.at("type").get<std::string>();
    auto get = [&](const char* k) { return j.at(k).get<std::size_t>(); };
    if (type == "path") return spec::Path{get("n")};
    if (type == "cycle") return spec::Cycle{get("n")};
    if (type == "grid") return spec::Grid{get("width"), get("height")};
    if (type == "torus") return spec::Torus{get("width"), get("height")};
    if (type == "regular_tree") return spec::RegularTree{get("branching"), get("depth")};
    if (type == "random_regular") return spec::RandomRegular{get("n"), get("d"), j.at("seed").get<std::uint64_t>()};
    throw std::runtime_error("unknown graph type '" + type + "'");
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["scenario"] = c.scenario;
    j["graph"] = to_json(c.graph);
    json rule = {{"type", c.rule.type}};
    if (c.rule.type == "eps_degroot") {
        rule["eps"] = c.rule.eps;
        if (c.rule.gamma) rule["gamma"] = *c.rule.gamma;
    }
    if (c.rule.type == "granular") rule["W"] = c.rule.W;
    j["rule"] = rule;
    j["bots"] = json::array();
    for (const auto& b : c.bots) j["bots"].push_back({{"node", b.node}, {"value", b.value}});
    j["distortion"] = {{"kind", to_string(c.distortion.kind)}, {"beta", c.distortion.beta}, {"seed", c.distortion.seed}};
    json init = {{"mu", c.init.mu}, {"noise", to_string(c.init.noise)}, {"K", c.init.K}};
    if (c.init.clip_range) init["clip"] = {c.init.clip_range->first, c.init.clip_range->second};
    j["init"] = init;
    j["criterion"] = {{"delta", c.criterion.delta}, {"rho", c.criterion.rho}};
    j["criterion"]["R"] = c.auto_radius ? json("auto") : json(c.criterion.exempt_radius);
    j["horizon"] = c.horizon;
    j["replications"] = c.replications;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["probes"] = c.probes;
    if (!c.sweep.eps.empty())
        j["sweep"] = {{"eps", c.sweep.eps}, {"gamma_factor", c.sweep.gamma_factor}, {"beta_factor", c.sweep.beta_factor}};
    if (c.scenario == "rw-decay") {
        json w = {{"t_min", c.walk.t_min},
                  {"t_max", c.walk.t_max},
                  {"slope_min", c.walk.slope_min},
                  {"slope_max", c.walk.slope_max}};
        if (c.walk.origin) w["origin"] = *c.walk.origin;
        j["walk"] = w;
    }
    if (c.scenario == "fragility-bot") {
        j["tolerance"] = c.tolerance;
        j["checkpoints"] = c.checkpoints;
    }
    if (c.scenario == "fragility-bias") j["threshold"] = c.threshold;
    if (!c.variants.empty()) j["variants"] = c.variants;
    if (c.save_trajectory) j["save_trajectory"] = true;
    return j;
}

std::string config_hash(const ExperimentConfig& cfg) {
    const std::string text = to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::size_t exempt_radius_for(const ExperimentConfig& cfg, const Graph& g, double gamma, double beta) {
    if (!cfg.auto_radius) return cfg.criterion.exempt_radius;
    return default_exempt_radius(gamma, beta, radius(g) / 2);
}

NodeId walk_origin(const ExperimentConfig& cfg, const Graph& g) {
    if (cfg.walk.origin) return *cfg.walk.origin;
    const auto ecc = eccentricities(g);
    return static_cast<NodeId>(std::min_element(ecc.begin(), ecc.end()) - ecc.begin());
}

std::vector<std::string> validate(const ExperimentConfig& c) {
    std::vector<std::string> d;
    const auto& ids = scenario_ids();
    if (std::find(ids.begin(), ids.end(), c.scenario) == ids.end()) {
        std::string list;
        for (const auto& id : ids) list += (list.empty() ? "" : ", ") + id;
        d.push_back("unknown scenario '" + c.scenario + "'; expected one of: " + list);
    }
    for (const auto& k : c.unknown_keys) d.push_back("unknown key '" + k + "'");

    std::optional<Graph> g;
    try {
        g = generate(c.graph);
    } catch (const std::exception& e) {
        d.push_back(std::string("graph: ") + e.what());
    }
    const std::size_t n = g ? g->node_count() : 0;

    // Rule and robustness parameters. rw-decay runs no dynamics.
    std::optional<double> gamma;
    const std::string& type = c.rule.type;
    if (c.scenario == "rw-decay") {
    } else if (type == "eps_degroot") {
        if (!(c.rule.eps > 0.0)) d.push_back("rule.eps: ε must be > 0");
        gamma = c.rule.gamma.value_or(c.sweep.eps.empty() ? 0.95 * c.rule.eps : c.sweep.gamma_factor * c.rule.eps);
        if (!(*gamma > 0.0)) d.push_back("rule.gamma: γ must be > 0");
        if (*gamma > c.rule.eps)
            d.push_back("rule.gamma: γ≤ε required (γ=" + num(*gamma) + ", ε=" + num(c.rule.eps) + ")");
        else if (*gamma == c.rule.eps)
            d.push_back("rule.gamma: γ<ε required so that η = 2(ε−γ) > 0");
    } else if (type == "granular") {
        const auto& W = c.rule.W;
        if (W.empty()) d.push_back("rule.W must be nonempty");
        if (!std::is_sorted(W.begin(), W.end()) || std::adjacent_find(W.begin(), W.end()) != W.end())
            d.push_back("rule.W must be sorted strictly increasing");
        if (std::any_of(W.begin(), W.end(), [](double w) { return w < 0.0 || w > 1.0; }))
            d.push_back("rule.W must lie within [0,1]");
        if (g && !W.empty() && std::is_sorted(W.begin(), W.end())) gamma = granular_params(W, g->degree_bound()).gamma;
    } else if (type != "degroot") {
        d.push_back("rule.type: unknown rule '" + type + "' (degroot, eps_degroot, granular)");
    }

    // Distortion.
    if (c.distortion.beta < 0.0) d.push_back("distortion.beta: β must be >= 0 (β∈[0,γ))");
    const bool swept = !c.sweep.eps.empty() && type == "eps_degroot";
    if (uses_distortion(c) && gamma && !swept && !(c.distortion.beta < *gamma))
        d.push_back("distortion.beta: β must be < γ (β∈[0,γ)); got β=" + num(c.distortion.beta) + ", γ=" +
                    num(*gamma));

    // Sweep.
    if (!c.sweep.eps.empty()) {
        for (double e : c.sweep.eps)
            if (!(e > 0.0)) d.push_back("sweep.eps: every ε must be > 0");
        if (!(c.sweep.gamma_factor > 0.0 && c.sweep.gamma_factor < 1.0))
            d.push_back("sweep.gamma_factor must lie in (0,1) so that 0 < γ < ε");
        if (uses_distortion(c) && !(c.sweep.beta_factor >= 0.0 && c.sweep.beta_factor < c.sweep.gamma_factor))
            d.push_back("sweep.beta_factor: β must be < γ (β∈[0,γ)); need 0 <= beta_factor < gamma_factor");
        if (type == "eps_degroot" &&
            std::find(c.sweep.eps.begin(), c.sweep.eps.end(), c.rule.eps) == c.sweep.eps.end())
            d.push_back("sweep.eps must contain rule.eps (" + num(c.rule.eps) + ")");
        if (c.rule.gamma && type == "eps_degroot" && *c.rule.gamma != c.sweep.gamma_factor * c.rule.eps)
            d.push_back("rule.gamma conflicts with sweep.gamma_factor * rule.eps");
    }

    // Learning criterion.
    if (!(c.criterion.delta > 0.0)) d.push_back("criterion.delta: δ must be > 0");
    if (!(c.criterion.rho > 0.0 && c.criterion.rho < 1.0)) d.push_back("criterion.rho: ρ must lie in (0,1)");
    if (is_learning(c.scenario) && type == "eps_degroot" && c.rule.eps > 0.0 && c.criterion.delta > 0.0 && g) {
        try {
            (void)horizon_and_rho1(c.criterion.delta, c.rule.eps, static_cast<double>(g->degree_bound()));
        } catch (const std::invalid_argument&) {
            d.push_back("n = ⌊δ/(3ε) − 1⌋ ≥ 1 required; δ=" + num(c.criterion.delta) + " is too small for ε=" +
                        num(c.rule.eps));
        }
    }
    if (g && !c.auto_radius && is_learning(c.scenario)) {
        const auto rad = radius(*g);
        if (rad < c.criterion.exempt_radius)
            d.push_back("criterion.R: radius ≥ R required (radius=" + std::to_string(rad) +
                        ", R=" + std::to_string(c.criterion.exempt_radius) + ")");
    }

    // Roles, init, run shape.
    std::set<NodeId> bot_nodes;
    for (const auto& b : c.bots) {
        if (g && b.node >= n) d.push_back("bots: node " + std::to_string(b.node) + " out of range");
        if (!bot_nodes.insert(b.node).second) d.push_back("bots: node " + std::to_string(b.node) + " listed twice");
    }
    if (c.init.noise != NoiseKind::degenerate && !(c.init.K > 0.0)) d.push_back("init.K must be > 0");
    if (c.init.clip_range) {
        const double k = c.init.noise == NoiseKind::degenerate ? 0.0 : c.init.K;
        if (c.init.mu - k < c.init.clip_range->first || c.init.mu + k > c.init.clip_range->second)
            d.push_back("init.clip must contain [mu-K, mu+K]");
    }
    if (c.horizon < 1) d.push_back("horizon must be >= 1");
    if (c.replications < 1) d.push_back("replications must be >= 1");
    for (NodeId p : c.probes)
        if (g && p >= n) d.push_back("probes: node " + std::to_string(p) + " out of range");

    // Scenario-specific requirements.
    const auto& s = c.scenario;
    auto need_rule = [&](const char* r) {
        if (type != r) d.push_back(s + " needs rule.type " + r);
    };
    if (s == "fragility-bot") {
        need_rule("degroot");
        if (c.bots.empty()) d.push_back("fragility-bot needs at least one bot");
        for (const auto& b : c.bots)
            if (b.value != c.bots.front().value) d.push_back("fragility-bot needs all bots to share one value");
        if (!(c.tolerance > 0.0)) d.push_back("tolerance must be > 0");
        for (auto t : c.checkpoints)
            if (t > c.horizon) d.push_back("checkpoint " + std::to_string(t) + " is beyond the horizon");
    } else if (s == "fragility-bias") {
        need_rule("degroot");
        if (c.distortion.kind != DistortionKind::plus_bias && c.distortion.kind != DistortionKind::minus_bias)
            d.push_back("fragility-bias needs distortion.kind plus_bias or minus_bias");
        if (!(c.distortion.beta > 0.0)) d.push_back("fragility-bias needs β > 0");
        if (c.init.clip_range) d.push_back("fragility-bias runs unclipped; remove init.clip");
        if (!(c.threshold > 0.0)) d.push_back("threshold must be > 0");
    } else if (s == "robust-bot" || s == "eps-sweep") {
        need_rule("eps_degroot");
        if (s == "eps-sweep" && c.sweep.eps.size() < 2) d.push_back("eps-sweep needs at least two sweep.eps values");
    } else if (s == "robust-distortion") {
        need_rule("eps_degroot");
        if (c.variants.empty() && !uses_distortion(c))
            d.push_back("robust-distortion needs distortion.kind or variants");
        for (const auto& v : c.variants) {
            try {
                if (distortion_from_string(v) == DistortionKind::none)
                    d.push_back("variants: 'none' is not a distortion");
            } catch (const std::exception&) {
                d.push_back("variants: unknown distortion '" + v + "'");
            }
        }
    } else if (s == "lyapunov-audit") {
        need_rule("eps_degroot");
        if (c.horizon < 400) d.push_back("lyapunov-audit horizon must cover two convergence windows (400 steps)");
    } else if (s == "granular-majority") {
        need_rule("granular");
        if (c.rule.W != std::vector<double>{0.0, 1.0}) d.push_back("granular-majority needs W = [0, 1]");
        if (!c.bots.empty()) d.push_back("granular-majority runs without bots");
    } else if (s == "rw-decay") {
        if (c.walk.t_min < 1 || c.walk.t_max <= c.walk.t_min) d.push_back("walk: need 1 <= t_min < t_max");
        if (!(c.walk.slope_min <= c.walk.slope_max)) d.push_back("walk: slope_min must be <= slope_max");
        if (g && c.walk.origin && *c.walk.origin >= n) {
            d.push_back("walk.origin out of range");
        } else if (g) {
            const auto ecc = eccentricity(*g, walk_origin(c, *g));
            if (ecc < c.walk.t_max)
                d.push_back("walk: eccentricity of the origin (" + std::to_string(ecc) + ") must be >= t_max");
        }
    }
    return d;
}

}  // namespace rdg
