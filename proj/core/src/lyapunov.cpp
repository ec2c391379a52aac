#include "rdg/lyapunov.hpp"

#include <algorithm>
#include <cmath>

namespace rdg {

namespace {

std::vector<double> checked_weights(const Graph& g, const LyapunovConfig& cfg) {
    if (!(cfg.ratio > 0.0 && cfg.ratio < 1.0)) throw std::invalid_argument("Lyapunov ratio must lie in (0,1)");
    if (cfg.center >= g.node_count()) throw std::invalid_argument("Lyapunov center out of range");
    return slot_weights<double>(g, cfg.center, cfg.ratio);
}

}  // namespace

double lyapunov(const Graph& g, const LyapunovConfig& cfg, std::span<const double> layer_t,
                std::span<const double> layer_t1) {
    const auto w = checked_weights(g, cfg);
    return lyapunov<double>(g, w, layer_t, layer_t1);
}

double j_plus(const Graph& g, const LyapunovConfig& cfg, NodeId j, std::span<const double> layer_t,
              std::span<const double> layer_t1) {
    const auto w = checked_weights(g, cfg);
    return j_plus<double>(g, w, j, layer_t, layer_t1);
}

double j_minus(const Graph& g, const LyapunovConfig& cfg, NodeId j, std::span<const double> layer_t,
               std::span<const double> layer_tm1) {
    const auto w = checked_weights(g, cfg);
    return j_minus<double>(g, w, j, layer_t, layer_tm1);
}

LyapunovTracker::LyapunovTracker(const Graph& g, LyapunovConfig cfg, std::size_t full_every)
    : graph_(&g), cfg_(cfg), full_every_(std::max<std::size_t>(full_every, 1)), weights_(checked_weights(g, cfg)) {
    mass_ = weight_mass(g, cfg.center, cfg.ratio);
}

void LyapunovTracker::observe(const OpinionState& s) {
    const Graph& g = *graph_;
    const std::span<const double> w(weights_);
    if (series_.empty() || series_.size() % full_every_ == 0) {
        const double full = lyapunov<double>(g, w, s.prev, s.now);
        if (!series_.empty()) {
            double incremental = series_.back();
            for (NodeId j = 0; j < g.node_count(); ++j)
                if (s.now[j] != s.prev2[j])
                    incremental += j_plus<double>(g, w, j, s.prev, s.now) - j_minus<double>(g, w, j, s.prev, s.prev2);
            max_drift_ = std::max(max_drift_, std::abs(incremental - full));
        }
        series_.push_back(full);
        return;
    }
    double value = series_.back();
    for (NodeId j = 0; j < g.node_count(); ++j)
        if (s.now[j] != s.prev2[j])
            value += j_plus<double>(g, w, j, s.prev, s.now) - j_minus<double>(g, w, j, s.prev, s.prev2);
    series_.push_back(value);
}

}  // namespace rdg
