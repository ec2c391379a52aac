#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "rdg/dynamics.hpp"
#include "rdg/graph.hpp"

namespace rdg {

/// Center i and ratio r of the geometrically weighted edge sum
///   L_{i,r}(t) = sum over ordered pairs (j,k), k in N_j, of
///                r^{d(i,(j,k))} (A_{j,t+1} - A_{k,t})^2.
struct LyapunovConfig {
    NodeId center = 0;
    double ratio = 0.5;
};

template <class T>
T integer_power(T base, std::uint32_t exponent) {
    T result(1);
    while (exponent) {
        if (exponent & 1u) result *= base;
        base *= base;
        exponent >>= 1u;
    }
    return result;
}

/// Weight of every adjacency slot, aligned with Graph::adjacency().
/// Works for any field type T (double, exact rationals).
template <class T>
std::vector<T> slot_weights(const Graph& g, NodeId center, const T& r) {
    const auto dist = bfs_distances(g, center);
    const auto offsets = g.offsets();
    const auto adj = g.adjacency();
    std::vector<T> w(adj.size());
    for (NodeId j = 0; j < g.node_count(); ++j)
        for (std::size_t s = offsets[j]; s < offsets[j + 1]; ++s)
            w[s] = integer_power(r, std::min(dist[j], dist[adj[s]]));
    return w;
}

/// J^+_j(t) = sum_k w(j,k) (A_{j,t+1} - A_{k,t})^2.
template <class T>
T j_plus(const Graph& g, std::span<const T> weights, NodeId j, std::span<const T> layer_t,
         std::span<const T> layer_t1) {
    const auto offsets = g.offsets();
    const auto adj = g.adjacency();
    T sum(0);
    for (std::size_t s = offsets[j]; s < offsets[j + 1]; ++s) {
        const T diff = layer_t1[j] - layer_t[adj[s]];
        sum += weights[s] * diff * diff;
    }
    return sum;
}

/// J^-_j(t) = sum_k w(j,k) (A_{j,t-1} - A_{k,t})^2.
template <class T>
T j_minus(const Graph& g, std::span<const T> weights, NodeId j, std::span<const T> layer_t,
          std::span<const T> layer_tm1) {
    // Same form as J^+ with the own layer taken one step back instead of ahead.
    return j_plus<T>(g, weights, j, layer_t, layer_tm1);
}

template <class T>
T lyapunov(const Graph& g, std::span<const T> weights, std::span<const T> layer_t, std::span<const T> layer_t1) {
    T total(0);
    for (NodeId j = 0; j < g.node_count(); ++j) total += j_plus<T>(g, weights, j, layer_t, layer_t1);
    return total;
}

double lyapunov(const Graph& g, const LyapunovConfig& cfg, std::span<const double> layer_t,
                std::span<const double> layer_t1);
double j_plus(const Graph& g, const LyapunovConfig& cfg, NodeId j, std::span<const double> layer_t,
              std::span<const double> layer_t1);
double j_minus(const Graph& g, const LyapunovConfig& cfg, NodeId j, std::span<const double> layer_t,
               std::span<const double> layer_tm1);

/// Maintains the series L(0), L(1), ... along a running simulation.
///
/// After each step only agents whose value differs from two steps earlier
/// change L (by J^+_j(t) - J^-_j(t)); those terms are applied incrementally
/// and L is recomputed from scratch every `full_every` steps.
class LyapunovTracker {
public:
    LyapunovTracker(const Graph& g, LyapunovConfig cfg, std::size_t full_every = 256);

    /// Feed the state right after a step: now = A_{t+1}, prev = A_t, prev2 = A_{t-1}.
    /// Appends L(t).
    void observe(const OpinionState& after_step);

    std::span<const double> series() const { return series_; }
    const LyapunovConfig& config() const { return cfg_; }
    double mass() const { return mass_; }
    /// Largest |incremental - full| seen at a recomputation point.
    double max_drift() const { return max_drift_; }

private:
    const Graph* graph_;
    LyapunovConfig cfg_;
    std::size_t full_every_;
    std::vector<double> weights_;
    std::vector<double> series_;
    double mass_ = 0.0;
    double max_drift_ = 0.0;
};

}  // namespace rdg
