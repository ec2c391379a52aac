#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace rdg {

using NodeId = std::uint32_t;

struct Edge {
    NodeId u;
    NodeId v;
    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Undirected, connected, bounded-degree graph stored in CSR form.
///
/// Node ids are dense `0..n-1`. Each edge is stored once in `edges()` (with
/// `u < v`) and twice in the adjacency arrays, once per orientation.
class Graph {
public:
    Graph() = default;

    /// Builds from an edge list. Throws std::invalid_argument on self-loops,
    /// duplicate edges, out-of-range ids or a disconnected result.
    Graph(std::size_t node_count, std::vector<Edge> edges);

    std::size_t node_count() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    std::size_t edge_count() const { return edges_.size(); }
    std::size_t degree(NodeId i) const { return offsets_[i + 1] - offsets_[i]; }
    std::size_t degree_bound() const { return degree_bound_; }

    std::span<const NodeId> neighbors(NodeId i) const {
        return {adjacency_.data() + offsets_[i], adjacency_.data() + offsets_[i + 1]};
    }
    std::span<const Edge> edges() const { return edges_; }

    // Raw CSR access for per-slot data (weights, noise) aligned with adjacency.
    std::span<const std::size_t> offsets() const { return offsets_; }
    std::span<const NodeId> adjacency() const { return adjacency_; }

    bool has_edge(NodeId a, NodeId b) const;

private:
    std::vector<std::size_t> offsets_;
    std::vector<NodeId> adjacency_;
    std::vector<Edge> edges_;
    std::size_t degree_bound_ = 0;
};

namespace spec {
struct Path { std::size_t n; };
struct Cycle { std::size_t n; };
struct Grid { std::size_t width; std::size_t height; };
struct Torus { std::size_t width; std::size_t height; };
struct RegularTree { std::size_t branching; std::size_t depth; };
struct RandomRegular { std::size_t n; std::size_t d; std::uint64_t seed; };
}  // namespace spec

using GraphSpec = std::variant<spec::Path, spec::Cycle, spec::Grid, spec::Torus,
                               spec::RegularTree, spec::RandomRegular>;

std::string describe(const GraphSpec& spec);

/// Deterministic given the spec (and its seed, for random_regular).
/// Throws std::invalid_argument for invalid parameters and std::runtime_error
/// when random_regular fails to produce a connected simple graph in 100 attempts.
Graph generate(const GraphSpec& spec);

/// Node ids of the ball B(i, r), ascending.
std::vector<NodeId> ball(const Graph& g, NodeId i, std::size_t r);

/// BFS hop distances from `source` to every node.
std::vector<std::uint32_t> bfs_distances(const Graph& g, NodeId source);

/// Multi-source BFS: distance from each node to the nearest source.
std::vector<std::uint32_t> bfs_distances(const Graph& g, std::span<const NodeId> sources);

/// d(i, e) = min(dist(i, u), dist(i, v)).
std::uint32_t edge_distance(const Graph& g, NodeId i, Edge e);

std::vector<std::uint32_t> eccentricities(const Graph& g);
std::uint32_t eccentricity(const Graph& g, NodeId i);
std::uint32_t radius(const Graph& g);
std::uint32_t diameter(const Graph& g);

struct Polynomial { double c; double k; };       // f(r) = c (r+1)^k
struct StretchedExp { double alpha; };           // f(r) = exp(r^alpha)
using GrowthProfile = std::variant<Polynomial, StretchedExp>;

double evaluate(const GrowthProfile& f, double r);

struct MajorizationResult {
    bool majorized = true;
    std::optional<std::pair<NodeId, std::size_t>> witness;  // first (i, r) with |B(i,r)| > f(r)
    std::size_t ball_size = 0;                               // |B(i,r)| at the witness
};

/// Checks |B(i,r)| <= f(r) for every node and every r up to the diameter.
MajorizationResult check_majorized(const Graph& g, const GrowthProfile& f);

/// Per-radius maximum ball size over all centers, indexed 0..diameter.
std::vector<std::size_t> max_ball_profile(const Graph& g);

/// M_i(r) = sum over edges of r^{d(i,e)}.
double weight_mass(const Graph& g, NodeId i, double r);

/// Edge-list text format: header "n d", then one "u v" line per edge.
void write_edge_list(std::ostream& out, const Graph& g);
Graph read_edge_list(std::istream& in);

}  // namespace rdg
