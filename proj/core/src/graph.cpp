#include "rdg/graph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "rdg/rng.hpp"

namespace rdg {

namespace {

constexpr std::uint32_t kUnreached = std::numeric_limits<std::uint32_t>::max();

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool connected(std::size_t n, const std::vector<Edge>& edges) {
    if (n == 0) return false;
    std::vector<std::vector<NodeId>> adj(n);
    for (const auto& e : edges) {
        adj[e.u].push_back(e.v);
        adj[e.v].push_back(e.u);
    }
    std::vector<bool> seen(n, false);
    std::vector<NodeId> stack{0};
    seen[0] = true;
    std::size_t count = 1;
    while (!stack.empty()) {
        NodeId x = stack.back();
        stack.pop_back();
        for (NodeId y : adj[x]) {
            if (!seen[y]) {
                seen[y] = true;
                ++count;
                stack.push_back(y);
            }
        }
    }
    return count == n;
}

std::vector<Edge> path_edges(std::size_t n) {
    std::vector<Edge> e;
    for (std::size_t i = 0; i + 1 < n; ++i) e.push_back({NodeId(i), NodeId(i + 1)});
    return e;
}

// One attempt of the stub-pairing construction. Returns nullopt when the
// pairing gets stuck or the result is disconnected.
std::optional<std::vector<Edge>> try_random_regular(std::size_t n, std::size_t d, Rng& rng) {
    std::vector<NodeId> stubs;
    stubs.reserve(n * d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < d; ++k) stubs.push_back(NodeId(i));

    std::vector<std::vector<NodeId>> adj(n);
    std::vector<Edge> edges;
    edges.reserve(n * d / 2);
    const std::size_t max_misses = 64 * stubs.size() + 1024;
    std::size_t misses = 0;
    while (!stubs.empty()) {
        const std::size_t a = rng.below(stubs.size());
        const std::size_t b = rng.below(stubs.size());
        const NodeId u = stubs[a];
        const NodeId v = stubs[b];
        const bool ok = a != b && u != v &&
                        std::find(adj[u].begin(), adj[u].end(), v) == adj[u].end();
        if (!ok) {
            if (++misses > max_misses) return std::nullopt;
            continue;
        }
        misses = 0;
        adj[u].push_back(v);
        adj[v].push_back(u);
        edges.push_back({std::min(u, v), std::max(u, v)});
        // Remove the higher index first so the lower one stays valid.
        for (std::size_t idx : {std::max(a, b), std::min(a, b)}) {
            stubs[idx] = stubs.back();
            stubs.pop_back();
        }
    }
    if (!connected(n, edges)) return std::nullopt;
    std::sort(edges.begin(), edges.end(),
              [](const Edge& x, const Edge& y) { return std::tie(x.u, x.v) < std::tie(y.u, y.v); });
    return edges;
}

}  // namespace

Graph::Graph(std::size_t node_count, std::vector<Edge> edges) {
    if (node_count == 0) throw std::invalid_argument("graph must have at least one node");
    for (auto& e : edges) {
        if (e.u >= node_count || e.v >= node_count)
            throw std::invalid_argument("edge endpoint out of range");
        if (e.u == e.v) throw std::invalid_argument("self-loop at node " + std::to_string(e.u));
        if (e.u > e.v) std::swap(e.u, e.v);
    }
    std::sort(edges.begin(), edges.end(),
              [](const Edge& x, const Edge& y) { return std::tie(x.u, x.v) < std::tie(y.u, y.v); });
    if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
        throw std::invalid_argument("duplicate edge");
    if (!connected(node_count, edges)) throw std::invalid_argument("graph is not connected");

    std::vector<std::size_t> deg(node_count, 0);
    for (const auto& e : edges) {
        ++deg[e.u];
        ++deg[e.v];
    }
    offsets_.assign(node_count + 1, 0);
    for (std::size_t i = 0; i < node_count; ++i) offsets_[i + 1] = offsets_[i] + deg[i];
    adjacency_.resize(offsets_.back());
    std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (const auto& e : edges) {
        adjacency_[cursor[e.u]++] = e.v;
        adjacency_[cursor[e.v]++] = e.u;
    }
    for (std::size_t i = 0; i < node_count; ++i)
        std::sort(adjacency_.begin() + offsets_[i], adjacency_.begin() + offsets_[i + 1]);
    degree_bound_ = *std::max_element(deg.begin(), deg.end());
    edges_ = std::move(edges);
}

bool Graph::has_edge(NodeId a, NodeId b) const {
    auto nb = neighbors(a);
    return std::binary_search(nb.begin(), nb.end(), b);
}

std::string describe(const GraphSpec& spec) {
    std::ostringstream os;
    std::visit(overloaded{
                   [&](const spec::Path& s) { os << "path(" << s.n << ")"; },
                   [&](const spec::Cycle& s) { os << "cycle(" << s.n << ")"; },
                   [&](const spec::Grid& s) { os << "grid(" << s.width << "," << s.height << ")"; },
                   [&](const spec::Torus& s) { os << "torus(" << s.width << "," << s.height << ")"; },
                   [&](const spec::RegularTree& s) {
                       os << "regular_tree(" << s.branching << "," << s.depth << ")";
                   },
                   [&](const spec::RandomRegular& s) {
                       os << "random_regular(" << s.n << "," << s.d << ",seed=" << s.seed << ")";
                   },
               },
               spec);
    return os.str();
}

Graph generate(const GraphSpec& gs) {
    return std::visit(
        overloaded{
            [](const spec::Path& s) {
                if (s.n < 2) throw std::invalid_argument("path needs n >= 2");
                return Graph(s.n, path_edges(s.n));
            },
            [](const spec::Cycle& s) {
                if (s.n < 3) throw std::invalid_argument("cycle needs n >= 3");
                auto e = path_edges(s.n);
                e.push_back({0, NodeId(s.n - 1)});
                return Graph(s.n, std::move(e));
            },
            [](const spec::Grid& s) {
                if (s.width * s.height < 2) throw std::invalid_argument("grid needs at least 2 nodes");
                std::vector<Edge> e;
                auto id = [&](std::size_t x, std::size_t y) { return NodeId(y * s.width + x); };
                for (std::size_t y = 0; y < s.height; ++y)
                    for (std::size_t x = 0; x < s.width; ++x) {
                        if (x + 1 < s.width) e.push_back({id(x, y), id(x + 1, y)});
                        if (y + 1 < s.height) e.push_back({id(x, y), id(x, y + 1)});
                    }
                return Graph(s.width * s.height, std::move(e));
            },
            [](const spec::Torus& s) {
                if (s.width < 3 || s.height < 3)
                    throw std::invalid_argument("torus needs width, height >= 3");
                std::vector<Edge> e;
                auto id = [&](std::size_t x, std::size_t y) { return NodeId(y * s.width + x); };
                for (std::size_t y = 0; y < s.height; ++y)
                    for (std::size_t x = 0; x < s.width; ++x) {
                        e.push_back({id(x, y), id((x + 1) % s.width, y)});
                        e.push_back({id(x, y), id(x, (y + 1) % s.height)});
                    }
                return Graph(s.width * s.height, std::move(e));
            },
            [](const spec::RegularTree& s) {
                if (s.branching < 1 || s.depth < 1)
                    throw std::invalid_argument("regular_tree needs branching >= 1, depth >= 1");
                // Level-order numbering: children of node p are p*b+1 .. p*b+b.
                std::size_t n = 1, level = 1;
                for (std::size_t k = 0; k < s.depth; ++k) {
                    level *= s.branching;
                    n += level;
                }
                std::vector<Edge> e;
                for (std::size_t c = 1; c < n; ++c) e.push_back({NodeId((c - 1) / s.branching), NodeId(c)});
                return Graph(n, std::move(e));
            },
            [](const spec::RandomRegular& s) {
                if (s.n < 2 || s.d < 1 || s.d >= s.n)
                    throw std::invalid_argument("random_regular needs 1 <= d < n");
                if ((s.n * s.d) % 2 != 0) throw std::invalid_argument("random_regular needs n*d even");
                if (s.d == 1 && s.n > 2)
                    throw std::invalid_argument("random_regular with d=1 is disconnected for n > 2");
                for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
                    Rng rng(hash_coords(s.seed, attempt, s.n, s.d));
                    if (auto edges = try_random_regular(s.n, s.d, rng)) return Graph(s.n, std::move(*edges));
                }
                throw std::runtime_error("random_regular: no connected simple graph after 100 attempts");
            },
        },
        gs);
}

std::vector<std::uint32_t> bfs_distances(const Graph& g, std::span<const NodeId> sources) {
    std::vector<std::uint32_t> dist(g.node_count(), kUnreached);
    std::vector<NodeId> frontier;
    for (NodeId s : sources) {
        if (dist[s] != 0) {
            dist[s] = 0;
            frontier.push_back(s);
        }
    }
    std::vector<NodeId> next;
    for (std::uint32_t level = 1; !frontier.empty(); ++level) {
        next.clear();
        for (NodeId x : frontier)
            for (NodeId y : g.neighbors(x))
                if (dist[y] == kUnreached) {
                    dist[y] = level;
                    next.push_back(y);
                }
        frontier.swap(next);
    }
    return dist;
}

std::vector<std::uint32_t> bfs_distances(const Graph& g, NodeId source) {
    const NodeId s[] = {source};
    return bfs_distances(g, std::span<const NodeId>(s));
}

std::vector<NodeId> ball(const Graph& g, NodeId i, std::size_t r) {
    const auto dist = bfs_distances(g, i);
    std::vector<NodeId> out;
    for (NodeId j = 0; j < g.node_count(); ++j)
        if (dist[j] <= r) out.push_back(j);
    return out;
}

std::uint32_t edge_distance(const Graph& g, NodeId i, Edge e) {
    if (!g.has_edge(e.u, e.v)) throw std::invalid_argument("edge not in graph");
    const auto dist = bfs_distances(g, i);
    return std::min(dist[e.u], dist[e.v]);
}

std::uint32_t eccentricity(const Graph& g, NodeId i) {
    const auto dist = bfs_distances(g, i);
    return *std::max_element(dist.begin(), dist.end());
}

std::vector<std::uint32_t> eccentricities(const Graph& g) {
    std::vector<std::uint32_t> ecc(g.node_count());
    for (NodeId i = 0; i < g.node_count(); ++i) ecc[i] = eccentricity(g, i);
    return ecc;
}

std::uint32_t radius(const Graph& g) {
    const auto ecc = eccentricities(g);
    return *std::min_element(ecc.begin(), ecc.end());
}

std::uint32_t diameter(const Graph& g) {
    const auto ecc = eccentricities(g);
    return *std::max_element(ecc.begin(), ecc.end());
}

double evaluate(const GrowthProfile& f, double r) {
    return std::visit(overloaded{
                          [&](const Polynomial& p) { return p.c * std::pow(r + 1.0, p.k); },
                          [&](const StretchedExp& s) { return std::exp(std::pow(r, s.alpha)); },
                      },
                      f);
}

namespace {

// Cumulative ball sizes |B(i, r)| for r = 0..max_r (sizes saturate past ecc(i)).
std::vector<std::size_t> ball_sizes(const Graph& g, NodeId i, std::size_t max_r) {
    const auto dist = bfs_distances(g, i);
    std::vector<std::size_t> sizes(max_r + 1, 0);
    for (auto d : dist)
        if (d <= max_r) ++sizes[d];
    for (std::size_t r = 1; r <= max_r; ++r) sizes[r] += sizes[r - 1];
    return sizes;
}

}  // namespace

MajorizationResult check_majorized(const Graph& g, const GrowthProfile& f) {
    const std::size_t diam = diameter(g);
    for (NodeId i = 0; i < g.node_count(); ++i) {
        const auto sizes = ball_sizes(g, i, diam);
        for (std::size_t r = 0; r <= diam; ++r) {
            if (static_cast<double>(sizes[r]) > evaluate(f, static_cast<double>(r)))
                return {false, std::make_pair(i, r), sizes[r]};
        }
    }
    return {};
}

std::vector<std::size_t> max_ball_profile(const Graph& g) {
    const std::size_t diam = diameter(g);
    std::vector<std::size_t> profile(diam + 1, 0);
    for (NodeId i = 0; i < g.node_count(); ++i) {
        const auto sizes = ball_sizes(g, i, diam);
        for (std::size_t r = 0; r <= diam; ++r) profile[r] = std::max(profile[r], sizes[r]);
    }
    return profile;
}

double weight_mass(const Graph& g, NodeId i, double r) {
    if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("weight_mass needs r in (0,1)");
    const auto dist = bfs_distances(g, i);
    double total = 0.0;
    for (const auto& e : g.edges()) total += std::pow(r, std::min(dist[e.u], dist[e.v]));
    return total;
}

void write_edge_list(std::ostream& out, const Graph& g) {
    out << g.node_count() << ' ' << g.degree_bound() << '\n';
    for (const auto& e : g.edges()) out << e.u << ' ' << e.v << '\n';
}

Graph read_edge_list(std::istream& in) {
    std::size_t n = 0, d = 0;
    if (!(in >> n >> d)) throw std::invalid_argument("edge list: missing 'n d' header");
    std::vector<Edge> edges;
    std::uint64_t u, v;
    while (in >> u >> v) edges.push_back({NodeId(u), NodeId(v)});
    if (!in.eof()) throw std::invalid_argument("edge list: malformed edge line");
    Graph g(n, std::move(edges));
    if (g.degree_bound() > d)
        throw std::invalid_argument("edge list: degree exceeds declared bound " + std::to_string(d));
    return g;
}

}  // namespace rdg
