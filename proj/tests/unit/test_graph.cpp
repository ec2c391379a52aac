#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "rdg/graph.hpp"

using namespace rdg;

namespace {

constexpr std::uint32_t kInf = 1u << 30;

/// All-pairs distances by Floyd-Warshall over the edge list.
std::vector<std::vector<std::uint32_t>> floyd(const Graph& g) {
    const std::size_t n = g.node_count();
    std::vector<std::vector<std::uint32_t>> d(n, std::vector<std::uint32_t>(n, kInf));
    for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
    for (const auto& e : g.edges()) d[e.u][e.v] = d[e.v][e.u] = 1;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
    return d;
}

bool connected_union_find(const Graph& g) {
    std::vector<std::size_t> parent(g.node_count());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& e : g.edges()) parent[find(e.u)] = find(e.v);
    for (std::size_t i = 0; i < g.node_count(); ++i)
        if (find(i) != find(0)) return false;
    return true;
}

}  // namespace

TEST(Graph, PathThree) {
    const Graph g = generate(spec::Path{3});
    EXPECT_EQ(g.node_count(), 3u);
    ASSERT_EQ(g.edge_count(), 2u);
    EXPECT_TRUE(g.has_edge(0, 1));
    EXPECT_TRUE(g.has_edge(1, 2));
    EXPECT_FALSE(g.has_edge(0, 2));
    EXPECT_EQ(g.degree_bound(), 2u);
}

TEST(Graph, TorusIsFourRegular) {
    const Graph g = generate(spec::Torus{3, 3});
    EXPECT_EQ(g.node_count(), 9u);
    for (NodeId i = 0; i < 9; ++i) EXPECT_EQ(g.degree(i), 4u);
}

TEST(Graph, RandomRegularDegreesAndConnectivity) {
    const Graph g = generate(spec::RandomRegular{100, 3, 7});
    EXPECT_EQ(g.node_count(), 100u);
    for (NodeId i = 0; i < 100; ++i) EXPECT_EQ(g.degree(i), 3u);
    EXPECT_EQ(g.edge_count(), 150u);
    EXPECT_TRUE(connected_union_find(g));
    // simple graph: no loops, no repeated neighbors
    for (NodeId i = 0; i < 100; ++i) {
        auto nb = std::vector<NodeId>(g.neighbors(i).begin(), g.neighbors(i).end());
        EXPECT_EQ(std::count(nb.begin(), nb.end(), i), 0);
        std::sort(nb.begin(), nb.end());
        EXPECT_EQ(std::adjacent_find(nb.begin(), nb.end()), nb.end());
    }
}

TEST(Graph, RandomRegularIsDeterministic) {
    const Graph a = generate(spec::RandomRegular{60, 4, 99});
    const Graph b = generate(spec::RandomRegular{60, 4, 99});
    EXPECT_TRUE(std::equal(a.edges().begin(), a.edges().end(), b.edges().begin(), b.edges().end()));
}

TEST(Graph, InvalidSpecsThrow) {
    EXPECT_THROW(generate(spec::Path{0}), std::invalid_argument);
    EXPECT_THROW(generate(spec::Cycle{2}), std::invalid_argument);
    EXPECT_THROW(generate(spec::RandomRegular{7, 3, 1}), std::invalid_argument);  // n d odd
}

TEST(Graph, Balls) {
    const Graph p = generate(spec::Path{5});
    EXPECT_EQ(ball(p, 2, 0), (std::vector<NodeId>{2}));
    EXPECT_EQ(ball(p, 2, 1), (std::vector<NodeId>{1, 2, 3}));
    const Graph t = generate(spec::Torus{5, 5});
    for (NodeId i = 0; i < 25; ++i) EXPECT_EQ(ball(t, i, 1).size(), 5u);
}

TEST(Graph, EdgeDistance) {
    const Graph p = generate(spec::Path{3});
    EXPECT_EQ(edge_distance(p, 0, Edge{0, 1}), 0u);
    EXPECT_EQ(edge_distance(p, 0, Edge{1, 2}), 1u);
    const Graph c = generate(spec::Cycle{6});
    EXPECT_EQ(edge_distance(c, 0, Edge{3, 4}), 2u);
}

TEST(Graph, Radius) {
    EXPECT_EQ(radius(generate(spec::Path{5})), 2u);
    EXPECT_EQ(radius(generate(spec::Cycle{6})), 3u);
    EXPECT_EQ(radius(generate(spec::Torus{5, 5})), 4u);
}

TEST(Graph, DistancesMatchFloydWarshall) {
    for (const GraphSpec& s : std::vector<GraphSpec>{spec::Torus{5, 5}, spec::Grid{4, 6}, spec::RegularTree{2, 4},
                                                     spec::RandomRegular{40, 3, 3}, spec::Cycle{9}}) {
        const Graph g = generate(s);
        const auto d = floyd(g);
        std::uint32_t rad = kInf, diam = 0;
        for (NodeId i = 0; i < g.node_count(); ++i) {
            const auto bfs = bfs_distances(g, i);
            std::uint32_t ecc = 0;
            for (NodeId j = 0; j < g.node_count(); ++j) {
                EXPECT_EQ(bfs[j], d[i][j]) << describe(s);
                ecc = std::max(ecc, d[i][j]);
            }
            EXPECT_EQ(eccentricity(g, i), ecc);
            rad = std::min(rad, ecc);
            diam = std::max(diam, ecc);
        }
        EXPECT_EQ(radius(g), rad) << describe(s);
        EXPECT_EQ(diameter(g), diam) << describe(s);
    }
}

TEST(Graph, MultiSourceBfsIsMinimumOverSources) {
    const Graph g = generate(spec::Torus{7, 7});
    const std::vector<NodeId> src{0, 24, 30};
    const auto multi = bfs_distances(g, src);
    for (NodeId j = 0; j < g.node_count(); ++j) {
        std::uint32_t best = kInf;
        for (NodeId s : src) best = std::min(best, bfs_distances(g, s)[j]);
        EXPECT_EQ(multi[j], best);
    }
}

TEST(Graph, BallSizesMatchFloydWarshall) {
    const Graph g = generate(spec::RandomRegular{30, 3, 11});
    const auto d = floyd(g);
    for (NodeId i = 0; i < g.node_count(); i += 7)
        for (std::size_t r = 0; r <= 4; ++r) {
            std::vector<NodeId> expect;
            for (NodeId j = 0; j < g.node_count(); ++j)
                if (d[i][j] <= r) expect.push_back(j);
            EXPECT_EQ(ball(g, i, r), expect);
        }
}

TEST(Graph, Majorization) {
    EXPECT_TRUE(check_majorized(generate(spec::Path{100}), Polynomial{3, 1}).majorized);
    EXPECT_TRUE(check_majorized(generate(spec::Torus{11, 11}), Polynomial{4, 2}).majorized);
    const Graph tree = generate(spec::RegularTree{2, 8});
    const auto res = check_majorized(tree, Polynomial{4, 2});
    ASSERT_FALSE(res.majorized);
    ASSERT_TRUE(res.witness);
    const auto [i, r] = *res.witness;
    EXPECT_EQ(ball(tree, i, r).size(), res.ball_size);
    EXPECT_GT(static_cast<double>(res.ball_size), 4.0 * (r + 1.0) * (r + 1.0));
}

TEST(Graph, MaxBallProfileIsMonotone) {
    const auto prof = max_ball_profile(generate(spec::Grid{6, 6}));
    ASSERT_EQ(prof.size(), 11u);  // diameter 10
    EXPECT_EQ(prof.front(), 1u);
    EXPECT_EQ(prof.back(), 36u);
    EXPECT_TRUE(std::is_sorted(prof.begin(), prof.end()));
}

TEST(Graph, WeightMass) {
    EXPECT_DOUBLE_EQ(weight_mass(generate(spec::Path{3}), 0, 0.5), 1.5);
    EXPECT_DOUBLE_EQ(weight_mass(generate(spec::Path{2}), 1, 0.3), 1.0);
    EXPECT_DOUBLE_EQ(weight_mass(generate(spec::Cycle{4}), 0, 0.5), 3.0);
}

TEST(Graph, WeightMassMatchesEdgeEnumeration) {
    const Graph g = generate(spec::RandomRegular{40, 3, 5});
    const auto d = floyd(g);
    for (NodeId i : {0u, 13u, 39u}) {
        double expect = 0.0;
        for (const auto& e : g.edges()) expect += std::pow(0.7, std::min(d[i][e.u], d[i][e.v]));
        EXPECT_NEAR(weight_mass(g, i, 0.7), expect, 1e-12 * expect);
    }
}

TEST(Graph, EdgeListRoundTrip) {
    const Graph g = generate(spec::RandomRegular{20, 3, 2});
    std::stringstream ss;
    write_edge_list(ss, g);
    const Graph h = read_edge_list(ss);
    EXPECT_EQ(h.node_count(), g.node_count());
    EXPECT_TRUE(std::equal(g.edges().begin(), g.edges().end(), h.edges().begin(), h.edges().end()));
}

TEST(Graph, EdgeListRejectsBadInput) {
    std::stringstream bad("3 1\n0 5\n");
    EXPECT_ANY_THROW(read_edge_list(bad));
}
