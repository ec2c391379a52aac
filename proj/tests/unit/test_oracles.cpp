#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "rdg/oracles.hpp"
#include "rdg/rng.hpp"

using namespace rdg;

namespace {

/// Row vector e_i P^t with a dense transition matrix; bots become absorbing states.
std::vector<double> matrix_power_walk(const Graph& g, NodeId i, std::size_t t, const std::vector<NodeId>& absorbing) {
    const std::size_t n = g.node_count();
    std::vector<std::vector<double>> P(n, std::vector<double>(n, 0.0));
    for (NodeId j = 0; j < n; ++j) {
        if (std::find(absorbing.begin(), absorbing.end(), j) != absorbing.end()) {
            P[j][j] = 1.0;
            continue;
        }
        for (NodeId k : g.neighbors(j)) P[j][k] += 1.0 / static_cast<double>(g.degree(j));
    }
    std::vector<double> row(n, 0.0);
    row[i] = 1.0;
    for (std::size_t s = 0; s < t; ++s) {
        std::vector<double> next(n, 0.0);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) next[b] += row[a] * P[a][b];
        row = std::move(next);
    }
    return row;
}

}  // namespace

TEST(Walk, PathThree) {
    const Graph g = generate(spec::Path{3});
    EXPECT_EQ(walk_distribution(g, 1, 1).probs, (std::vector<double>{0.5, 0, 0.5}));
    EXPECT_EQ(walk_distribution(g, 1, 2).probs, (std::vector<double>{0, 1, 0}));
}

TEST(Walk, CycleFour) {
    const Graph g = generate(spec::Cycle{4});
    EXPECT_EQ(walk_distribution(g, 0, 2).probs, (std::vector<double>{0.5, 0, 0.5, 0}));
}

TEST(Walk, PointMassAtZero) {
    const Graph g = generate(spec::Torus{5, 5});
    const auto w = walk_distribution(g, 7, 0);
    EXPECT_EQ(w.max_prob(), 1.0);
    EXPECT_EQ(w.sum_of_squares(), 1.0);
}

TEST(Walk, MatchesMatrixPower) {
    for (const GraphSpec& s : std::vector<GraphSpec>{spec::RandomRegular{24, 3, 2}, spec::Grid{4, 5}, spec::RegularTree{2, 3}}) {
        const Graph g = generate(s);
        for (std::size_t t : {1u, 5u, 17u}) {
            const auto w = walk_distribution(g, 3, t);
            const auto ref = matrix_power_walk(g, 3, t, {});
            for (NodeId j = 0; j < g.node_count(); ++j) EXPECT_NEAR(w.probs[j], ref[j], 1e-14) << describe(s);
            EXPECT_NEAR(std::accumulate(w.probs.begin(), w.probs.end(), 0.0), 1.0, 1e-13);
        }
    }
}

TEST(AbsorbingWalk, Examples) {
    const Graph p2 = generate(spec::Path{2});
    const std::vector<NodeId> bot{0};
    const auto w = absorbing_walk_distribution(p2, bot, 1, 1);
    EXPECT_DOUBLE_EQ(w.probs[0], 1.0);
    EXPECT_DOUBLE_EQ(w.absorbed, 1.0);

    const Graph p3 = generate(spec::Path{3});
    EXPECT_GE(absorbing_walk_distribution(p3, bot, 2, 10000).absorbed, 1.0 - 1e-6);

    const Graph t = generate(spec::Torus{4, 4});
    EXPECT_EQ(absorbing_walk_distribution(t, {}, 5, 9).probs, walk_distribution(t, 5, 9).probs);
}

TEST(AbsorbingWalk, MatchesMatrixPower) {
    const Graph g = generate(spec::RandomRegular{20, 3, 9});
    const std::vector<NodeId> bots{0, 11};
    for (std::size_t t : {3u, 20u}) {
        const auto w = absorbing_walk_distribution(g, bots, 5, t);
        const auto ref = matrix_power_walk(g, 5, t, bots);
        for (NodeId j = 0; j < 20; ++j) EXPECT_NEAR(w.probs[j], ref[j], 1e-14);
        EXPECT_NEAR(w.absorbed, ref[0] + ref[11], 1e-14);
    }
}

TEST(ClosedForm, Examples) {
    const Graph g = generate(spec::Path{2});
    const std::vector<double> init{0, 1};
    EXPECT_EQ(degroot_closed_form(g, init, {}, 0, 0), 0.0);
    EXPECT_EQ(degroot_closed_form(g, init, {}, 0, 1), 1.0);
}

TEST(ClosedForm, MatchesSimulation) {
    const Graph g = generate(spec::RandomRegular{30, 3, 4});
    for (bool with_bot : {false, true}) {
        SimConfig cfg;
        cfg.seed = 8;
        cfg.horizon = 25;
        cfg.record = RecordMode::full;
        if (with_bot) cfg.bots = {{2, 1.0}};
        const auto traj = run(g, cfg);
        for (NodeId i = 0; i < 30; ++i)
            EXPECT_NEAR(traj.layers[25][i], degroot_closed_form(g, traj.layers[0], cfg.bots, i, 25), 1e-10);
    }
}

TEST(DecayFit, PathCenter) {
    const auto fit = p_t_decay_fit(generate(spec::Path{2001}), 1000, 100, 1000);
    EXPECT_GE(fit.slope, -0.55);
    EXPECT_LE(fit.slope, -0.45);
    EXPECT_TRUE(std::isfinite(fit.empirical_constant));
    EXPECT_GT(fit.empirical_constant, 0.0);
    EXPECT_EQ(fit.times.front(), 100u);
    EXPECT_EQ(fit.times.back(), 1000u);
}

TEST(DecayFit, TorusDecaysFaster) {
    const auto fit = p_t_decay_fit(generate(spec::Torus{101, 101}), 0, 10, 100);
    EXPECT_LE(fit.slope, -0.9);
}

TEST(DecayFit, RejectsWindowBeyondEccentricity) {
    EXPECT_THROW(p_t_decay_fit(generate(spec::Torus{101, 101}), 0, 50, 500), std::invalid_argument);
    EXPECT_THROW(p_t_decay_fit(generate(spec::Path{50}), 0, 10, 10), std::invalid_argument);
}

TEST(Hoeffding, Examples) {
    EXPECT_NEAR(hoeffding_tail_bound(0.1, std::vector<double>{0.5, 0.5}).sum_of_squares_form, std::exp(-0.01), 1e-15);
    EXPECT_NEAR(hoeffding_tail_bound(0.1, std::vector<double>{1.0}).sum_of_squares_form, std::exp(-0.005), 1e-15);
    double prev = 1.0;
    for (std::size_t n : {10u, 100u, 1000u}) {
        const double b = hoeffding_tail_bound(0.1, std::vector<double>(n, 1.0 / n)).sum_of_squares_form;
        EXPECT_NEAR(b, std::exp(-0.01 * n / 2.0), 1e-12);
        EXPECT_LT(b, prev);
        prev = b;
    }
}

TEST(Horizon, Examples) {
    const auto h = horizon_and_rho1(0.3, 0.01, 4);
    EXPECT_EQ(h.n, 9);
    EXPECT_NEAR(h.rho1_exponent, 0.1232, 1e-4);
    EXPECT_NEAR(h.rho1(2.0), std::exp(-2.0 * h.rho1_exponent), 1e-15);
    EXPECT_THROW(horizon_and_rho1(0.3, 0.1, 4), std::invalid_argument);
}

TEST(LimitEstimate, Constant) {
    const auto e = limit_estimate(std::vector<double>(500, 0.3), 1e-6, 200);
    EXPECT_TRUE(e.converged);
    EXPECT_EQ(e.z_even, 0.3);
    EXPECT_EQ(e.z_odd, 0.3);
}

TEST(LimitEstimate, PeriodTwo) {
    const Graph g = generate(spec::Path{2});
    SimConfig cfg;
    cfg.horizon = 500;
    cfg.record = RecordMode::probes;
    cfg.probes = {0};
    const auto traj = run(g, cfg, OpinionState::from_initial({0, 1}));
    const auto e = limit_estimate(traj.probe_series[0], 1e-6, 200);
    EXPECT_TRUE(e.converged);
    EXPECT_EQ(e.z_even, 0.0);
    EXPECT_EQ(e.z_odd, 1.0);
}

TEST(LimitEstimate, DetectsLateMovement) {
    std::vector<double> s(500, 0.0);
    s[450] = 1e-3;
    EXPECT_FALSE(limit_estimate(s, 1e-6, 200).converged);
    EXPECT_THROW(limit_estimate(std::vector<double>(100, 0.0), 1e-6, 200), std::invalid_argument);
}

TEST(LimitEstimate, EpsDeGrootConverges) {
    SimConfig cfg;
    cfg.graph = spec::RandomRegular{100, 3, 1};
    cfg.rule = EpsDeGroot{0.02};
    cfg.horizon = 3000;
    cfg.seed = 2;
    cfg.record = RecordMode::probes;
    cfg.probes = {0, 50, 99};
    const auto traj = run(cfg);
    for (const auto& s : traj.probe_series) EXPECT_TRUE(limit_estimate(s, 1e-6, 200).converged);
}

// The online tracker and the offline estimate agree at every step once two
// windows have elapsed.
TEST(ConvergenceTracker, MatchesLimitEstimate) {
    const Graph g = generate(spec::Torus{8, 8});
    SimConfig cfg;
    cfg.rule = EpsDeGroot{0.01};
    cfg.distortion = {DistortionKind::uniform_noise, 0.008, 0};
    cfg.bots = {{0, 1.0}};
    cfg.seed = 44;
    const std::size_t window = 20;
    Simulator sim(g, cfg.rule, cfg.bots, cfg.distortion, cfg.seed, initial_state(g, cfg));
    ConvergenceTracker tracker(g.node_count(), 1e-4, window);
    std::vector<std::vector<double>> series(g.node_count(), std::vector<double>{});
    for (NodeId i = 0; i < g.node_count(); ++i) series[i].push_back(sim.state().now[i]);
    std::size_t both = 0, neither = 0;
    for (int k = 0; k < 600; ++k) {
        sim.step();
        tracker.observe(sim.state());
        for (NodeId i = 0; i < g.node_count(); ++i) series[i].push_back(sim.state().now[i]);
        if (tracker.steps() < 2 * window) continue;
        for (NodeId i = 0; i < g.node_count(); ++i) {
            const bool offline = limit_estimate(series[i], 1e-4, window).converged;
            ASSERT_EQ(tracker.converged(i), offline) << "t=" << tracker.steps() << " i=" << i;
            offline ? ++both : ++neither;
        }
    }
    EXPECT_GT(both, 0u);
    EXPECT_GT(neither, 0u);
}

TEST(Wilson, KnownValues) {
    const auto w = wilson_interval(0, 20);
    EXPECT_NEAR(w.upper(), 0.16113, 1e-4);
    EXPECT_NEAR(w.center, 0.0805, 1e-4);
    const auto h = wilson_interval(10, 20);
    EXPECT_NEAR(h.center, 0.5, 1e-15);
    EXPECT_NEAR(h.lower(), 0.29930, 1e-4);
    EXPECT_THROW(wilson_interval(0, 0), std::invalid_argument);
}

TEST(ExemptRadius, Formula) {
    EXPECT_EQ(default_exempt_radius(0.1, 0.0, 1000), 11u);  // 0.1^-1.00001 = 10.0002...
    EXPECT_EQ(default_exempt_radius(0.00475, 0.0, 50), 50u);
    EXPECT_EQ(default_exempt_radius(0.25, 0.05, 100), 6u);  // 0.2^-1.00001 = 5.0001
    EXPECT_THROW(default_exempt_radius(0.1, 0.1, 10), std::invalid_argument);
}

TEST(AuditedAgents, ExcludesBallAroundBots) {
    const Graph g = generate(spec::Path{10});
    const std::vector<Bot> bots{{0, 1.0}};
    EXPECT_EQ(audited_agents(g, bots, 3), (std::vector<NodeId>{4, 5, 6, 7, 8, 9}));
    EXPECT_EQ(audited_agents(g, {}, 3).size(), 10u);
}

TEST(Learning, DeGrootWithoutBotsLearns) {
    SimConfig cfg;
    cfg.graph = spec::Torus{31, 31};
    cfg.horizon = 20000;
    cfg.settle = SettleRule{1e-6, 200};
    const Graph g = generate(cfg.graph);
    const auto est = learning_estimate(g, cfg, LearningCriterion{0.2, 0.1, 0, 0.5}, 50, 1);
    EXPECT_EQ(est.max_frequency, 0.0);
    EXPECT_EQ(est.unconverged_runs, 0u);
    EXPECT_EQ(est.audited.size(), 961u);
}

TEST(Learning, DeGrootWithBotFails) {
    SimConfig cfg;
    cfg.graph = spec::Torus{11, 11};
    cfg.bots = {{0, 1.0}};
    cfg.horizon = 50000;
    const Graph g = generate(cfg.graph);
    const auto est = learning_estimate(g, cfg, LearningCriterion{0.2, 0.1, 0, 0.5}, 5, 1);
    for (double f : est.failure_frequency) EXPECT_EQ(f, 1.0);
    EXPECT_FALSE(est.pass);
}

TEST(Learning, IndependentOfWorkerCount) {
    SimConfig cfg;
    cfg.graph = spec::Torus{15, 15};
    cfg.rule = EpsDeGroot{0.02};
    cfg.distortion = {DistortionKind::uniform_noise, 0.018, 0};
    cfg.bots = {{0, 1.0}};
    cfg.horizon = 3000;
    const Graph g = generate(cfg.graph);
    const LearningCriterion crit{0.2, 0.1, 3, 0.5};
    const auto a = learning_estimate(g, cfg, crit, 6, 77, 1);
    const auto b = learning_estimate(g, cfg, crit, 6, 77, 3);
    EXPECT_EQ(a.failure_frequency, b.failure_frequency);
    EXPECT_EQ(a.z_values, b.z_values);
    EXPECT_EQ(a.seeds, b.seeds);
}

TEST(Learning, SummaryCountsUnconvergedAsFailures) {
    ReplicationOutcome good{1, {{0.5, 0.5}, {0.5, 0.5}}, {1, 1}, 10, true};
    ReplicationOutcome stuck{2, {{0.5, 0.5}, {0.5, 0.5}}, {1, 0}, 10, false};
    const auto est = summarize_learning({4, 5}, {good, stuck}, LearningCriterion{}, 0);
    EXPECT_EQ(est.failure_frequency, (std::vector<double>{0.0, 0.5}));
    EXPECT_EQ(est.unconverged_runs, 1u);
    EXPECT_EQ(est.unconverged_agents, 1u);
    EXPECT_DOUBLE_EQ(est.max_frequency, 0.5);
}
