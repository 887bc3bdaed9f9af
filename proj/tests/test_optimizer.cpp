#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "star_oracle.hpp"
#include "treelab/errors.hpp"
#include "treelab/optimizer.hpp"
#include "treelab/systems.hpp"

using namespace treelab;
using star_oracle::three_leaf_star;

namespace {

double star_grid_oracle() { return star_oracle::best_distortion(); }

}  // namespace

TEST_CASE("metric validation reports witnesses") {
    MetricSpaceInput bad = three_leaf_star();
    bad.dist[1][2] = bad.dist[2][1] = 9.0;  // breaks the triangle via the root
    CHECK_THROWS_WITH_AS(validate_metric(bad), doctest::Contains("triangle"), ConfigError);
    MetricSpaceInput asym = three_leaf_star();
    asym.dist[1][2] = 1.5;
    CHECK_THROWS_AS(validate_metric(asym), ConfigError);
    CHECK_NOTHROW(validate_metric(three_leaf_star()));
}

TEST_CASE("the grid oracle pins the star optimum at 2/sqrt(3)") {
    double oracle = star_grid_oracle();
    CHECK(oracle == doctest::Approx(2.0 / std::sqrt(3.0)).epsilon(1e-4));
}

TEST_CASE("optimizer reaches the star oracle within 1e-3") {
    double oracle = star_grid_oracle();
    OptimizerConfig config;
    config.iterations = 800;
    config.restarts = 6;
    config.seed = 1;
    OptimizationRun run = optimize(three_leaf_star(), 2.0, 2, config);
    CHECK(std::abs(run.final_distortion - oracle) <= 1e-3);
    CHECK(run.final_distortion >= 1.0);
}

TEST_CASE("two points embed with distortion exactly 1") {
    MetricSpaceInput m;
    m.labels = {"a", "b"};
    m.dist = {{0, 3}, {3, 0}};
    OptimizerConfig config;
    config.iterations = 50;
    config.restarts = 1;
    OptimizationRun run = optimize(m, 2.0, 1, config);
    CHECK(run.final_distortion == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("l1 target with the tree initialization stays an isometry") {
    HyperbolicTree tree = make_integer_tree(3, 2);
    MetricSpaceInput points = metric_from_tree(tree);
    EmbeddingMap l1 = embed_l1(canonical_system(tree));
    int dim = static_cast<int>(points.size());
    auto init = tree_init_positions(l1, dim);
    OptimizerConfig config;
    config.iterations = 120;
    config.restarts = 2;
    OptimizationRun run = optimize(points, 1.0, dim, config, &init);
    CHECK(run.final_distortion <= 1.0 + 1e-6);
}

TEST_CASE("final distortion dominates the smoothed objective's implied bound") {
    // Log-sum-exp over-estimates the max by at most log(m)/beta on each side,
    // so exp(objective) >= exact >= exp(objective - 2 log(m)/beta) per iterate.
    OptimizerConfig config;
    config.iterations = 200;
    config.restarts = 2;
    OptimizationRun run = optimize(three_leaf_star(), 2.0, 2, config);
    const double pairs = 6.0;
    for (const TracePoint& t : run.trace) {
        double exact_here = t.lip * t.colip_inverse;
        double beta = config.beta0 * (1.0 + t.iteration / config.beta_tau);
        CHECK(std::exp(t.objective) >= exact_here * (1.0 - 1e-9));
        CHECK(std::exp(t.objective - 2.0 * std::log(pairs) / beta) <=
              exact_here * (1.0 + 1e-9));
        CHECK(exact_here >= 1.0 - 1e-12);
    }
    CHECK(run.final_distortion >= 1.0 - 1e-12);
}

TEST_CASE("seed determinism of reported distortion") {
    OptimizerConfig config;
    config.iterations = 150;
    config.restarts = 2;
    config.seed = 12345;
    OptimizationRun a = optimize(three_leaf_star(), 2.0, 2, config);
    OptimizationRun b = optimize(three_leaf_star(), 2.0, 2, config);
    CHECK(a.final_distortion == b.final_distortion);
    CHECK(a.positions == b.positions);
}

TEST_CASE("p = 1 and p = inf subgradient paths run") {
    OptimizerConfig config;
    config.iterations = 120;
    config.restarts = 2;
    for (double p : {1.0, kInfinityP}) {
        OptimizationRun run = optimize(three_leaf_star(), p, 3, config);
        CHECK(run.final_distortion >= 1.0 - 1e-12);
        CHECK(run.final_distortion < 2.0);
    }
}

TEST_CASE("growth experiment is non-decreasing for N in {2,4} into l2^8") {
    OptimizerConfig config;
    config.iterations = 250;
    config.restarts = 2;
    config.seed = 3;
    GrowthTable table = growth_experiment({2, 4}, 2, 2.0, 8, config);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0].depth == 2);
    CHECK(table.rows[1].depth == 4);
    CHECK(table.rows[1].distortion >= table.rows[0].distortion - 1e-4);
    // Single-depth list gives a single row.
    GrowthTable single = growth_experiment({2}, 2, 2.0, 4, config);
    CHECK(single.rows.size() == 1);
}

TEST_CASE("growth experiment into l1 with full dimension stays at 1") {
    OptimizerConfig config;
    config.iterations = 100;
    config.restarts = 1;
    GrowthTable table = growth_experiment({2, 3}, 2, 1.0, 31, config);
    for (const auto& row : table.rows) CHECK(row.distortion <= 1.0 + 1e-6);
}

TEST_CASE("config validation") {
    OptimizerConfig config;
    config.iterations = 0;
    CHECK_THROWS_AS(optimize(three_leaf_star(), 2.0, 2, config), ConfigError);
    OptimizerConfig ok;
    CHECK_THROWS_AS(optimize(three_leaf_star(), 0.5, 2, ok), ConfigError);
    CHECK_THROWS_AS(optimize(three_leaf_star(), 2.0, 0, ok), ConfigError);
    MetricSpaceInput one;
    one.labels = {"x"};
    one.dist = {{0}};
    CHECK_THROWS_AS(optimize(one, 2.0, 2, ok), ConfigError);
}
