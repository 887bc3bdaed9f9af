#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "treelab/analysis.hpp"
#include "treelab/embeddings.hpp"
#include "treelab/io.hpp"
#include "treelab/tree.hpp"

namespace treelab {

struct MetricSpaceInput {
    std::vector<std::string> labels;
    std::vector<std::vector<double>> dist;
    std::size_t size() const { return labels.size(); }
};

// Symmetry, zero diagonal, positivity and the triangle inequality; a
// violation is reported with its witness triple.
void validate_metric(const MetricSpaceInput& points);

MetricSpaceInput metric_from_tree(const HyperbolicTree& tree);

struct OptimizerConfig {
    int iterations = 600;
    int restarts = 4;
    double step0 = 0.15;
    double step_tau = 150.0;  // step_t = step0 / (1 + t/step_tau)
    double beta0 = 8.0;
    double beta_tau = 200.0;  // beta_t = beta0 * (1 + t/beta_tau)
    std::uint64_t seed = 1;
    double tolerance = 1e-9;
};

struct TracePoint {
    int iteration = 0;
    double objective = 0.0;  // smoothed log-distortion
    double lip = 0.0;
    double colip_inverse = 0.0;
};

struct OptimizationRun {
    double p = 2.0;
    int dim = 2;
    OptimizerConfig config;
    std::vector<std::string> labels;
    std::vector<std::vector<double>> positions;  // best found
    std::vector<TracePoint> trace;               // of the winning restart
    int best_restart = 0;
    double final_distortion = 0.0;  // recomputed exactly through the analysis scan
    DistortionReport final_report;
};

// Minimizes a softmax-smoothed log-distortion surrogate by subgradient steps
// with an annealed temperature, best-of-restarts; the returned distortion is
// the exact unsmoothed value of the best iterate. Deterministic under seed.
OptimizationRun optimize(const MetricSpaceInput& points, double p, int dim,
                         const OptimizerConfig& config,
                         const std::vector<std::vector<double>>* init = nullptr);

// embed_l1 image projected to `dim` coordinates by largest coordinate
// variance; with dim >= node count - 1 this is an isometry in l1.
std::vector<std::vector<double>> tree_init_positions(const EmbeddingMap& l1_map, int dim);

struct GrowthRow {
    int depth = 0;
    double distortion = 0.0;
    int best_restart = 0;
};

struct GrowthTable {
    int branching = 2;
    double p = 2.0;
    int dim = 2;
    OptimizerConfig config;
    std::vector<GrowthRow> rows;
};

// Best distortion found per tree depth, initialized from the l1 construction
// plus random restarts. An upper bound on the optimum, labeled as such.
GrowthTable growth_experiment(const std::vector<int>& depths, int branching, double p, int dim,
                              const OptimizerConfig& config);

Json run_to_json(const OptimizationRun& run);
std::string trace_to_csv(const std::vector<TracePoint>& trace);
std::string positions_to_csv(const std::vector<std::string>& labels,
                             const std::vector<std::vector<double>>& positions);
Json growth_to_json(const GrowthTable& table);

}  // namespace treelab
