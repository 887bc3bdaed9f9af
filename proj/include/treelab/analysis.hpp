#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "treelab/embeddings.hpp"
#include "treelab/io.hpp"
#include "treelab/spaces.hpp"
#include "treelab/tree.hpp"

namespace treelab {

// A finite point map ready for pair scans: distances on indices, images in a
// normed model.
struct MetricMap {
    std::vector<std::string> labels;
    std::vector<Vector> images;
    SpaceModel space = LpSpace{2.0};
    std::function<double(std::size_t, std::size_t)> dist;
    std::size_t size() const { return images.size(); }
};

MetricMap metric_map_from_embedding(const EmbeddingMap& map);

struct ScanConfig {
    std::uint64_t pair_budget = 10'000'000;  // exhaustive when pairs <= budget
    std::uint64_t sample_size = 2'000'000;
    std::uint64_t seed = 1;
    int threads = 1;
};

struct DistortionReport {
    double lip = 0.0;             // sup ||f(x)-f(y)|| / d(x,y)
    double colip_inverse = 0.0;   // the c with ||f(x)-f(y)|| >= d(x,y)/c
    double distortion = 0.0;      // lip * colip_inverse
    std::pair<std::size_t, std::size_t> lip_witness{0, 0};
    std::pair<std::size_t, std::size_t> colip_witness{0, 0};
    std::uint64_t pair_count = 0;
    bool exhaustive = true;
    std::uint64_t sample_size = 0;
    std::uint64_t seed = 0;
    double tolerance = 1e-12;
};

// Errors on non-injective maps (equal images at distinct points) and on
// fewer than two points. Falls back to seeded uniform pair sampling past the
// budget, recording the mode.
DistortionReport distortion(const MetricMap& map, const ScanConfig& config = {});

Json distortion_report_to_json(const DistortionReport& r, const MetricMap& map);

// --- Coarse moduli -----------------------------------------------------------

struct CoarseModuliReport {
    std::vector<double> t_grid;
    std::vector<double> omega;    // omega_f(t) over the grid
    std::vector<double> theta_grid;
    std::vector<double> l_theta;  // L_theta(f) = sup_{t >= theta} omega_f(t)/t (exact on
                                  // the realized distances)
    double l_infinity = 0.0;      // min over the theta grid
    bool l_infinity_is_grid_min = true;  // the true inf ranges over all theta
};

CoarseModuliReport coarse_moduli(const MetricMap& map, const std::vector<double>& t_grid,
                                 const std::vector<double>& theta_grid);

Json coarse_moduli_to_json(const CoarseModuliReport& r);

// --- Filtration machinery ----------------------------------------------------

struct FiltrationWindow {
    int r = 0;
    int s = 0;
    double norm = 0.0;  // || F_r(sum_{j=r+1}^{r+s} z_j) || aggregated over branches
};

struct WTable {
    int depth = 0;       // N
    int branching = 0;   // b
    int a = 2;
    ProjectionMode mode = ProjectionMode::Truncate;
    int k_columns = 0;   // columns k = 0..k_columns (reconstruction-complete)
    std::uint64_t branch_count = 0;
    // norms[branch][j-1][k] = || w_{jk} || at that branch, in the target norm.
    std::vector<std::vector<std::vector<double>>> norms;
    double reconstruction_error = 0.0;  // max over branches/j of || z_j - sum_k w_jk ||
    std::vector<FiltrationWindow> windows;  // midpoint lower bounds, reported not asserted

    // Mean over branches, the finite stand-in for the ultraproduct norm.
    double aggregate(int j, int k) const;
};

// z_j per branch, banded differences w_{jk} = E_{j-a^{k-1}} z_j - E_{j-a^k} z_j
// with E realized as level truncation (graded targets) or sibling averaging
// over the declared branching. Requires u(root) = 0 and a full-branch tree.
WTable filtration_decompose(const EmbeddingMap& u, int a, ProjectionMode mode);

Json wtable_to_json(const WTable& w);
std::string wtable_to_csv(const WTable& w);  // branch,j,k,norm

struct CountingReport {
    double upper_measured = 0.0;   // sum_{j,k>=1} ||w_jk||
    double upper_bound = 0.0;      // C m^{1/p} N
    bool upper_holds = false;
    std::vector<double> lower_measured;  // sum_j ||w_jk|| per k >= 1
    double lower_bound = 0.0;            // N / 2
    int m = 0;
    std::string caveat;  // which proof precondition is unverified, if any
};

CountingReport counting_bounds(const WTable& w, double C, double p);
Json counting_report_to_json(const CountingReport& r);

// --- Certificate -------------------------------------------------------------

struct Certificate {
    double C = 1.0;
    double p = 2.0;
    double q = 2.0;           // conjugate exponent
    long long a = 0;          // minimal integer > (2C)^q unless overridden
    long long m = 0;
    std::string N_decimal;    // exact a^{m+1}
    double N_approx = 0.0;
    double upper = 0.0;       // C m^{1/p} N
    double lower = 0.0;       // m N / 2
    bool contradiction = false;  // m > (2C)^q
};

Certificate certificate(double C, double p, std::optional<long long> a_override = std::nullopt,
                        std::optional<long long> m_override = std::nullopt);

Json certificate_to_json(const Certificate& c);

// Decimal string of base^exp by schoolbook digit multiplication.
std::string pow_decimal(long long base, long long exp);

// --- Concentration toolkit (James sums, Hamming metric, KR bound) ------------

// Count of differing positions between two sorted k-subsets.
int hamming_metric(const std::vector<int>& a, const std::vector<int>& b);

enum class JamesModel { L1Basis, SummingBasis };

// h(n_1,...,n_k) = x_{n_1} + ... + x_{n_k} with x_n = e_n (l1, separation 2)
// or x_n = e_1 + ... + e_n (sup norm, separation 1).
Vector james_sum(JamesModel model, const std::vector<int>& subset);
SpaceModel james_space(JamesModel model);
double james_separation(JamesModel model);  // theta

struct KrComparison {
    double theta = 0.0;
    double lhs = 0.0;          // theta k - 1
    double kr_bound = 0.0;     // 3 (2C+1) k^{1/p}
    bool contradictory = false;  // lhs > kr_bound
};

KrComparison james_kr_comparison(JamesModel model, double C, double p, int k);

struct ConcentrationResult {
    std::vector<int> best_alphabet;
    double best_diameter = 0.0;
    double kr_bound = 0.0;
    bool met = false;  // best diameter <= KR bound
    std::uint64_t evaluations = 0;
    std::uint64_t seed = 0;
    bool heuristic = true;  // the theorem quantifies over infinite alphabets
};

// Greedy/restart search for a sub-alphabet M of size 2k in {1..n} minimizing
// the image diameter of f over sampled k-subsets of M.
ConcentrationResult concentration_search(
    const std::function<Vector(const std::vector<int>&)>& f, const SpaceModel& space, int n,
    int k, double C, double p, std::uint64_t budget, std::uint64_t seed);

Json concentration_to_json(const ConcentrationResult& r);

}  // namespace treelab
