#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "treelab/io.hpp"
#include "treelab/spaces.hpp"
#include "treelab/systems.hpp"
#include "treelab/tree.hpp"

namespace treelab {

struct Provenance {
    std::string construction;
    Json params = Json::object();
};

// Finite table node -> vector together with the target space and where the
// map came from.
struct EmbeddingMap {
    std::vector<TreeNode> nodes;
    std::map<TreeNode, Vector> image;
    SpaceModel target = LpSpace{1.0};
    Provenance provenance;

    const Vector& at(const TreeNode& s) const;  // evaluate; errors on unknown nodes
};

// F(root) = 0, F(s) = sum_{root < t <= s} x_t into the system's l1 model.
// 1-Lipschitz; for delta < 1/(24 N^2) the inverse is >= 1/24.
EmbeddingMap embed_l1(const BiorthSystem& sys);

// G(s) = sum_{t <= s} y*_t with y*_t the path sums of functionals, landing in
// sup-norm coordinates. 3-Lipschitz; inverse >= 1/8 under the same delta
// condition.
EmbeddingMap embed_dual(const BiorthSystem& sys);

// Gluing across dyadic depth windows: F(s) = lambda_s F_k(s) +
// (1 - lambda_s) F_{k+1}(s) for 2^k <= |s| < 2^{k+1}, F(root) = 0.
EmbeddingMap embed_glued(const LeveledSystems& ls, int depth);
EmbeddingMap embed_glued_dual(const LeveledSystems& ls, int depth);

// lambda_s = (2^{k+1} - |s|) / 2^k for the window 2^k <= |s| < 2^{k+1}.
double gluing_lambda(int length);
int gluing_window(int length);  // the k above

// Segmented construction: decompose each node into segments of lengths K^j,
// route each segment through the branch-indexed level system, and sum the
// approximants y_{t,j}. `eta` perturbs the y's within the schedule tolerance
// (empty = use the delta schedule; all-zero = exact).
EmbeddingMap embed_segmented(const LeveledSystems& ls, int depth,
                             const std::vector<double>& eta = {});

// --- Proof-case machinery ----------------------------------------------------

// Case labels for pairs under the segmented construction, by the (n, m, p)
// comparisons of the inverse-bound discussion.
enum class SegCase { A, B, C, D, E, F };
enum class SegSubcase { None, VFirst, WFirst, Degenerate };

struct SegPairClass {
    int n = 0;  // segment index of the deeper node
    int m = 0;  // segment index of the shallower node (-1 for the root)
    int p = 0;  // segment index of the greatest common ancestor (-1 for the root)
    bool comparable = false;
    SegCase c = SegCase::D;
    SegSubcase sub = SegSubcase::None;
};

// Index n with N_{n-1} < len <= N_n (-1 for len = 0).
int segment_index(int len, int K);

SegPairClass classify_segmented_pair(const TreeNode& s, const TreeNode& s2, int K);

// Named inverse-bound constant for a case where the discussion states one
// (b: 208/1308, c first subcase: 520); nullopt where it only yields an
// unnamed K-dependent constant.
std::optional<double> segmented_case_constant(SegCase c, SegSubcase sub);

// Per-case scan of a segmented map: worst ratio ||G(s)-G(s')|| / rho per case,
// the measured case-b constant alpha, and the derived case-f budget
// M = 6/alpha with its constant 104(M+1).
struct SegCaseReport {
    std::array<double, 6> min_ratio;  // indexed by SegCase; inf when the case is absent
    std::array<std::uint64_t, 6> pair_count;
    double alpha = 0.0;  // min ratio over case-b pairs
    double M = 0.0;      // 6 / alpha
    double case_f_constant = 0.0;  // 104 (M + 1)
};

SegCaseReport segmented_case_scan(const EmbeddingMap& map, int K);
Json segmented_case_report_to_json(const SegCaseReport& r);

// --- Witness pairings --------------------------------------------------------

// <sum_{t <= s_deep} x*_t, F(s) - F(s')>; the chain value is >= rho/8 under
// the delta condition.
double l1_witness_pairing(const BiorthSystem& sys, const EmbeddingMap& map, const TreeNode& s,
                          const TreeNode& s2);

// <x_v, G(s) - G(s')> with v the successor of the common ancestor toward the
// deeper node.
double dual_witness_pairing(const BiorthSystem& sys, const EmbeddingMap& map, const TreeNode& s,
                            const TreeNode& s2);

// <sum_{u < t <= s}(x*_{l+1,t} + x*_{l+2,t}), F(s) - F(s')> for the deeper
// node's window l.
double glued_witness_pairing(const LeveledSystems& ls, const EmbeddingMap& map, const TreeNode& s,
                             const TreeNode& s2);

// <x_{l+1,v} + x_{l+2,v}, G(s) - G(s')>.
double glued_dual_witness_pairing(const LeveledSystems& ls, const EmbeddingMap& map,
                                  const TreeNode& s, const TreeNode& s2);

// For comparable pairs whose difference lives in a single level (case d, and
// root pairs of unit distance): the witness value expected >= d/4. Returns
// nullopt for pairs where the discussion names no single-functional witness.
std::optional<double> segmented_comparable_witness(const LeveledSystems& ls,
                                                   const EmbeddingMap& map, const TreeNode& s,
                                                   const TreeNode& s2);

// --- Persistence -------------------------------------------------------------

// CSV: one row per node, "path,key,value,key,value,..." with slash-joined
// integer cells; JSON sidecar carries provenance, target and node order.
void dump_embedding(const EmbeddingMap& map, const std::filesystem::path& csv_path,
                    const std::filesystem::path& sidecar_path);
EmbeddingMap load_embedding(const std::filesystem::path& csv_path,
                            const std::filesystem::path& sidecar_path);

}  // namespace treelab
