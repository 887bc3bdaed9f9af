#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "treelab/io.hpp"
#include "treelab/spaces.hpp"
#include "treelab/tree.hpp"

namespace treelab {

// Synthetic realization of the almost-biorthogonal systems: vectors x_s in
// the unit ball of the model space, functionals x*_s with dual norm >= 1,
// diagonal pairing >= ||x*_s||/3, cross pairings below delta and path-sum
// functionals bounded by 3.
struct BiorthSystem {
    HyperbolicTree tree;
    // Node set of this system. Normally the full enumeration of `tree`; for
    // segmented levels it is the predecessor-closed support actually reachable
    // by the construction (the declared tree would be too large to fill).
    std::vector<TreeNode> nodes;
    std::map<TreeNode, Vector> vectors;               // x_s
    std::map<TreeNode, LinearFunctional> functionals; // x*_s
    double delta = 0.0;
    SpaceModel space = LpSpace{1.0};  // norms the x_s
    double dual_path_bound = 3.0;
    int level_tag = -1;  // >= 0 when part of a LeveledSystems family
    std::uint64_t seed = 0;

    Key key_of(const TreeNode& s) const;
    const Vector& vector_at(const TreeNode& s) const;
    const LinearFunctional& functional_at(const TreeNode& s) const;
};

// x_s = e_s, x*_s = e*_s over l1 node coordinates; delta = 0, all invariants
// exact.
BiorthSystem canonical_system(const HyperbolicTree& tree);

// Canonical system plus seeded off-diagonal functional entries, each of
// magnitude < delta / (2 * node count), at distinct node keys. Deterministic
// under seed; entries scale linearly in delta so the delta -> 0 limit is the
// canonical system.
BiorthSystem perturbed_system(const HyperbolicTree& tree, double delta, std::uint64_t seed);

// Derived accessor y*_s = sum_{t <= s} x*_t (norm bound 3).
LinearFunctional path_sum_functional(const BiorthSystem& sys, const TreeNode& s);

// Throws InvariantError naming the first violated Prop-2.2 bullet. The cross
// pairing check scans functional supports, so it is exact for the sparse
// systems generated here without the O(n^2) pair loop.
void check_system(const BiorthSystem& sys);

enum class LevelKind { Gluing, Segmented };

struct LeveledSystems {
    LevelKind kind = LevelKind::Gluing;
    int K = 0;  // segment base; 0 for gluing
    int branching = 2;
    int max_level = 0;
    std::vector<double> schedule;  // delta_i, one per level
    std::uint64_t seed = 0;
    int depth_cap = 0;  // gluing only: truncate level depths to this (0 = off)
    std::vector<BiorthSystem> levels;
};

std::vector<double> default_delta_schedule(int max_level);  // 2^{-2i} / 200
std::vector<double> zero_delta_schedule(int max_level);

// Rejects schedules violating the smallness chain
//   2 * 2^{2l+2} * (delta_{l+1} + delta_{l+2}) <= 1/12
// (worst case d = 1 of the gluing estimate), reporting the violated
// inequality. Entries must lie in [0,1) and be non-increasing.
void validate_delta_schedule(const std::vector<double>& schedule);

// Builds the per-level systems: level i over depth 2^i (gluing) or K^i + 1
// (segmented), cross-level pairings bounded by delta_i. Segmented levels get
// root branching b^{N_{i-1}} to hold the branch-index coordinate; exceeding
// `node_budget` reports exhaustion instead of silently shrinking.
LeveledSystems leveled_systems(int max_level, LevelKind kind, int K,
                               const std::vector<double>& schedule, std::uint64_t seed,
                               int branching, int depth_cap = 0,
                               std::uint64_t node_budget = 4'000'000);

void check_leveled(const LeveledSystems& ls);

Json system_to_json(const BiorthSystem& sys);
BiorthSystem system_from_json(const Json& j);
Json leveled_to_json(const LeveledSystems& ls);
LeveledSystems leveled_from_json(const Json& j);

}  // namespace treelab
