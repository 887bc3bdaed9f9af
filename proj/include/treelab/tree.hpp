#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace treelab {

// A node of T_infinity: a finite sequence of positive integers. The empty
// sequence is the root. Nodes compare by path, so lexicographic order on
// paths is available for deterministic tie-breaking.
struct TreeNode {
    std::vector<int> path;

    TreeNode() = default;
    explicit TreeNode(std::vector<int> p) : path(std::move(p)) {}

    int length() const { return static_cast<int>(path.size()); }
    bool is_root() const { return path.empty(); }

    // Predecessor s^- ; only valid on non-root nodes.
    TreeNode predecessor() const;
    // Ancestor of length k (t restricted to its first k entries).
    TreeNode restrict_to(int k) const;
    // Concatenation s ^ t.
    TreeNode concat(const TreeNode& t) const;

    auto operator<=>(const TreeNode& other) const = default;
};

bool is_ancestor(const TreeNode& s, const TreeNode& t);  // s <= t in the tree order

enum class TreeKind { Integer, Dyadic };

// Finite truncation of T_N (or of Bourgain's dyadic B_N). Dyadic trees force
// branching 2; their alphabet {-1,1} is stored as {1,2}.
struct HyperbolicTree {
    TreeKind kind = TreeKind::Integer;
    int depth = 0;      // N >= 0
    int branching = 2;  // b >= 1

    void validate() const;
    std::uint64_t node_count() const;
    std::uint64_t branch_count() const;  // b^N
    bool contains(const TreeNode& s) const;
};

HyperbolicTree make_integer_tree(int depth, int branching);
HyperbolicTree make_dyadic_tree(int depth);

// Hyperbolic distance rho(s,t) = |s| + |t| - 2|gca(s,t)|.
int rho(const TreeNode& s, const TreeNode& t);

// Greatest common ancestor = longest common prefix.
TreeNode gca(const TreeNode& s, const TreeNode& t);

// Canonical enumeration: level order, siblings by increasing last entry.
// Ancestors always precede descendants; the root is first.
std::vector<TreeNode> enumerate_nodes(const HyperbolicTree& tree);

// Inverse of the enumeration position, without materializing the node list.
TreeNode node_at_index(const HyperbolicTree& tree, std::uint64_t index);

// Maximal chains from the root to each terminal node, ordered consistently
// with enumerate_nodes (lexicographic in the terminal node).
std::vector<std::vector<TreeNode>> branches(const HyperbolicTree& tree);

// 1-based index of a terminal node in the branch enumeration of `tree`.
std::uint64_t branch_index(const HyperbolicTree& tree, const TreeNode& terminal);

// Splits s into segments s_0,...,s_n with |s_j| = K^j for j <= n-1 and
// 1 <= |s_n| <= K^n. Errors on the root.
std::vector<TreeNode> segment_decompose(const TreeNode& s, int K);

// Partial sums N_i = sum_{k=0}^{i} K^k of segment lengths.
std::uint64_t segment_partial_sum(int K, int i);

std::string node_to_string(const TreeNode& s);  // slash-joined entries, "" for the root

}  // namespace treelab
