#include "treelab/tree.hpp"

#include <algorithm>
#include <limits>

#include "treelab/errors.hpp"

namespace treelab {

TreeNode TreeNode::predecessor() const {
    if (path.empty()) throw ConfigError("root has no predecessor");
    return TreeNode(std::vector<int>(path.begin(), path.end() - 1));
}

TreeNode TreeNode::restrict_to(int k) const {
    if (k < 0 || k > length()) throw ConfigError("restriction length out of range");
    return TreeNode(std::vector<int>(path.begin(), path.begin() + k));
}

TreeNode TreeNode::concat(const TreeNode& t) const {
    std::vector<int> p = path;
    p.insert(p.end(), t.path.begin(), t.path.end());
    return TreeNode(std::move(p));
}

bool is_ancestor(const TreeNode& s, const TreeNode& t) {
    if (s.length() > t.length()) return false;
    return std::equal(s.path.begin(), s.path.end(), t.path.begin());
}

void HyperbolicTree::validate() const {
    if (depth < 0) throw ConfigError("tree depth must be >= 0");
    if (branching < 1) throw ConfigError("tree branching must be >= 1");
    if (kind == TreeKind::Dyadic && branching != 2)
        throw ConfigError("dyadic tree has branching 2");
    // Guard against overflow in node counting.
    if (node_count() == std::numeric_limits<std::uint64_t>::max())
        throw CapacityError("tree too large to enumerate");
}

std::uint64_t HyperbolicTree::node_count() const {
    // (b^{N+1}-1)/(b-1) nodes; N+1 for the degenerate path tree b = 1.
    if (branching == 1) return static_cast<std::uint64_t>(depth) + 1;
    std::uint64_t total = 0, level = 1;
    for (int i = 0; i <= depth; ++i) {
        if (total > std::numeric_limits<std::uint64_t>::max() - level)
            return std::numeric_limits<std::uint64_t>::max();
        total += level;
        if (i < depth) {
            if (level > std::numeric_limits<std::uint64_t>::max() / branching)
                return std::numeric_limits<std::uint64_t>::max();
            level *= static_cast<std::uint64_t>(branching);
        }
    }
    return total;
}

std::uint64_t HyperbolicTree::branch_count() const {
    std::uint64_t n = 1;
    for (int i = 0; i < depth; ++i) {
        if (n > std::numeric_limits<std::uint64_t>::max() / branching)
            return std::numeric_limits<std::uint64_t>::max();
        n *= static_cast<std::uint64_t>(branching);
    }
    return n;
}

bool HyperbolicTree::contains(const TreeNode& s) const {
    if (s.length() > depth) return false;
    for (int v : s.path)
        if (v < 1 || v > branching) return false;
    return true;
}

HyperbolicTree make_integer_tree(int depth, int branching) {
    HyperbolicTree t{TreeKind::Integer, depth, branching};
    t.validate();
    return t;
}

HyperbolicTree make_dyadic_tree(int depth) {
    HyperbolicTree t{TreeKind::Dyadic, depth, 2};
    t.validate();
    return t;
}

int rho(const TreeNode& s, const TreeNode& t) {
    int common = 0;
    int limit = std::min(s.length(), t.length());
    while (common < limit && s.path[common] == t.path[common]) ++common;
    return s.length() + t.length() - 2 * common;
}

TreeNode gca(const TreeNode& s, const TreeNode& t) {
    int common = 0;
    int limit = std::min(s.length(), t.length());
    while (common < limit && s.path[common] == t.path[common]) ++common;
    return s.restrict_to(common);
}

std::vector<TreeNode> enumerate_nodes(const HyperbolicTree& tree) {
    tree.validate();
    std::uint64_t total = tree.node_count();
    std::vector<TreeNode> out;
    out.reserve(total);
    out.emplace_back();  // root
    std::size_t level_begin = 0;
    for (int level = 1; level <= tree.depth; ++level) {
        std::size_t level_end = out.size();
        for (std::size_t i = level_begin; i < level_end; ++i) {
            for (int c = 1; c <= tree.branching; ++c) {
                std::vector<int> p = out[i].path;
                p.push_back(c);
                out.emplace_back(std::move(p));
            }
        }
        level_begin = level_end;
    }
    return out;
}

TreeNode node_at_index(const HyperbolicTree& tree, std::uint64_t index) {
    if (index >= tree.node_count()) throw ConfigError("node index out of range");
    // Find the level: index falls in [offset, offset + b^level).
    std::uint64_t offset = 0, level_size = 1;
    int level = 0;
    while (index >= offset + level_size) {
        offset += level_size;
        level_size *= static_cast<std::uint64_t>(tree.branching);
        ++level;
    }
    std::uint64_t r = index - offset;
    std::vector<int> path(level);
    for (int i = level - 1; i >= 0; --i) {
        path[i] = static_cast<int>(r % tree.branching) + 1;
        r /= tree.branching;
    }
    return TreeNode(std::move(path));
}

std::vector<std::vector<TreeNode>> branches(const HyperbolicTree& tree) {
    tree.validate();
    std::uint64_t count = tree.branch_count();
    std::vector<std::vector<TreeNode>> out;
    out.reserve(count);
    std::vector<int> digits(tree.depth, 1);
    for (std::uint64_t r = 0; r < count; ++r) {
        std::vector<TreeNode> chain;
        chain.reserve(tree.depth + 1);
        for (int k = 0; k <= tree.depth; ++k)
            chain.emplace_back(std::vector<int>(digits.begin(), digits.begin() + k));
        out.push_back(std::move(chain));
        // Next terminal node in lexicographic order.
        for (int i = tree.depth - 1; i >= 0; --i) {
            if (digits[i] < tree.branching) {
                ++digits[i];
                break;
            }
            digits[i] = 1;
        }
    }
    return out;
}

std::uint64_t branch_index(const HyperbolicTree& tree, const TreeNode& terminal) {
    if (terminal.length() != tree.depth || !tree.contains(terminal))
        throw ConfigError("not a terminal node of this tree");
    std::uint64_t idx = 0;
    for (int v : terminal.path) idx = idx * tree.branching + static_cast<std::uint64_t>(v - 1);
    return idx + 1;
}

std::uint64_t segment_partial_sum(int K, int i) {
    std::uint64_t total = 0, pw = 1;
    for (int k = 0; k <= i; ++k) {
        total += pw;
        if (k < i) pw *= static_cast<std::uint64_t>(K);
    }
    return total;
}

std::vector<TreeNode> segment_decompose(const TreeNode& s, int K) {
    if (K < 2) throw ConfigError("segment base K must be >= 2");
    if (s.is_root()) throw ConfigError("segment_decompose: root has no decomposition");
    const std::uint64_t len = static_cast<std::uint64_t>(s.length());
    int n = 0;
    while (segment_partial_sum(K, n) < len) ++n;
    std::vector<TreeNode> segments;
    segments.reserve(n + 1);
    std::size_t pos = 0;
    std::uint64_t pw = 1;
    for (int j = 0; j < n; ++j) {
        segments.emplace_back(
            std::vector<int>(s.path.begin() + pos, s.path.begin() + pos + pw));
        pos += pw;
        pw *= static_cast<std::uint64_t>(K);
    }
    segments.emplace_back(std::vector<int>(s.path.begin() + pos, s.path.end()));
    return segments;
}

std::string node_to_string(const TreeNode& s) {
    std::string out;
    for (std::size_t i = 0; i < s.path.size(); ++i) {
        if (i) out += '/';
        out += std::to_string(s.path[i]);
    }
    return out;
}

}  // namespace treelab
