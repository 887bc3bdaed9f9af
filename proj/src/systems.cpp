#include "treelab/systems.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "treelab/errors.hpp"
#include "treelab/rng.hpp"

namespace treelab {

Key BiorthSystem::key_of(const TreeNode& s) const {
    return level_tag >= 0 ? level_key(level_tag, s) : node_key(s);
}

const Vector& BiorthSystem::vector_at(const TreeNode& s) const {
    auto it = vectors.find(s);
    if (it == vectors.end()) throw ConfigError("node not in system: " + node_to_string(s));
    return it->second;
}

const LinearFunctional& BiorthSystem::functional_at(const TreeNode& s) const {
    auto it = functionals.find(s);
    if (it == functionals.end()) throw ConfigError("node not in system: " + node_to_string(s));
    return it->second;
}

namespace {

BiorthSystem bare_canonical(const HyperbolicTree& tree, std::vector<TreeNode> nodes,
                            int level_tag) {
    BiorthSystem sys;
    sys.tree = tree;
    sys.nodes = std::move(nodes);
    sys.level_tag = level_tag;
    for (const TreeNode& s : sys.nodes) {
        Vector e;
        e.set(sys.key_of(s), 1.0);
        sys.vectors[s] = e;
        LinearFunctional f;
        f.coeffs = e;
        f.bound = 1.0;
        sys.functionals[s] = f;
    }
    return sys;
}

}  // namespace

BiorthSystem canonical_system(const HyperbolicTree& tree) {
    tree.validate();
    return bare_canonical(tree, enumerate_nodes(tree), -1);
}

namespace {

// Adds sparse off-diagonal entries to every functional: up to 8 distinct
// targets per node, each of magnitude < scale. Targets and magnitudes are a
// pure function of (seed, level_tag, node path).
void perturb_functionals(BiorthSystem& sys, double scale,
                         const std::vector<std::pair<int, const std::vector<TreeNode>*>>& pools,
                         std::uint64_t seed) {
    if (scale <= 0.0) return;
    for (const TreeNode& s : sys.nodes) {
        Pcg32 rng(hash_ints(mix_seed(seed, static_cast<std::uint64_t>(sys.level_tag + 1)), s.path));
        LinearFunctional& f = sys.functionals[s];
        Key own = sys.key_of(s);
        int wanted = 8;
        std::set<Key> used{own};
        for (int attempt = 0; attempt < 4 * wanted && static_cast<int>(used.size()) <= wanted;
             ++attempt) {
            const auto& [tag, pool] =
                pools[rng.next_below(static_cast<std::uint32_t>(pools.size()))];
            if (pool->empty()) continue;
            const TreeNode& t = (*pool)[rng.next_below(static_cast<std::uint32_t>(pool->size()))];
            Key target = tag >= 0 ? level_key(tag, t) : node_key(t);
            if (!used.insert(target).second) continue;
            double magnitude = scale * rng.next_signed();
            f.coeffs.add(target, magnitude);
        }
        f.bound = dual_norm(f, std::get<LpSpace>(sys.space));
    }
}

}  // namespace

BiorthSystem perturbed_system(const HyperbolicTree& tree, double delta, std::uint64_t seed) {
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
    BiorthSystem sys = canonical_system(tree);
    sys.delta = delta;
    sys.seed = seed;
    double n = static_cast<double>(sys.nodes.size());
    // Strictly below delta/(2n) so cross pairings stay strictly below delta.
    double scale = delta / (2.0 * n);
    std::vector<std::pair<int, const std::vector<TreeNode>*>> pools{{-1, &sys.nodes}};
    perturb_functionals(sys, scale, pools, seed);
    return sys;
}

LinearFunctional path_sum_functional(const BiorthSystem& sys, const TreeNode& s) {
    LinearFunctional out;
    for (int k = 0; k <= s.length(); ++k) {
        const LinearFunctional& f = sys.functional_at(s.restrict_to(k));
        out.coeffs += f.coeffs;
    }
    out.bound = sys.dual_path_bound;
    return out;
}

void check_system(const BiorthSystem& sys) {
    const auto* lp = std::get_if<LpSpace>(&sys.space);
    if (!lp) throw InvariantError("system space must be an Lp model");
    // Valid node keys of this system, for the cross-pairing support scan.
    std::set<Key> own_keys;
    for (const TreeNode& s : sys.nodes) own_keys.insert(sys.key_of(s));

    for (const TreeNode& s : sys.nodes) {
        const Vector& x = sys.vector_at(s);
        const LinearFunctional& f = sys.functional_at(s);
        if (norm(x, sys.space) > 1.0 + 1e-12)
            throw InvariantError("||x_s|| > 1 at " + node_to_string(s));
        double fn = dual_norm(f, *lp);
        if (!s.is_root() && fn < 1.0 - 1e-12)
            throw InvariantError("||x*_s|| < 1 at " + node_to_string(s));
        double diag = pair(f, x);
        if (diag < fn / 3.0 - 1e-12)
            throw InvariantError("<x*_s, x_s> < ||x*_s||/3 at " + node_to_string(s));
        // Cross pairings: x_t is e_{key(t)} plus nothing, so <x*_s, x_t> is the
        // coefficient of x*_s at key(t).
        Key own = sys.key_of(s);
        for (const auto& [k, v] : f.coeffs.entries) {
            if (k == own || !own_keys.count(k)) continue;
            bool ok = sys.delta == 0.0 ? v == 0.0 : std::abs(v) < sys.delta;
            if (!ok)
                throw InvariantError("|<x*_s, x_t>| >= delta at " + node_to_string(s) +
                                     " key " + key_to_string(k));
        }
        LinearFunctional path = path_sum_functional(sys, s);
        if (dual_norm(path, *lp) > sys.dual_path_bound + 1e-12)
            throw InvariantError("path sum functional exceeds bound 3 at " + node_to_string(s));
    }
}

std::vector<double> default_delta_schedule(int max_level) {
    std::vector<double> d(static_cast<std::size_t>(max_level) + 1);
    for (int i = 0; i <= max_level; ++i) d[i] = std::ldexp(1.0, -2 * i) / 200.0;
    return d;
}

std::vector<double> zero_delta_schedule(int max_level) {
    return std::vector<double>(static_cast<std::size_t>(max_level) + 1, 0.0);
}

void validate_delta_schedule(const std::vector<double>& schedule) {
    if (schedule.empty()) throw ConfigError("empty delta schedule");
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (!(schedule[i] >= 0.0 && schedule[i] < 1.0))
            throw ConfigError("delta_" + std::to_string(i) + " outside [0,1)");
        if (i > 0 && schedule[i] > schedule[i - 1])
            throw ConfigError("delta schedule must be non-increasing at index " +
                              std::to_string(i));
    }
    for (std::size_t l = 0; l + 2 < schedule.size(); ++l) {
        double lhs = 2.0 * std::ldexp(1.0, 2 * static_cast<int>(l) + 2) *
                     (schedule[l + 1] + schedule[l + 2]);
        if (lhs > 1.0 / 12.0) {
            std::ostringstream msg;
            msg << "delta schedule too large: 2*2^(2l+2)*(delta_" << l + 1 << "+delta_" << l + 2
                << ") = " << lhs << " > 1/12 at l = " << l;
            throw ConfigError(msg.str());
        }
    }
}

namespace {

// Node set for a segmented level: root, branch-index nodes (r) for
// r = 1..root_branching, and the b-ary subtree of depth K^i below each.
std::vector<TreeNode> segmented_support(std::uint64_t root_branching, int inner_branching,
                                        int inner_depth, std::uint64_t node_budget) {
    std::uint64_t per_root = make_integer_tree(inner_depth, inner_branching).node_count();
    if (root_branching > node_budget || per_root > node_budget / root_branching)
        throw CapacityError("branch enumeration exhausted: segmented level needs " +
                            std::to_string(root_branching) + " branch roots");
    std::vector<TreeNode> nodes;
    nodes.reserve(static_cast<std::size_t>(1 + root_branching * per_root));
    nodes.emplace_back();
    // Level order over the support.
    std::vector<TreeNode> frontier;
    for (std::uint64_t r = 1; r <= root_branching; ++r)
        frontier.emplace_back(std::vector<int>{static_cast<int>(r)});
    for (int depth = 1; depth <= inner_depth + 1 && !frontier.empty(); ++depth) {
        nodes.insert(nodes.end(), frontier.begin(), frontier.end());
        if (depth == inner_depth + 1) break;
        std::vector<TreeNode> next;
        next.reserve(frontier.size() * inner_branching);
        for (const TreeNode& s : frontier)
            for (int c = 1; c <= inner_branching; ++c) {
                std::vector<int> p = s.path;
                p.push_back(c);
                next.emplace_back(std::move(p));
            }
        frontier = std::move(next);
    }
    return nodes;
}

std::uint64_t pow_u64(std::uint64_t base, std::uint64_t exp) {
    std::uint64_t out = 1;
    for (std::uint64_t i = 0; i < exp; ++i) {
        if (out > (std::uint64_t(1) << 62) / std::max<std::uint64_t>(base, 1))
            throw CapacityError("branch enumeration exhausted: index overflow");
        out *= base;
    }
    return out;
}

}  // namespace

LeveledSystems leveled_systems(int max_level, LevelKind kind, int K,
                               const std::vector<double>& schedule, std::uint64_t seed,
                               int branching, int depth_cap, std::uint64_t node_budget) {
    if (max_level < 0) throw ConfigError("max_level must be >= 0");
    if (branching < 1) throw ConfigError("branching must be >= 1");
    if (kind == LevelKind::Segmented && K < 2) throw ConfigError("segmented kind needs K >= 2");
    if (static_cast<int>(schedule.size()) < max_level + 1)
        throw ConfigError("schedule shorter than level count");
    validate_delta_schedule(schedule);

    LeveledSystems ls;
    ls.kind = kind;
    ls.K = kind == LevelKind::Segmented ? K : 0;
    ls.branching = branching;
    ls.max_level = max_level;
    ls.schedule = schedule;
    ls.seed = seed;
    ls.depth_cap = depth_cap;

    // Trees and node lists first: perturbation targets may point at any level.
    std::uint64_t total_nodes = 0;
    for (int i = 0; i <= max_level; ++i) {
        BiorthSystem sys;
        if (kind == LevelKind::Gluing) {
            int depth = 1 << i;
            if (depth_cap > 0) depth = std::min(depth, depth_cap);
            HyperbolicTree t = make_integer_tree(depth, branching);
            if (t.node_count() > node_budget)
                throw CapacityError("gluing level " + std::to_string(i) + " exceeds node budget");
            sys = bare_canonical(t, enumerate_nodes(t), i);
        } else {
            std::uint64_t inner_depth = 1;
            for (int k = 0; k < i; ++k) inner_depth *= static_cast<std::uint64_t>(K);
            if (inner_depth > 60) throw CapacityError("segment length overflow at level " +
                                                      std::to_string(i));
            std::uint64_t root_branching =
                i == 0 ? static_cast<std::uint64_t>(branching)
                       : pow_u64(static_cast<std::uint64_t>(branching), segment_partial_sum(K, i - 1));
            HyperbolicTree t;
            t.kind = TreeKind::Integer;
            t.depth = static_cast<int>(inner_depth) + 1;
            t.branching = static_cast<int>(
                std::min<std::uint64_t>(std::max<std::uint64_t>(branching, root_branching),
                                        std::uint64_t(1) << 30));
            std::vector<TreeNode> nodes =
                i == 0 ? enumerate_nodes(make_integer_tree(1 + 1, branching))
                       : segmented_support(root_branching, branching,
                                           static_cast<int>(inner_depth), node_budget);
            sys = bare_canonical(t, std::move(nodes), i);
        }
        sys.delta = schedule[i];
        sys.seed = seed;
        total_nodes += sys.nodes.size();
        if (total_nodes > node_budget)
            throw CapacityError("leveled family exceeds node budget");
        ls.levels.push_back(std::move(sys));
    }

    // Cross-level perturbation: entries strictly below delta_i at distinct
    // keys anywhere in the family.
    std::vector<std::pair<int, const std::vector<TreeNode>*>> pools;
    for (int i = 0; i <= max_level; ++i) pools.emplace_back(i, &ls.levels[i].nodes);
    for (int i = 0; i <= max_level; ++i) {
        double scale = schedule[i] / 2.0;
        perturb_functionals(ls.levels[i], scale, pools, seed);
    }
    return ls;
}

void check_leveled(const LeveledSystems& ls) {
    validate_delta_schedule(ls.schedule);
    std::set<Key> family_keys;
    for (const auto& level : ls.levels)
        for (const TreeNode& s : level.nodes) family_keys.insert(level.key_of(s));
    for (const auto& level : ls.levels) {
        check_system(level);
        double delta_i = ls.schedule[static_cast<std::size_t>(level.level_tag)];
        for (const TreeNode& s : level.nodes) {
            Key own = level.key_of(s);
            for (const auto& [k, v] : level.functional_at(s).coeffs.entries) {
                if (k == own || !family_keys.count(k)) continue;
                bool ok = delta_i == 0.0 ? v == 0.0 : std::abs(v) < delta_i;
                if (!ok)
                    throw InvariantError("cross-level pairing >= delta_i at level " +
                                         std::to_string(level.level_tag) + " node " +
                                         node_to_string(s));
            }
        }
    }
}

Json system_to_json(const BiorthSystem& sys) {
    Json j;
    j["tree"] = tree_to_json(sys.tree);
    j["delta"] = sys.delta;
    j["seed"] = sys.seed;
    j["level_tag"] = sys.level_tag;
    j["space"] = space_to_json(sys.space);
    j["dual_path_bound"] = sys.dual_path_bound;
    Json nodes = Json::array();
    for (const TreeNode& s : sys.nodes) nodes.push_back(node_to_json(s));
    j["nodes"] = nodes;
    Json vectors = Json::object(), functionals = Json::object();
    for (const TreeNode& s : sys.nodes) {
        vectors[key_to_string(s.path)] = vector_to_json(sys.vector_at(s));
        Json jf;
        jf["entries"] = vector_to_json(sys.functional_at(s).coeffs);
        jf["bound"] = sys.functional_at(s).bound;
        functionals[key_to_string(s.path)] = jf;
    }
    j["vectors"] = vectors;
    j["functionals"] = functionals;
    return j;
}

BiorthSystem system_from_json(const Json& j) {
    BiorthSystem sys;
    sys.tree = tree_from_json(j.at("tree"));
    sys.delta = j.at("delta").get<double>();
    sys.seed = j.at("seed").get<std::uint64_t>();
    sys.level_tag = j.at("level_tag").get<int>();
    sys.space = space_from_json(j.at("space"));
    sys.dual_path_bound = j.at("dual_path_bound").get<double>();
    for (const auto& jn : j.at("nodes")) sys.nodes.push_back(node_from_json(jn));
    for (const TreeNode& s : sys.nodes) {
        std::string k = key_to_string(s.path);
        sys.vectors[s] = vector_from_json(j.at("vectors").at(k));
        LinearFunctional f;
        f.coeffs = vector_from_json(j.at("functionals").at(k).at("entries"));
        f.bound = j.at("functionals").at(k).at("bound").get<double>();
        sys.functionals[s] = f;
    }
    return sys;
}

Json leveled_to_json(const LeveledSystems& ls) {
    Json j;
    j["kind"] = ls.kind == LevelKind::Gluing ? "gluing" : "segmented";
    j["K"] = ls.K;
    j["branching"] = ls.branching;
    j["max_level"] = ls.max_level;
    j["schedule"] = ls.schedule;
    j["seed"] = ls.seed;
    j["depth_cap"] = ls.depth_cap;
    Json levels = Json::array();
    for (const auto& level : ls.levels) levels.push_back(system_to_json(level));
    j["levels"] = levels;
    return j;
}

LeveledSystems leveled_from_json(const Json& j) {
    LeveledSystems ls;
    ls.kind = j.at("kind").get<std::string>() == "segmented" ? LevelKind::Segmented
                                                             : LevelKind::Gluing;
    ls.K = j.at("K").get<int>();
    ls.branching = j.at("branching").get<int>();
    ls.max_level = j.at("max_level").get<int>();
    ls.schedule = j.at("schedule").get<std::vector<double>>();
    ls.seed = j.at("seed").get<std::uint64_t>();
    ls.depth_cap = j.at("depth_cap").get<int>();
    for (const auto& jl : j.at("levels")) ls.levels.push_back(system_from_json(jl));
    return ls;
}

}  // namespace treelab
