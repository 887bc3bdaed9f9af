#include "treelab/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "treelab/errors.hpp"
#include "treelab/rng.hpp"

namespace treelab {

const Vector& EmbeddingMap::at(const TreeNode& s) const {
    auto it = image.find(s);
    if (it == image.end()) throw ConfigError("unknown node: " + node_to_string(s));
    return it->second;
}

EmbeddingMap embed_l1(const BiorthSystem& sys) {
    EmbeddingMap map;
    map.nodes = sys.nodes;
    map.target = sys.space;
    map.provenance.construction = "l1";
    map.provenance.params["tree"] = tree_to_json(sys.tree);
    map.provenance.params["delta"] = sys.delta;
    map.provenance.params["seed"] = sys.seed;
    for (const TreeNode& s : map.nodes) {
        if (s.is_root()) {
            map.image[s] = Vector{};
            continue;
        }
        Vector v = map.image.at(s.predecessor());
        v += sys.vector_at(s);
        map.image[s] = std::move(v);
    }
    return map;
}

EmbeddingMap embed_dual(const BiorthSystem& sys) {
    EmbeddingMap map;
    map.nodes = sys.nodes;
    map.target = LpSpace{kInfinityP};
    map.provenance.construction = "dual";
    map.provenance.params["tree"] = tree_to_json(sys.tree);
    map.provenance.params["delta"] = sys.delta;
    map.provenance.params["seed"] = sys.seed;
    std::map<TreeNode, Vector> path_sums;  // y*_s = sum_{t <= s} x*_t
    for (const TreeNode& s : map.nodes) {
        Vector y = s.is_root() ? Vector{} : path_sums.at(s.predecessor());
        y += sys.functional_at(s).coeffs;
        path_sums[s] = y;
        Vector g = s.is_root() ? Vector{} : map.image.at(s.predecessor());
        g += y;
        map.image[s] = std::move(g);
    }
    return map;
}

int gluing_window(int length) {
    if (length < 1) throw ConfigError("gluing window needs length >= 1");
    int k = 0;
    while ((2 << k) <= length) ++k;
    return k;
}

double gluing_lambda(int length) {
    int k = gluing_window(length);
    return static_cast<double>((2 << k) - length) / static_cast<double>(1 << k);
}

namespace {

const BiorthSystem& glued_level(const LeveledSystems& ls, int i, const TreeNode& s) {
    if (i > ls.max_level)
        throw ConfigError("depth exceeding levels: need system level " + std::to_string(i));
    const BiorthSystem& sys = ls.levels[static_cast<std::size_t>(i)];
    if (!sys.vectors.count(s))
        throw ConfigError("depth exceeding levels: node " + node_to_string(s) +
                          " missing from level " + std::to_string(i));
    return sys;
}

// Partial sums P_i(s) = sum_{root < t <= s} x_{i,t} (and its y* analogue) for
// all nodes of T_depth that level i covers.
std::map<TreeNode, Vector> level_partial_sums(const LeveledSystems& ls, int i,
                                              const std::vector<TreeNode>& nodes, bool dual) {
    std::map<TreeNode, Vector> sums;
    std::map<TreeNode, Vector> ystar;
    const BiorthSystem& sys = ls.levels[static_cast<std::size_t>(i)];
    for (const TreeNode& s : nodes) {
        if (!sys.vectors.count(s)) continue;
        if (s.is_root()) {
            sums[s] = Vector{};
            if (dual) ystar[s] = sys.functional_at(s).coeffs;
            continue;
        }
        const TreeNode pred = s.predecessor();
        Vector v = sums.at(pred);
        if (dual) {
            Vector y = ystar.at(pred);
            y += sys.functional_at(s).coeffs;
            v += y;
            ystar[s] = std::move(y);
        } else {
            v += sys.vector_at(s);
        }
        sums[s] = std::move(v);
    }
    return sums;
}

EmbeddingMap embed_glued_impl(const LeveledSystems& ls, int depth, bool dual) {
    if (ls.kind != LevelKind::Gluing) throw ConfigError("gluing construction needs gluing systems");
    if (depth < 1) throw ConfigError("depth must be >= 1");
    HyperbolicTree tree = make_integer_tree(depth, ls.branching);
    EmbeddingMap map;
    map.nodes = enumerate_nodes(tree);
    map.target = dual ? SpaceModel(LpSpace{kInfinityP}) : SpaceModel(LpSpace{1.0});
    map.provenance.construction = dual ? "glued-dual" : "glued";
    map.provenance.params["depth"] = depth;
    map.provenance.params["branching"] = ls.branching;
    map.provenance.params["schedule"] = ls.schedule;
    map.provenance.params["seed"] = ls.seed;

    // Which system levels this depth touches: F uses levels k+1 and, when
    // lambda < 1, k+2 for the window of each occupied length.
    std::set<int> needed;
    for (int len = 1; len <= depth; ++len) {
        int k = gluing_window(len);
        needed.insert(k + 1);
        if (gluing_lambda(len) < 1.0) needed.insert(k + 2);
    }
    std::map<int, std::map<TreeNode, Vector>> partial;
    for (int level : needed) {
        if (level > ls.max_level)
            throw ConfigError("depth exceeding levels: need system level " +
                              std::to_string(level));
        partial[level] = level_partial_sums(ls, level, map.nodes, dual);
    }

    for (const TreeNode& s : map.nodes) {
        if (s.is_root()) {
            map.image[s] = Vector{};
            continue;
        }
        int k = gluing_window(s.length());
        double lambda = gluing_lambda(s.length());
        (void)glued_level(ls, k + 1, s);
        Vector v = partial.at(k + 1).at(s);
        v *= lambda;
        if (lambda < 1.0) {
            (void)glued_level(ls, k + 2, s);
            axpy(v, 1.0 - lambda, partial.at(k + 2).at(s));
        }
        map.image[s] = std::move(v);
    }
    return map;
}

}  // namespace

EmbeddingMap embed_glued(const LeveledSystems& ls, int depth) {
    return embed_glued_impl(ls, depth, false);
}

EmbeddingMap embed_glued_dual(const LeveledSystems& ls, int depth) {
    return embed_glued_impl(ls, depth, true);
}

int segment_index(int len, int K) {
    if (len == 0) return -1;
    int n = 0;
    while (segment_partial_sum(K, n) < static_cast<std::uint64_t>(len)) ++n;
    return n;
}

namespace {

// Level-j node carrying segment w of a node whose N_{j-1}-prefix has branch
// index r: the path (r) ^ w. Level 0 carries the segment directly.
TreeNode level_node(int j, std::uint64_t r, const std::vector<int>& segment) {
    std::vector<int> p;
    if (j > 0) {
        p.reserve(segment.size() + 1);
        p.push_back(static_cast<int>(r));
    }
    p.insert(p.end(), segment.begin(), segment.end());
    return TreeNode(std::move(p));
}

struct SegmentedTerms {
    // (level, node) pairs whose y approximants sum to G(s), in path order.
    std::vector<std::pair<int, TreeNode>> terms;
};

SegmentedTerms segmented_terms(const TreeNode& s, int K, int branching) {
    SegmentedTerms out;
    if (s.is_root()) return out;
    std::vector<TreeNode> segs = segment_decompose(s, K);
    std::size_t pos = 0;
    std::uint64_t r = 0;
    for (std::size_t j = 0; j < segs.size(); ++j) {
        const std::vector<int>& seg = segs[j].path;
        if (j == 0) {
            // root < t <= s_0 with |s_0| = 1: the single node (s_0).
            out.terms.emplace_back(0, TreeNode(seg));
        } else {
            // t from (r_{j-1}) to (r_{j-1}) ^ s_j inclusive.
            for (std::size_t len = 0; len <= seg.size(); ++len)
                out.terms.emplace_back(
                    static_cast<int>(j),
                    level_node(static_cast<int>(j), r,
                               std::vector<int>(seg.begin(), seg.begin() + len)));
        }
        pos += seg.size();
        if (j + 1 < segs.size()) {
            HyperbolicTree prefix_tree =
                make_integer_tree(static_cast<int>(pos), branching);
            r = branch_index(prefix_tree, s.restrict_to(static_cast<int>(pos)));
        }
    }
    return out;
}

}  // namespace

EmbeddingMap embed_segmented(const LeveledSystems& ls, int depth, const std::vector<double>& eta) {
    if (ls.kind != LevelKind::Segmented)
        throw ConfigError("segmented construction needs segmented systems");
    if (depth < 1) throw ConfigError("depth must be >= 1");
    int K = ls.K;
    int needed_level = segment_index(depth, K);
    if (needed_level > ls.max_level)
        throw ConfigError("depth exceeding levels: need segmented level " +
                          std::to_string(needed_level));

    std::vector<double> eta_schedule = eta.empty() ? ls.schedule : eta;
    if (static_cast<int>(eta_schedule.size()) < needed_level + 1)
        throw ConfigError("eta schedule shorter than needed levels");
    for (std::size_t i = 0; i < eta_schedule.size() && i < ls.schedule.size(); ++i) {
        if (eta_schedule[i] < 0.0 || eta_schedule[i] > ls.schedule[i])
            throw ConfigError("eta_" + std::to_string(i) +
                              " must lie in [0, delta_" + std::to_string(i) + "]");
    }

    HyperbolicTree tree = make_integer_tree(depth, ls.branching);
    EmbeddingMap map;
    map.nodes = enumerate_nodes(tree);
    map.target = LpSpace{kInfinityP};
    map.provenance.construction = "segmented";
    map.provenance.params["depth"] = depth;
    map.provenance.params["branching"] = ls.branching;
    map.provenance.params["K"] = K;
    map.provenance.params["schedule"] = ls.schedule;
    map.provenance.params["eta"] = eta_schedule;
    map.provenance.params["seed"] = ls.seed;

    // y_{t,j}: the path sum of level-j functionals at t, plus a seeded
    // perturbation within the eta_j tolerance (realizes the weak*
    // approximation step; |<y** - y, x*>| <= eta_j <= delta_j).
    std::map<std::pair<int, TreeNode>, Vector> y_cache;
    auto y_approximant = [&](int j, const TreeNode& t) -> const Vector& {
        auto key = std::make_pair(j, t);
        auto it = y_cache.find(key);
        if (it != y_cache.end()) return it->second;
        const BiorthSystem& sys = ls.levels[static_cast<std::size_t>(j)];
        Vector y;
        if (!t.is_root() && y_cache.count({j, t.predecessor()})) {
            y = y_cache.at({j, t.predecessor()});
        } else {
            for (int k = 0; k < t.length(); ++k) y += sys.functional_at(t.restrict_to(k)).coeffs;
        }
        // The incremental path above may carry a predecessor's perturbation;
        // recompute the exact path sum instead when perturbing.
        double tol = eta_schedule[static_cast<std::size_t>(j)];
        if (tol > 0.0) {
            y = Vector{};
            for (int k = 0; k <= t.length(); ++k) y += sys.functional_at(t.restrict_to(k)).coeffs;
            Pcg32 rng(hash_ints(mix_seed(ls.seed, 0xe7a + static_cast<std::uint64_t>(j)), t.path));
            for (int e = 0; e < 4; ++e) {
                std::uint32_t lvl = rng.next_below(static_cast<std::uint32_t>(ls.max_level + 1));
                const auto& pool = ls.levels[lvl].nodes;
                if (pool.empty()) continue;
                const TreeNode& target =
                    pool[rng.next_below(static_cast<std::uint32_t>(pool.size()))];
                y.add(level_key(static_cast<int>(lvl), target), tol * 0.5 * rng.next_signed());
            }
        } else {
            y += sys.functional_at(t).coeffs;
        }
        return y_cache.emplace(std::move(key), std::move(y)).first->second;
    };

    for (const TreeNode& s : map.nodes) {
        if (s.is_root()) {
            map.image[s] = Vector{};
            continue;
        }
        // Incremental over the predecessor: one new approximant inside a
        // segment, two when a new segment opens (its branch-prefix term and
        // its first step).
        SegmentedTerms cur = segmented_terms(s, K, ls.branching);
        SegmentedTerms prev = segmented_terms(s.predecessor(), K, ls.branching);
        Vector g = map.image.at(s.predecessor());
        for (std::size_t i = prev.terms.size(); i < cur.terms.size(); ++i) {
            const auto& [j, t] = cur.terms[i];
            const BiorthSystem& sys = ls.levels[static_cast<std::size_t>(j)];
            if (!sys.functionals.count(t))
                throw CapacityError("branch enumeration exhausted at level " + std::to_string(j) +
                                    " node " + node_to_string(t));
            g += y_approximant(j, t);
        }
        map.image[s] = std::move(g);
    }
    return map;
}

SegPairClass classify_segmented_pair(const TreeNode& s_in, const TreeNode& s2_in, int K) {
    const TreeNode& s = s_in.length() >= s2_in.length() ? s_in : s2_in;
    const TreeNode& s2 = s_in.length() >= s2_in.length() ? s2_in : s_in;
    SegPairClass out;
    TreeNode u = gca(s, s2);
    out.n = segment_index(s.length(), K);
    out.m = segment_index(s2.length(), K);
    out.p = segment_index(u.length(), K);
    out.comparable = is_ancestor(s2, s);
    if (out.n >= out.m + 2) {
        out.c = SegCase::A;
    } else if (out.n == out.m + 1) {
        out.c = out.p == out.m ? SegCase::B : SegCase::C;
    } else {
        if (out.p == out.n)
            out.c = SegCase::D;
        else if (out.p == out.n - 1)
            out.c = SegCase::F;
        else
            out.c = SegCase::E;
    }

    // Subcases compare the first branches containing the diverging successors
    // (cases b, f) or the diverging prefixes (case c); with lexicographic
    // branch enumeration this is a lexicographic comparison.
    if (out.c == SegCase::B || out.c == SegCase::F) {
        int boundary = out.n >= 1
                           ? static_cast<int>(segment_partial_sum(K, out.n - 2 >= 0 ? out.n - 2 : -1))
                           : 0;
        // Segment n-1 spans (N_{n-2}, N_{n-1}]; the diverging successors live
        // there only if the common ancestor ends inside it.
        int seg_hi = out.n >= 1 ? static_cast<int>(segment_partial_sum(K, out.n - 1)) : 1;
        if (out.n >= 1 && u.length() >= boundary && u.length() < seg_hi &&
            s2.length() > u.length() && s.length() > u.length()) {
            int v_next = s.path[u.length()];
            int w_next = s2.path[u.length()];
            out.sub = v_next < w_next ? SegSubcase::VFirst : SegSubcase::WFirst;
        } else {
            out.sub = SegSubcase::Degenerate;
        }
    } else if (out.c == SegCase::C) {
        if (out.n >= 2) {
            int prefix_len = static_cast<int>(segment_partial_sum(K, out.n - 2));
            if (s.length() >= prefix_len && s2.length() >= prefix_len) {
                TreeNode a = s.restrict_to(prefix_len);
                TreeNode b = s2.restrict_to(prefix_len);
                out.sub = a.path < b.path ? SegSubcase::VFirst : SegSubcase::WFirst;
            } else {
                out.sub = SegSubcase::Degenerate;
            }
        } else {
            out.sub = SegSubcase::Degenerate;
        }
    }
    return out;
}

std::optional<double> segmented_case_constant(SegCase c, SegSubcase sub) {
    switch (c) {
        case SegCase::B:
            return sub == SegSubcase::WFirst ? 1308.0 : 208.0;
        case SegCase::C:
            if (sub == SegSubcase::VFirst) return 520.0;
            return std::nullopt;
        default:
            return std::nullopt;
    }
}

SegCaseReport segmented_case_scan(const EmbeddingMap& map, int K) {
    SegCaseReport r;
    r.min_ratio.fill(std::numeric_limits<double>::infinity());
    r.pair_count.fill(0);
    for (std::size_t i = 0; i < map.nodes.size(); ++i) {
        for (std::size_t j = i + 1; j < map.nodes.size(); ++j) {
            const TreeNode& s = map.nodes[i];
            const TreeNode& t = map.nodes[j];
            SegPairClass cls = classify_segmented_pair(s, t, K);
            Vector diff = map.at(s) - map.at(t);
            double ratio = norm(diff, map.target) / static_cast<double>(rho(s, t));
            auto idx = static_cast<std::size_t>(cls.c);
            r.min_ratio[idx] = std::min(r.min_ratio[idx], ratio);
            ++r.pair_count[idx];
        }
    }
    r.alpha = r.min_ratio[static_cast<std::size_t>(SegCase::B)];
    if (std::isfinite(r.alpha) && r.alpha > 0.0) {
        r.M = 6.0 / r.alpha;
        r.case_f_constant = 104.0 * (r.M + 1.0);
    }
    return r;
}

Json segmented_case_report_to_json(const SegCaseReport& r) {
    static const char* names[6] = {"a", "b", "c", "d", "e", "f"};
    Json j;
    Json cases = Json::object();
    for (std::size_t i = 0; i < 6; ++i) {
        Json c;
        c["pairs"] = r.pair_count[i];
        c["min_ratio"] = std::isfinite(r.min_ratio[i]) ? Json(r.min_ratio[i]) : Json();
        cases[names[i]] = c;
    }
    j["cases"] = cases;
    j["alpha"] = r.alpha;
    j["M"] = r.M;
    j["case_f_constant"] = r.case_f_constant;
    j["mode"] = "exhaustive";
    j["seed"] = 0;
    j["tolerance"] = 1e-12;
    return j;
}

namespace {

// Deeper-by-distance node first; ties broken by length then lexicographically.
std::pair<TreeNode, TreeNode> orient_pair(const TreeNode& s, const TreeNode& s2) {
    TreeNode u = gca(s, s2);
    int d = s.length() - u.length();
    int d2 = s2.length() - u.length();
    if (d2 > d || (d2 == d && s2.path > s.path)) return {s2, s};
    return {s, s2};
}

}  // namespace

double l1_witness_pairing(const BiorthSystem& sys, const EmbeddingMap& map, const TreeNode& s,
                          const TreeNode& s2) {
    auto [deep, other] = orient_pair(s, s2);
    LinearFunctional f = path_sum_functional(sys, deep);
    Vector diff = map.at(deep) - map.at(other);
    return pair(f, diff);
}

double dual_witness_pairing(const BiorthSystem& sys, const EmbeddingMap& map, const TreeNode& s,
                            const TreeNode& s2) {
    auto [deep, other] = orient_pair(s, s2);
    TreeNode u = gca(deep, other);
    TreeNode v = deep.restrict_to(u.length() + 1);
    Vector diff = map.at(deep) - map.at(other);
    return dot(sys.vector_at(v), diff);
}

double glued_witness_pairing(const LeveledSystems& ls, const EmbeddingMap& map, const TreeNode& s,
                             const TreeNode& s2) {
    auto [deep, other] = orient_pair(s, s2);
    if (deep.length() == 0) return 0.0;
    TreeNode u = gca(deep, other);
    int l = gluing_window(deep.length());
    Vector f;
    for (int k = u.length() + 1; k <= deep.length(); ++k) {
        TreeNode t = deep.restrict_to(k);
        f += ls.levels[static_cast<std::size_t>(l + 1)].functional_at(t).coeffs;
        if (l + 2 <= ls.max_level &&
            ls.levels[static_cast<std::size_t>(l + 2)].functionals.count(t))
            f += ls.levels[static_cast<std::size_t>(l + 2)].functional_at(t).coeffs;
    }
    Vector diff = map.at(deep) - map.at(other);
    return dot(f, diff);
}

double glued_dual_witness_pairing(const LeveledSystems& ls, const EmbeddingMap& map,
                                  const TreeNode& s, const TreeNode& s2) {
    auto [deep, other] = orient_pair(s, s2);
    if (deep.length() == 0) return 0.0;
    TreeNode u = gca(deep, other);
    TreeNode v = deep.restrict_to(u.length() + 1);
    int l = gluing_window(deep.length());
    Vector x = ls.levels[static_cast<std::size_t>(l + 1)].vector_at(v);
    if (l + 2 <= ls.max_level && ls.levels[static_cast<std::size_t>(l + 2)].vectors.count(v))
        x += ls.levels[static_cast<std::size_t>(l + 2)].vector_at(v);
    Vector diff = map.at(deep) - map.at(other);
    return dot(x, diff);
}

std::optional<double> segmented_comparable_witness(const LeveledSystems& ls,
                                                   const EmbeddingMap& map, const TreeNode& s_in,
                                                   const TreeNode& s2_in) {
    const TreeNode& s = s_in.length() >= s2_in.length() ? s_in : s2_in;
    const TreeNode& s2 = s_in.length() >= s2_in.length() ? s2_in : s_in;
    if (!is_ancestor(s2, s) || s == s2) return std::nullopt;
    int K = ls.K;
    int n = segment_index(s.length(), K);
    std::uint64_t prefix_len = n >= 1 ? segment_partial_sum(K, n - 1) : 0;
    // All differing steps must lie in segment window n.
    if (static_cast<std::uint64_t>(s2.length()) < prefix_len) return std::nullopt;

    TreeNode v;
    if (n == 0) {
        v = s;  // level-0 node is the segment itself
    } else {
        HyperbolicTree prefix_tree = make_integer_tree(static_cast<int>(prefix_len), ls.branching);
        std::uint64_t r = branch_index(prefix_tree, s.restrict_to(static_cast<int>(prefix_len)));
        std::vector<int> p{static_cast<int>(r)};
        for (int i = static_cast<int>(prefix_len); i <= s2.length(); ++i)
            p.push_back(s.path[static_cast<std::size_t>(i)]);
        v = TreeNode(std::move(p));
    }
    const BiorthSystem& sys = ls.levels[static_cast<std::size_t>(n)];
    if (!sys.vectors.count(v)) return std::nullopt;
    Vector diff = map.at(s) - map.at(s2);
    return dot(sys.vector_at(v), diff);
}

void dump_embedding(const EmbeddingMap& map, const std::filesystem::path& csv_path,
                    const std::filesystem::path& sidecar_path) {
    std::ostringstream csv;
    for (const TreeNode& s : map.nodes) {
        csv << node_to_string(s);
        for (const auto& [k, x] : map.at(s).entries) {
            csv << ',';
            for (std::size_t i = 0; i < k.size(); ++i) {
                if (i) csv << '/';
                csv << k[i];
            }
            csv << ',' << format_double(x);
        }
        csv << '\n';
    }
    write_text_file(csv_path, csv.str());

    Json side;
    side["construction"] = map.provenance.construction;
    side["params"] = map.provenance.params;
    side["target"] = space_to_json(map.target);
    Json nodes = Json::array();
    for (const TreeNode& s : map.nodes) nodes.push_back(node_to_json(s));
    side["nodes"] = nodes;
    write_json_file(sidecar_path, side);
}

namespace {

std::vector<int> parse_slash_ints(const std::string& cell) {
    std::vector<int> out;
    if (cell.empty()) return out;
    std::size_t pos = 0;
    while (pos <= cell.size()) {
        std::size_t next = cell.find('/', pos);
        if (next == std::string::npos) next = cell.size();
        out.push_back(std::stoi(cell.substr(pos, next - pos)));
        pos = next + 1;
    }
    return out;
}

}  // namespace

EmbeddingMap load_embedding(const std::filesystem::path& csv_path,
                            const std::filesystem::path& sidecar_path) {
    Json side = read_json_file(sidecar_path);
    EmbeddingMap map;
    map.provenance.construction = side.at("construction").get<std::string>();
    map.provenance.params = side.at("params");
    map.target = space_from_json(side.at("target"));
    for (const auto& jn : side.at("nodes")) map.nodes.push_back(node_from_json(jn));

    std::string csv = read_text_file(csv_path);
    std::size_t line_start = 0, row = 0;
    while (line_start < csv.size()) {
        std::size_t line_end = csv.find('\n', line_start);
        if (line_end == std::string::npos) line_end = csv.size();
        std::string line = csv.substr(line_start, line_end - line_start);
        line_start = line_end + 1;
        if (line.empty() && line_start >= csv.size()) break;
        std::vector<std::string> cells;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            std::size_t next = line.find(',', pos);
            if (next == std::string::npos) next = line.size();
            cells.push_back(line.substr(pos, next - pos));
            pos = next + 1;
        }
        if (row >= map.nodes.size()) throw ConfigError("embedding CSV has more rows than nodes");
        TreeNode s(parse_slash_ints(cells[0]));
        if (s != map.nodes[row]) throw ConfigError("embedding CSV row order mismatch");
        Vector v;
        for (std::size_t i = 1; i + 1 < cells.size(); i += 2)
            v.set(parse_slash_ints(cells[i]), std::stod(cells[i + 1]));
        map.image[s] = std::move(v);
        ++row;
    }
    if (row != map.nodes.size()) throw ConfigError("embedding CSV has fewer rows than nodes");
    return map;
}

}  // namespace treelab
