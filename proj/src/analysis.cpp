#include "treelab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>
#include <thread>

#include "treelab/errors.hpp"
#include "treelab/rng.hpp"

namespace treelab {

MetricMap metric_map_from_embedding(const EmbeddingMap& map) {
    MetricMap m;
    m.space = map.target;
    m.images.reserve(map.nodes.size());
    auto nodes = std::make_shared<std::vector<TreeNode>>(map.nodes);
    for (const TreeNode& s : map.nodes) {
        m.labels.push_back(node_to_string(s));
        m.images.push_back(map.at(s));
    }
    m.dist = [nodes](std::size_t i, std::size_t j) {
        return static_cast<double>(rho((*nodes)[i], (*nodes)[j]));
    };
    return m;
}

namespace {

struct PairExtremes {
    double lip = 0.0;
    double colip = 0.0;
    std::pair<std::size_t, std::size_t> lip_witness{0, 0};
    std::pair<std::size_t, std::size_t> colip_witness{0, 0};
    bool degenerate = false;  // zero image difference on distinct points
    std::pair<std::size_t, std::size_t> degenerate_witness{0, 0};

    void absorb(const PairExtremes& other) {
        if (other.degenerate && !degenerate) {
            degenerate = true;
            degenerate_witness = other.degenerate_witness;
        }
        if (other.lip > lip) {
            lip = other.lip;
            lip_witness = other.lip_witness;
        }
        if (other.colip > colip) {
            colip = other.colip;
            colip_witness = other.colip_witness;
        }
    }
};

void scan_pair(const MetricMap& map, std::size_t i, std::size_t j, PairExtremes& acc) {
    double d = map.dist(i, j);
    if (d <= 0.0) throw ConfigError("metric distance must be positive on distinct points");
    Vector diff = map.images[i] - map.images[j];
    double nd = norm(diff, map.space);
    if (nd == 0.0) {
        if (!acc.degenerate) {
            acc.degenerate = true;
            acc.degenerate_witness = {i, j};
        }
        return;
    }
    double ratio = nd / d;
    if (ratio > acc.lip) {
        acc.lip = ratio;
        acc.lip_witness = {i, j};
    }
    double inv = d / nd;
    if (inv > acc.colip) {
        acc.colip = inv;
        acc.colip_witness = {i, j};
    }
}

}  // namespace

DistortionReport distortion(const MetricMap& map, const ScanConfig& config) {
    std::size_t n = map.size();
    if (n < 2) throw ConfigError("distortion needs at least two points");
    if (config.pair_budget == 0) throw ConfigError("pair budget must be positive");

    // Injectivity first: sort the images and look for equal neighbours. This
    // is exact even when the pair scan below has to sample.
    {
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return map.images[a].entries < map.images[b].entries;
        });
        for (std::size_t i = 1; i < n; ++i)
            if (map.images[order[i - 1]] == map.images[order[i]])
                throw InvariantError("map is not injective: equal images at points " +
                                     map.labels[order[i - 1]] + " and " + map.labels[order[i]]);
    }

    DistortionReport report;
    report.seed = config.seed;
    std::uint64_t pairs = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    report.exhaustive = pairs <= config.pair_budget;
    PairExtremes acc;

    if (report.exhaustive) {
        report.pair_count = pairs;
        int workers = std::max(1, config.threads);
        if (workers == 1 || pairs < 4096) {
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j) scan_pair(map, i, j, acc);
        } else {
            // Deterministic: per-chunk extrema merged in fixed chunk order.
            std::vector<PairExtremes> parts(static_cast<std::size_t>(workers));
            std::vector<std::thread> threads;
            std::vector<std::string> errors(static_cast<std::size_t>(workers));
            for (int w = 0; w < workers; ++w) {
                threads.emplace_back([&, w]() {
                    try {
                        for (std::size_t i = static_cast<std::size_t>(w); i < n;
                             i += static_cast<std::size_t>(workers))
                            for (std::size_t j = i + 1; j < n; ++j)
                                scan_pair(map, i, j, parts[static_cast<std::size_t>(w)]);
                    } catch (const std::exception& e) {
                        errors[static_cast<std::size_t>(w)] = e.what();
                    }
                });
            }
            for (auto& t : threads) t.join();
            for (const auto& e : errors)
                if (!e.empty()) throw ConfigError(e);
            for (const auto& part : parts) acc.absorb(part);
        }
    } else {
        report.sample_size = config.sample_size;
        report.pair_count = config.sample_size;
        Pcg32 rng(mix_seed(config.seed, 0xd157));
        for (std::uint64_t t = 0; t < config.sample_size; ++t) {
            std::size_t i = rng.next_below(static_cast<std::uint32_t>(n));
            std::size_t j = rng.next_below(static_cast<std::uint32_t>(n));
            if (i == j) continue;
            scan_pair(map, std::min(i, j), std::max(i, j), acc);
        }
    }

    if (acc.degenerate)
        throw InvariantError("map is not injective: equal images at points " +
                             map.labels[acc.degenerate_witness.first] + " and " +
                             map.labels[acc.degenerate_witness.second]);
    report.lip = acc.lip;
    report.colip_inverse = acc.colip;
    report.distortion = acc.lip * acc.colip;
    report.lip_witness = acc.lip_witness;
    report.colip_witness = acc.colip_witness;
    return report;
}

Json distortion_report_to_json(const DistortionReport& r, const MetricMap& map) {
    Json j;
    j["lip"] = r.lip;
    j["colip_inverse"] = r.colip_inverse;
    j["distortion"] = r.distortion;
    j["mode"] = r.exhaustive ? "exhaustive" : "sampled";
    j["pair_count"] = r.pair_count;
    j["sample_size"] = r.sample_size;
    j["seed"] = r.seed;
    j["tolerance"] = r.tolerance;
    j["lip_witness"] = Json::array({map.labels[r.lip_witness.first],
                                    map.labels[r.lip_witness.second]});
    j["colip_witness"] = Json::array({map.labels[r.colip_witness.first],
                                      map.labels[r.colip_witness.second]});
    return j;
}

CoarseModuliReport coarse_moduli(const MetricMap& map, const std::vector<double>& t_grid,
                                 const std::vector<double>& theta_grid) {
    if (t_grid.empty() || theta_grid.empty()) throw ConfigError("empty grid");
    std::size_t n = map.size();
    if (n < 2) throw ConfigError("coarse moduli need at least two points");

    // Realized (distance, image distance) pairs collapsed to unique distances
    // with prefix maxima, so omega_f is an exact step function.
    std::map<double, double> max_at_distance;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            Vector diff = map.images[i] - map.images[j];
            double nd = norm(diff, map.space);
            auto [it, inserted] = max_at_distance.emplace(map.dist(i, j), nd);
            if (!inserted) it->second = std::max(it->second, nd);
        }
    std::vector<double> dists, omega_steps;
    double running = 0.0;
    for (const auto& [d, nd] : max_at_distance) {
        running = std::max(running, nd);
        dists.push_back(d);
        omega_steps.push_back(running);
    }

    auto omega_at = [&](double t) {
        auto it = std::upper_bound(dists.begin(), dists.end(), t);
        if (it == dists.begin()) return 0.0;
        return omega_steps[static_cast<std::size_t>(it - dists.begin()) - 1];
    };

    CoarseModuliReport r;
    r.t_grid = t_grid;
    for (double t : t_grid) r.omega.push_back(omega_at(t));
    r.theta_grid = theta_grid;
    for (double theta : theta_grid) {
        if (theta <= 0.0) throw ConfigError("theta grid must be positive");
        // omega is a step function jumping at realized distances, so the sup
        // of omega(t)/t over t >= theta is attained at theta or at a realized
        // distance.
        double best = omega_at(theta) / theta;
        for (std::size_t i = 0; i < dists.size(); ++i)
            if (dists[i] >= theta) best = std::max(best, omega_steps[i] / dists[i]);
        r.l_theta.push_back(best);
    }
    r.l_infinity = *std::min_element(r.l_theta.begin(), r.l_theta.end());
    return r;
}

Json coarse_moduli_to_json(const CoarseModuliReport& r) {
    Json j;
    j["t_grid"] = r.t_grid;
    j["omega"] = r.omega;
    j["theta_grid"] = r.theta_grid;
    j["l_theta"] = r.l_theta;
    j["l_infinity"] = r.l_infinity;
    j["l_infinity_is_grid_min"] = r.l_infinity_is_grid_min;
    j["mode"] = "exhaustive";
    j["seed"] = 0;
    j["tolerance"] = 1e-12;
    return j;
}

double WTable::aggregate(int j, int k) const {
    double sum = 0.0;
    for (const auto& per_branch : norms)
        sum += per_branch[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(k)];
    return norms.empty() ? 0.0 : sum / static_cast<double>(norms.size());
}

namespace {

// The full tree behind an embedding's node list; errors when the list is not
// a full T_N^b enumeration.
HyperbolicTree infer_full_tree(const EmbeddingMap& u) {
    int depth = 0, branching = 0;
    for (const TreeNode& s : u.nodes) {
        depth = std::max(depth, s.length());
        for (int v : s.path) branching = std::max(branching, v);
    }
    branching = std::max(branching, 1);
    HyperbolicTree t = make_integer_tree(depth, branching);
    if (t.node_count() != u.nodes.size())
        throw ConfigError("filtration needs a full-branch tree map");
    return t;
}

}  // namespace

WTable filtration_decompose(const EmbeddingMap& u, int a, ProjectionMode mode) {
    if (a < 2) throw ConfigError("filtration base a must be >= 2");
    HyperbolicTree tree = infer_full_tree(u);
    if (!u.at(TreeNode{}).is_zero()) throw ConfigError("filtration requires u(root) = 0");
    const int N = tree.depth;
    if (N < 1) throw ConfigError("filtration needs depth >= 1");

    WTable w;
    w.depth = N;
    w.branching = tree.branching;
    w.a = a;
    w.mode = mode;
    // Columns k = 0..k_columns with a^{k_columns} > N, so the telescoping sum
    // reconstructs z_j in full for every j.
    int kc = 0;
    std::uint64_t pw = 1;
    while (pw <= static_cast<std::uint64_t>(N)) {
        pw *= static_cast<std::uint64_t>(a);
        ++kc;
    }
    w.k_columns = kc;

    auto all_branches = branches(tree);
    w.branch_count = all_branches.size();
    Grading grading = path_depth_grading();

    // z_j per level-j node (z depends only on the branch's first j entries).
    std::vector<std::map<TreeNode, Vector>> z_by_level(static_cast<std::size_t>(N) + 1);
    for (const TreeNode& s : u.nodes) {
        if (s.is_root()) continue;
        z_by_level[static_cast<std::size_t>(s.length())][s] =
            u.at(s) - u.at(s.predecessor());
    }

    // Average-mode projections: mean of z_j over level-j descendants, folded
    // down ancestor by ancestor.
    std::vector<std::vector<std::map<TreeNode, Vector>>> averaged;
    if (mode == ProjectionMode::Average) {
        averaged.resize(static_cast<std::size_t>(N) + 1);
        for (int j = 1; j <= N; ++j) {
            auto& per_level = averaged[static_cast<std::size_t>(j)];
            per_level.resize(static_cast<std::size_t>(j) + 1);
            per_level[static_cast<std::size_t>(j)] = z_by_level[static_cast<std::size_t>(j)];
            for (int k = j - 1; k >= 0; --k) {
                auto& down = per_level[static_cast<std::size_t>(k)];
                for (const auto& [node, vec] : per_level[static_cast<std::size_t>(k + 1)]) {
                    TreeNode parent = node.predecessor();
                    auto [it, inserted] = down.emplace(parent, Vector{});
                    axpy(it->second, 1.0 / tree.branching, vec);
                }
            }
        }
    }

    auto project = [&](const Vector& z, int j, int k, const TreeNode& branch_prefix) -> Vector {
        if (k < 0) return Vector{};
        if (k >= j) return z;
        if (mode == ProjectionMode::Truncate) return level_truncate(z, k, grading);
        return averaged[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)].at(
            branch_prefix.restrict_to(k));
    };

    w.norms.resize(all_branches.size());
    double recon_err = 0.0;
    for (std::size_t bi = 0; bi < all_branches.size(); ++bi) {
        const TreeNode& terminal = all_branches[bi].back();
        auto& rows = w.norms[bi];
        rows.resize(static_cast<std::size_t>(N));
        for (int j = 1; j <= N; ++j) {
            const Vector& z = z_by_level[static_cast<std::size_t>(j)].at(terminal.restrict_to(j));
            auto& row = rows[static_cast<std::size_t>(j - 1)];
            row.resize(static_cast<std::size_t>(w.k_columns) + 1);
            Vector reconstruction;
            for (int k = 0; k <= w.k_columns; ++k) {
                Vector wjk;
                if (k == 0) {
                    wjk = z - project(z, j, j - 1, terminal);
                } else {
                    std::int64_t lo = j, hi = j;
                    std::int64_t pk = 1;
                    for (int t = 0; t < k - 1; ++t) pk *= a;
                    lo -= pk * a;
                    hi -= pk;
                    wjk = project(z, j, static_cast<int>(hi), terminal) -
                          project(z, j, static_cast<int>(lo), terminal);
                }
                row[static_cast<std::size_t>(k)] = norm(wjk, u.target);
                reconstruction += wjk;
            }
            reconstruction -= z;
            recon_err = std::max(recon_err, norm(reconstruction, u.target));
        }
    }
    w.reconstruction_error = recon_err;

    // Midpoint window quantities ||F_r(sum_{j=r+1}^{r+s} z_j)||, reported.
    // E_r distributes over the z_j sum, which matters in average mode where
    // each z_j has its own folded table.
    for (int r = 0; r < N; ++r) {
        for (int s = 1; r + s <= N; ++s) {
            double sum = 0.0;
            for (const auto& branch : all_branches) {
                const TreeNode& terminal = branch.back();
                Vector v = u.at(terminal.restrict_to(r + s)) - u.at(terminal.restrict_to(r));
                for (int j = r + 1; j <= r + s; ++j) {
                    const Vector& zj =
                        z_by_level[static_cast<std::size_t>(j)].at(terminal.restrict_to(j));
                    v -= project(zj, j, r, terminal);
                }
                sum += norm(v, u.target);
            }
            w.windows.push_back(
                {r, s, sum / static_cast<double>(all_branches.size())});
        }
    }
    return w;
}

Json wtable_to_json(const WTable& w) {
    Json j;
    j["depth"] = w.depth;
    j["branching"] = w.branching;
    j["a"] = w.a;
    j["mode"] = w.mode == ProjectionMode::Truncate ? "truncate" : "average";
    j["k_columns"] = w.k_columns;
    j["branch_count"] = w.branch_count;
    j["reconstruction_error"] = w.reconstruction_error;
    Json agg = Json::array();
    for (int jj = 1; jj <= w.depth; ++jj) {
        Json row = Json::array();
        for (int k = 0; k <= w.k_columns; ++k) row.push_back(w.aggregate(jj, k));
        agg.push_back(row);
    }
    j["aggregate_norms"] = agg;
    Json windows = Json::array();
    for (const auto& win : w.windows) {
        Json jw;
        jw["r"] = win.r;
        jw["s"] = win.s;
        jw["norm"] = win.norm;
        windows.push_back(jw);
    }
    j["windows"] = windows;
    j["scan"] = "exhaustive";
    j["seed"] = 0;
    j["tolerance"] = 1e-12;
    return j;
}

std::string wtable_to_csv(const WTable& w) {
    std::string out = "branch,j,k,norm\n";
    for (std::size_t b = 0; b < w.norms.size(); ++b)
        for (std::size_t j = 0; j < w.norms[b].size(); ++j)
            for (std::size_t k = 0; k < w.norms[b][j].size(); ++k)
                out += std::to_string(b) + "," + std::to_string(j + 1) + "," + std::to_string(k) +
                       "," + format_double(w.norms[b][j][k]) + "\n";
    return out;
}

CountingReport counting_bounds(const WTable& w, double C, double p) {
    if (w.norms.empty() || w.depth < 1) throw ConfigError("empty w table");
    if (!(p > 1.0)) throw ConfigError("counting bounds need p > 1");
    CountingReport r;
    r.m = w.k_columns;
    double upper = 0.0;
    for (int j = 1; j <= w.depth; ++j)
        for (int k = 1; k <= w.k_columns; ++k) upper += w.aggregate(j, k);
    r.upper_measured = upper;
    r.upper_bound = C * std::pow(static_cast<double>(r.m), 1.0 / p) * w.depth;
    r.upper_holds = r.upper_measured <= r.upper_bound + 1e-9;
    r.lower_bound = static_cast<double>(w.depth) / 2.0;
    for (int k = 1; k <= w.k_columns; ++k) {
        double s = 0.0;
        for (int j = 1; j <= w.depth; ++j) s += w.aggregate(j, k);
        r.lower_measured.push_back(s);
    }
    r.caveat =
        "the coarse-Lipschitz normalization ||x1-x2||-1 <= ||f(x1)-f(x2)|| of the input map is "
        "not verified here; lower bounds are reported, not asserted";
    return r;
}

Json counting_report_to_json(const CountingReport& r) {
    Json j;
    j["upper_measured"] = r.upper_measured;
    j["upper_bound"] = r.upper_bound;
    j["upper_holds"] = r.upper_holds;
    j["lower_measured"] = r.lower_measured;
    j["lower_bound"] = r.lower_bound;
    j["m"] = r.m;
    j["caveat"] = r.caveat;
    j["mode"] = "exhaustive";
    j["seed"] = 0;
    j["tolerance"] = 1e-9;
    return j;
}

namespace {

long long min_integer_greater(double x) {
    if (!(x >= 0.0) || x > 9e15) throw CapacityError("certificate parameter out of range");
    double rounded = std::round(x);
    if (std::abs(x - rounded) <= 1e-9 * std::max(1.0, std::abs(x)))
        return static_cast<long long>(rounded) + 1;
    return static_cast<long long>(std::floor(x)) + 1;
}

}  // namespace

std::string pow_decimal(long long base, long long exp) {
    if (base < 1 || exp < 0) throw ConfigError("pow_decimal needs base >= 1, exp >= 0");
    // Base-1e9 limbs, least significant first.
    std::vector<std::uint64_t> limbs{1};
    double digits_estimate = static_cast<double>(exp) * std::log10(static_cast<double>(base));
    if (digits_estimate > 100000.0) throw CapacityError("certificate N too large to print exactly");
    for (long long e = 0; e < exp; ++e) {
        std::uint64_t carry = 0;
        for (auto& limb : limbs) {
            std::uint64_t cur = limb * static_cast<std::uint64_t>(base) + carry;
            limb = cur % 1000000000ULL;
            carry = cur / 1000000000ULL;
        }
        while (carry) {
            limbs.push_back(carry % 1000000000ULL);
            carry /= 1000000000ULL;
        }
    }
    std::string out = std::to_string(limbs.back());
    for (auto it = limbs.rbegin() + 1; it != limbs.rend(); ++it) {
        std::string part = std::to_string(*it);
        out += std::string(9 - part.size(), '0') + part;
    }
    return out;
}

Certificate certificate(double C, double p, std::optional<long long> a_override,
                        std::optional<long long> m_override) {
    if (!(C >= 1.0)) throw ConfigError("certificate needs C >= 1");
    bool p_inf = std::isinf(p);
    if (!p_inf && !(p > 1.0)) throw ConfigError("certificate needs p > 1");
    Certificate c;
    c.C = C;
    c.p = p;
    c.q = p_inf ? 1.0 : p / (p - 1.0);
    double threshold = std::pow(2.0 * C, c.q);
    c.a = a_override.value_or(min_integer_greater(threshold));
    c.m = m_override.value_or(min_integer_greater(threshold));
    if (c.a < 2 || c.m < 1) throw ConfigError("certificate needs a >= 2, m >= 1");
    c.N_decimal = pow_decimal(c.a, c.m + 1);
    c.N_approx = std::pow(static_cast<double>(c.a), static_cast<double>(c.m + 1));
    double m_pow = p_inf ? 1.0 : std::pow(static_cast<double>(c.m), 1.0 / p);
    c.upper = C * m_pow * c.N_approx;
    c.lower = static_cast<double>(c.m) * c.N_approx / 2.0;
    c.contradiction = static_cast<double>(c.m) > threshold;
    return c;
}

Json certificate_to_json(const Certificate& c) {
    Json j;
    j["C"] = c.C;
    j["p"] = std::isinf(c.p) ? Json("inf") : Json(c.p);
    j["q"] = c.q;
    j["a"] = c.a;
    j["m"] = c.m;
    j["N"] = c.N_decimal;
    j["N_approx"] = c.N_approx;
    j["upper"] = c.upper;
    j["lower"] = c.lower;
    j["contradiction"] = c.contradiction;
    j["mode"] = "exact";
    j["seed"] = 0;
    j["tolerance"] = 0.0;
    return j;
}

int hamming_metric(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw ConfigError("hamming metric needs equal-size subsets");
    for (std::size_t i = 1; i < a.size(); ++i)
        if (a[i] <= a[i - 1] || b[i] <= b[i - 1])
            throw ConfigError("hamming metric expects sorted subsets");
    int count = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) ++count;
    return count;
}

Vector james_sum(JamesModel model, const std::vector<int>& subset) {
    Vector v;
    if (model == JamesModel::L1Basis) {
        for (int n : subset) v.add(Key{n}, 1.0);
        return v;
    }
    // Summing basis: x_n = e_1 + ... + e_n, so coordinate i collects the
    // number of subset elements >= i.
    int top = 0;
    for (int n : subset) top = std::max(top, n);
    for (int i = 1; i <= top; ++i) {
        double count = 0.0;
        for (int n : subset)
            if (n >= i) count += 1.0;
        if (count > 0.0) v.set(Key{i}, count);
    }
    return v;
}

SpaceModel james_space(JamesModel model) {
    return model == JamesModel::L1Basis ? SpaceModel(LpSpace{1.0}) : SpaceModel(LpSpace{kInfinityP});
}

double james_separation(JamesModel model) {
    return model == JamesModel::L1Basis ? 2.0 : 1.0;
}

KrComparison james_kr_comparison(JamesModel model, double C, double p, int k) {
    if (k < 1) throw ConfigError("k must be >= 1");
    KrComparison r;
    r.theta = james_separation(model);
    r.lhs = r.theta * k - 1.0;
    r.kr_bound = 3.0 * (2.0 * C + 1.0) * std::pow(static_cast<double>(k), 1.0 / p);
    r.contradictory = r.lhs > r.kr_bound;
    return r;
}

namespace {

double sampled_diameter(const std::function<Vector(const std::vector<int>&)>& f,
                        const SpaceModel& space, const std::vector<int>& alphabet, int k,
                        Pcg32& rng, std::uint64_t& evaluations) {
    // Always include the (3.1)-ordered extreme pair (first k, last k), plus
    // seeded random k-subsets.
    std::vector<std::vector<int>> subsets;
    std::vector<int> sorted = alphabet;
    std::sort(sorted.begin(), sorted.end());
    subsets.emplace_back(sorted.begin(), sorted.begin() + k);
    subsets.emplace_back(sorted.end() - k, sorted.end());
    const int extra = 14;
    for (int t = 0; t < extra; ++t) {
        std::vector<int> pool = sorted;
        for (int i = 0; i < k; ++i) {
            std::uint32_t idx =
                i + rng.next_below(static_cast<std::uint32_t>(pool.size() - i));
            std::swap(pool[i], pool[idx]);
        }
        std::vector<int> pick(pool.begin(), pool.begin() + k);
        std::sort(pick.begin(), pick.end());
        subsets.push_back(std::move(pick));
    }
    std::vector<Vector> images;
    images.reserve(subsets.size());
    for (const auto& s : subsets) {
        images.push_back(f(s));
        ++evaluations;
    }
    double diam = 0.0;
    for (std::size_t i = 0; i < images.size(); ++i)
        for (std::size_t j = i + 1; j < images.size(); ++j)
            diam = std::max(diam, norm(images[i] - images[j], space));
    return diam;
}

}  // namespace

ConcentrationResult concentration_search(
    const std::function<Vector(const std::vector<int>&)>& f, const SpaceModel& space, int n,
    int k, double C, double p, std::uint64_t budget, std::uint64_t seed) {
    if (n < 2 * k) throw ConfigError("concentration search needs n >= 2k");
    if (k < 1) throw ConfigError("k must be >= 1");
    ConcentrationResult result;
    result.seed = seed;
    result.kr_bound = 3.0 * (2.0 * C + 1.0) * std::pow(static_cast<double>(k), 1.0 / p);
    Pcg32 rng(mix_seed(seed, 0xc09c));

    std::vector<int> best;
    double best_diam = std::numeric_limits<double>::infinity();
    std::uint64_t evals = 0;
    int restarts = 0;
    while (evals < budget && restarts < 64) {
        ++restarts;
        // Random alphabet of size 2k.
        std::vector<int> pool(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i + 1;
        for (int i = 0; i < 2 * k; ++i) {
            std::uint32_t idx = i + rng.next_below(static_cast<std::uint32_t>(n - i));
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(idx)]);
        }
        std::vector<int> alphabet(pool.begin(), pool.begin() + 2 * k);
        std::sort(alphabet.begin(), alphabet.end());
        double diam = sampled_diameter(f, space, alphabet, k, rng, evals);

        // Greedy element swaps while they improve the sampled diameter.
        bool improved = true;
        while (improved && evals < budget) {
            improved = false;
            for (int pos = 0; pos < 2 * k && evals < budget; ++pos) {
                int replacement = 1 + static_cast<int>(rng.next_below(static_cast<std::uint32_t>(n)));
                if (std::find(alphabet.begin(), alphabet.end(), replacement) != alphabet.end())
                    continue;
                std::vector<int> candidate = alphabet;
                candidate[static_cast<std::size_t>(pos)] = replacement;
                std::sort(candidate.begin(), candidate.end());
                double cand_diam = sampled_diameter(f, space, candidate, k, rng, evals);
                if (cand_diam < diam) {
                    diam = cand_diam;
                    alphabet = candidate;
                    improved = true;
                }
            }
        }
        if (diam < best_diam || (diam == best_diam && alphabet < best)) {
            best_diam = diam;
            best = alphabet;
        }
    }
    result.best_alphabet = best;
    result.best_diameter = best_diam;
    result.evaluations = evals;
    result.met = best_diam <= result.kr_bound;
    return result;
}

Json concentration_to_json(const ConcentrationResult& r) {
    Json j;
    j["best_alphabet"] = r.best_alphabet;
    j["best_diameter"] = r.best_diameter;
    j["kr_bound"] = r.kr_bound;
    j["met"] = r.met;
    j["evaluations"] = r.evaluations;
    j["seed"] = r.seed;
    j["heuristic"] = r.heuristic;
    j["mode"] = "sampled";
    j["tolerance"] = 1e-12;
    return j;
}

}  // namespace treelab
