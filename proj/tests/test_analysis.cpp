#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "treelab/analysis.hpp"
#include "treelab/embeddings.hpp"
#include "treelab/errors.hpp"
#include "treelab/rng.hpp"
#include "treelab/systems.hpp"

using namespace treelab;

namespace {

TreeNode node(std::vector<int> p) { return TreeNode(std::move(p)); }

// Random map on T_N^b into lp coordinates, u(root) = 0, injective by the
// per-node marker coordinate.
EmbeddingMap random_map(int depth, int branching, double p, Pcg32& rng) {
    HyperbolicTree tree = make_integer_tree(depth, branching);
    EmbeddingMap map;
    map.nodes = enumerate_nodes(tree);
    map.target = LpSpace{p};
    for (const TreeNode& s : map.nodes) {
        Vector v;
        if (!s.is_root()) {
            int entries = 1 + rng.next_below(4);
            for (int e = 0; e < entries; ++e) {
                int len = rng.next_below(static_cast<std::uint32_t>(depth + 1));
                Key k;
                for (int i = 0; i < len; ++i)
                    k.push_back(1 + static_cast<int>(
                                        rng.next_below(static_cast<std::uint32_t>(branching))));
                v.add(k, rng.next_signed() * 3.0);
            }
            v.add(node_key(s), 1.0 + rng.next_double());
        }
        map.image[s] = v;
    }
    return map;
}

// Decimal string via __int128, an oracle independent of pow_decimal.
std::string pow_decimal_oracle(long long base, long long exp) {
    __int128 v = 1;
    for (long long e = 0; e < exp; ++e) v *= base;
    std::string out;
    while (v > 0) {
        out.insert(out.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
        v /= 10;
    }
    return out.empty() ? "0" : out;
}

}  // namespace

TEST_CASE("distortion of the canonical l1 embedding is exactly 1") {
    EmbeddingMap map = embed_l1(canonical_system(make_integer_tree(3, 2)));
    DistortionReport r = distortion(metric_map_from_embedding(map));
    CHECK(r.lip == 1.0);
    CHECK(r.colip_inverse == 1.0);
    CHECK(r.distortion == 1.0);
    CHECK(r.exhaustive);
}

TEST_CASE("witness pairs reproduce the reported ratios") {
    Pcg32 rng(41);
    EmbeddingMap map = random_map(4, 2, 2.0, rng);
    MetricMap m = metric_map_from_embedding(map);
    DistortionReport r = distortion(m);
    auto ratio = [&](std::pair<std::size_t, std::size_t> w) {
        Vector diff = m.images[w.first] - m.images[w.second];
        return norm(diff, m.space) / m.dist(w.first, w.second);
    };
    CHECK(ratio(r.lip_witness) == doctest::Approx(r.lip).epsilon(1e-12));
    CHECK(1.0 / ratio(r.colip_witness) == doctest::Approx(r.colip_inverse).epsilon(1e-12));
}

TEST_CASE("distortion is scale invariant") {
    EmbeddingMap map = embed_l1(canonical_system(make_integer_tree(2, 3)));
    MetricMap base = metric_map_from_embedding(map);
    MetricMap scaled = base;
    for (Vector& v : scaled.images) v *= 2.0;
    DistortionReport a = distortion(base);
    DistortionReport b = distortion(scaled);
    CHECK(a.distortion == doctest::Approx(b.distortion).epsilon(1e-12));
}

TEST_CASE("two points always have distortion 1") {
    MetricMap m;
    m.labels = {"x", "y"};
    Vector v;
    v.set(Key{1}, 3.7);
    m.images = {Vector{}, v};
    m.space = LpSpace{2.0};
    m.dist = [](std::size_t, std::size_t) { return 5.0; };
    DistortionReport r = distortion(m);
    CHECK(r.distortion == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("non-injective maps are rejected") {
    MetricMap m;
    m.labels = {"x", "y", "z"};
    Vector v;
    v.set(Key{1}, 1.0);
    m.images = {Vector{}, v, v};
    m.space = LpSpace{2.0};
    m.dist = [](std::size_t, std::size_t) { return 1.0; };
    CHECK_THROWS_AS(distortion(m), InvariantError);
}

TEST_CASE("sampled mode agrees with exhaustive on small instances") {
    Pcg32 rng(8);
    EmbeddingMap map = random_map(4, 2, 2.0, rng);
    MetricMap m = metric_map_from_embedding(map);
    DistortionReport exact = distortion(m);
    ScanConfig sampled_cfg;
    sampled_cfg.pair_budget = 16;  // force sampling
    sampled_cfg.sample_size = 400'000;
    sampled_cfg.seed = 9;
    DistortionReport approx = distortion(m, sampled_cfg);
    CHECK_FALSE(approx.exhaustive);
    // 31 points, 465 pairs, 400k draws: every pair is seen w.h.p.
    CHECK(approx.lip == doctest::Approx(exact.lip).epsilon(1e-9));
    CHECK(approx.colip_inverse == doctest::Approx(exact.colip_inverse).epsilon(1e-9));
}

TEST_CASE("threaded scan matches the serial one") {
    Pcg32 rng(88);
    EmbeddingMap map = random_map(5, 2, 2.0, rng);
    MetricMap m = metric_map_from_embedding(map);
    ScanConfig threaded;
    threaded.threads = 4;
    DistortionReport a = distortion(m);
    DistortionReport b = distortion(m, threaded);
    CHECK(a.lip == b.lip);
    CHECK(a.colip_inverse == b.colip_inverse);
}

TEST_CASE("coarse moduli of an isometry") {
    EmbeddingMap map = embed_l1(canonical_system(make_integer_tree(3, 2)));
    MetricMap m = metric_map_from_embedding(map);
    CoarseModuliReport r = coarse_moduli(m, {1, 2, 3, 4, 5, 6}, {1, 2, 3});
    for (std::size_t i = 0; i < r.t_grid.size(); ++i) CHECK(r.omega[i] <= r.t_grid[i]);
    for (double lt : r.l_theta) CHECK(lt == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.l_infinity == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.l_infinity_is_grid_min);
    CHECK_THROWS_AS(coarse_moduli(m, {}, {1.0}), ConfigError);
}

TEST_CASE("omega_f is nondecreasing on 100 random maps") {
    Pcg32 rng(19);
    for (int trial = 0; trial < 100; ++trial) {
        EmbeddingMap map = random_map(3, 2, 1.0 + rng.next_double() * 2.0, rng);
        MetricMap m = metric_map_from_embedding(map);
        CoarseModuliReport r = coarse_moduli(m, {1, 2, 3, 4, 5, 6}, {1.0});
        for (std::size_t i = 1; i < r.omega.size(); ++i) CHECK(r.omega[i] >= r.omega[i - 1]);
    }
}

TEST_CASE("L_theta is nonincreasing and affine maps have L = slope") {
    // Points 0..9 on a line, f(x) = 2x.
    MetricMap m;
    m.space = LpSpace{2.0};
    for (int i = 0; i < 10; ++i) {
        m.labels.push_back(std::to_string(i));
        Vector v;
        v.set(Key{1}, 2.0 * i);
        m.images.push_back(v);
    }
    m.dist = [](std::size_t i, std::size_t j) {
        return std::abs(static_cast<double>(i) - static_cast<double>(j));
    };
    CoarseModuliReport r = coarse_moduli(m, {1, 5, 9}, {0.5, 1, 2, 4, 9});
    for (double lt : r.l_theta) CHECK(lt == doctest::Approx(2.0).epsilon(1e-12));
    for (std::size_t i = 1; i < r.l_theta.size(); ++i)
        CHECK(r.l_theta[i] <= r.l_theta[i - 1] + 1e-12);
}

TEST_CASE("filtration of a level-local map concentrates in w_j0") {
    EmbeddingMap map = embed_l1(canonical_system(make_integer_tree(4, 2)));
    WTable w = filtration_decompose(map, 2, ProjectionMode::Truncate);
    CHECK(w.reconstruction_error == 0.0);
    for (int j = 1; j <= w.depth; ++j) {
        CHECK(w.aggregate(j, 0) == doctest::Approx(1.0));  // ||z_j|| = 1
        for (int k = 1; k <= w.k_columns; ++k) CHECK(w.aggregate(j, k) == 0.0);
    }
}

TEST_CASE("filtration reconstruction on 50 random maps in both modes") {
    Pcg32 rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        int depth = 1 + rng.next_below(5);
        int branching = 1 + rng.next_below(3);  // b <= 3
        if (trial % 5 == 0) depth = 6;          // exercise N = 6 regularly
        double p = 1.0 + rng.next_double() * 2.0;
        EmbeddingMap map = random_map(depth, branching, p, rng);
        int a = 2 + rng.next_below(3);
        WTable wt = filtration_decompose(map, a, ProjectionMode::Truncate);
        CHECK(wt.reconstruction_error == 0.0);  // disjoint bands cancel bitwise
        WTable wa = filtration_decompose(map, a, ProjectionMode::Average);
        CHECK(wa.reconstruction_error <= 1e-12);
    }
}

TEST_CASE("filtration a = N band structure") {
    int N = 4;
    EmbeddingMap map = embed_l1(canonical_system(make_integer_tree(N, 2)));
    WTable w = filtration_decompose(map, N, ProjectionMode::Truncate);
    // Columns stop as soon as a^k exceeds N; reconstruction stays exact.
    CHECK(w.k_columns == 2);
    CHECK(w.reconstruction_error == 0.0);
    CHECK_THROWS_AS(filtration_decompose(map, 1, ProjectionMode::Truncate), ConfigError);
}

TEST_CASE("filtration rejects non-pinned and non-full maps") {
    EmbeddingMap dual = embed_dual(canonical_system(make_integer_tree(2, 2)));
    // G(root) = y*_root != 0.
    CHECK_THROWS_AS(filtration_decompose(dual, 2, ProjectionMode::Truncate), ConfigError);
    EmbeddingMap l1 = embed_l1(canonical_system(make_integer_tree(2, 2)));
    l1.nodes.pop_back();
    l1.image.erase(node({2, 2}));
    CHECK_THROWS_AS(filtration_decompose(l1, 2, ProjectionMode::Truncate), ConfigError);
}

TEST_CASE("counting bounds on the canonical l1 map, N=4 b=2 a=2 C=1") {
    EmbeddingMap map = embed_l1(canonical_system(make_integer_tree(4, 2)));
    WTable w = filtration_decompose(map, 2, ProjectionMode::Truncate);
    CountingReport r = counting_bounds(w, 1.0, 2.0);
    CHECK(r.upper_measured == 0.0);  // level-local: all k >= 1 bands vanish
    CHECK(r.upper_bound == doctest::Approx(std::sqrt(static_cast<double>(r.m)) * 4.0));
    CHECK(r.upper_holds);
    CHECK(r.lower_bound == 2.0);
    CHECK_FALSE(r.caveat.empty());
}

TEST_CASE("average-mode filtration sees nonzero deep bands") {
    EmbeddingMap map = embed_l1(canonical_system(make_integer_tree(4, 2)));
    WTable w = filtration_decompose(map, 2, ProjectionMode::Average);
    double beyond = 0.0;
    for (int j = 1; j <= w.depth; ++j)
        for (int k = 1; k <= w.k_columns; ++k) beyond += w.aggregate(j, k);
    CHECK(beyond > 0.0);
    CHECK(w.reconstruction_error <= 1e-12);
    // Midpoint windows reported for every 0 <= r < r+s <= N.
    CHECK(w.windows.size() == 10);
}

TEST_CASE("(3.2) sandwich on disjoint level bands, 1000 random instances") {
    Pcg32 rng(27);
    for (int trial = 0; trial < 1000; ++trial) {
        double p = 1.0 + rng.next_double() * 3.0;
        double q = p + rng.next_double() * 2.0;  // upper exponent q >= p
        int r = 2 + rng.next_below(3);
        std::vector<Vector> xs;
        int level = 0;
        for (int j = 0; j < r; ++j) {
            int width = 1 + rng.next_below(2);
            Vector x;
            int entries = 1 + rng.next_below(3);
            for (int e = 0; e < entries; ++e) {
                int lvl = level + 1 + rng.next_below(static_cast<std::uint32_t>(width));
                Key k;
                for (int i = 0; i < lvl; ++i) k.push_back(1 + rng.next_below(2));
                k.back() = 1 + (e % 2);
                x.add(k, rng.next_signed() * 2.0);
            }
            level += width;
            xs.push_back(x);
        }
        Vector total;
        double sum_p = 0.0, sum_q = 0.0;
        for (const Vector& x : xs) {
            total += x;
            sum_p += std::pow(lp_norm(x, p), p);
            sum_q += std::pow(lp_norm(x, q), q);
        }
        double whole = lp_norm(total, p);
        // Equality case: q = p makes both sides the lp sum.
        CHECK(whole == doctest::Approx(std::pow(sum_p, 1.0 / p)).epsilon(1e-9));
        // Sandwich for q >= p (norms drop as the exponent grows).
        CHECK(std::pow(sum_q, 1.0 / q) <= whole * (1.0 + 1e-9) + 1e-12);
    }
}

TEST_CASE("certificate arithmetic examples") {
    Certificate c = certificate(1.0, 2.0);
    CHECK(c.q == 2.0);
    CHECK(c.a == 5);
    CHECK(c.m == 5);
    CHECK(c.N_decimal == "15625");
    CHECK(c.upper == doctest::Approx(std::sqrt(5.0) * 15625.0).epsilon(1e-12));
    CHECK(c.lower == doctest::Approx(39062.5).epsilon(1e-12));
    CHECK(c.upper < c.lower);
    CHECK(c.contradiction);

    Certificate c2 = certificate(2.0, 2.0);
    CHECK(c2.a == 17);
    CHECK(c2.m == 17);
    CHECK(c2.N_decimal == pow_decimal_oracle(17, 18));
    CHECK(c2.contradiction);

    Certificate cinf = certificate(1.0, kInfinityP);
    CHECK(cinf.q == 1.0);
    CHECK(cinf.a == 3);
    CHECK(cinf.m == 3);
    CHECK(cinf.N_decimal == "81");

    CHECK_THROWS_AS(certificate(1.0, 1.0), ConfigError);
    CHECK_THROWS_AS(certificate(0.5, 2.0), ConfigError);
}

TEST_CASE("certificate contradiction iff m > (2C)^q") {
    Certificate below = certificate(1.0, 2.0, std::nullopt, 3);  // (2C)^q = 4
    CHECK_FALSE(below.contradiction);
    Certificate at = certificate(1.0, 2.0, std::nullopt, 4);
    CHECK_FALSE(at.contradiction);
    Certificate above = certificate(1.0, 2.0, std::nullopt, 5);
    CHECK(above.contradiction);
}

TEST_CASE("pow_decimal against the int128 oracle") {
    Pcg32 rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        long long base = 2 + rng.next_below(30);
        long long exp = rng.next_below(20);
        if (std::pow(static_cast<double>(base), static_cast<double>(exp)) > 1e37) continue;
        CHECK(pow_decimal(base, exp) == pow_decimal_oracle(base, exp));
    }
    CHECK(pow_decimal(5, 0) == "1");
}

TEST_CASE("hamming metric") {
    CHECK(hamming_metric({1, 2, 3}, {1, 2, 3}) == 0);
    CHECK(hamming_metric({1, 2, 3}, {1, 2, 4}) == 1);
    CHECK(hamming_metric({1, 2, 3}, {4, 5, 6}) == 3);
    CHECK_THROWS_AS(hamming_metric({1, 2}, {1, 2, 3}), ConfigError);
    CHECK_THROWS_AS(hamming_metric({2, 1}, {1, 2}), ConfigError);
}

TEST_CASE("james sums") {
    // l1 model: disjoint supports give 2k.
    Vector a = james_sum(JamesModel::L1Basis, {1, 2});
    Vector b = james_sum(JamesModel::L1Basis, {3, 4});
    CHECK(norm(a - b, james_space(JamesModel::L1Basis)) == 4.0);
    // Summing model: h({1}) - h({2}) = -e_2.
    Vector sa = james_sum(JamesModel::SummingBasis, {1});
    Vector sb = james_sum(JamesModel::SummingBasis, {2});
    CHECK(norm(sa - sb, james_space(JamesModel::SummingBasis)) == 1.0);

    // h is 2-Lipschitz for the Hamming metric, 500 random pairs.
    Pcg32 rng(15);
    for (int trial = 0; trial < 500; ++trial) {
        int k = 2 + rng.next_below(6);
        auto draw = [&]() {
            std::set<int> s;
            while (static_cast<int>(s.size()) < k)
                s.insert(1 + static_cast<int>(rng.next_below(30)));
            return std::vector<int>(s.begin(), s.end());
        };
        std::vector<int> A = draw(), B = draw();
        int d = hamming_metric(A, B);
        for (JamesModel model : {JamesModel::L1Basis, JamesModel::SummingBasis}) {
            Vector diff = james_sum(model, A) - james_sum(model, B);
            CHECK(norm(diff, james_space(model)) <= 2.0 * d + 1e-12);
        }
    }
}

TEST_CASE("KR comparison flips between k = 9 and k = 100") {
    KrComparison at9 = james_kr_comparison(JamesModel::L1Basis, 1.0, 2.0, 9);
    CHECK(at9.lhs == doctest::Approx(17.0));
    CHECK(at9.kr_bound == doctest::Approx(27.0));
    CHECK_FALSE(at9.contradictory);
    KrComparison at100 = james_kr_comparison(JamesModel::L1Basis, 1.0, 2.0, 100);
    CHECK(at100.lhs == doctest::Approx(199.0));
    CHECK(at100.kr_bound == doctest::Approx(90.0));
    CHECK(at100.contradictory);
}

TEST_CASE("concentration search") {
    // Constant map: diameter 0, bound met.
    ConcentrationResult constant = concentration_search(
        [](const std::vector<int>&) { return Vector{}; }, LpSpace{2.0}, 12, 3, 1.0, 2.0, 2000, 5);
    CHECK(constant.best_diameter == 0.0);
    CHECK(constant.met);

    // James l1 sums: every pair of disjoint k-subsets realizes 2k inside any
    // sub-alphabet, and at k = 3 the KR bound 9 sqrt(3) still wins.
    auto james_f = [](const std::vector<int>& s) { return james_sum(JamesModel::L1Basis, s); };
    ConcentrationResult james = concentration_search(
        james_f, james_space(JamesModel::L1Basis), 12, 3, 1.0, 2.0, 4000, 5);
    CHECK(james.best_diameter == doctest::Approx(6.0));
    CHECK(james.met);

    // Seed determinism.
    ConcentrationResult again = concentration_search(
        james_f, james_space(JamesModel::L1Basis), 12, 3, 1.0, 2.0, 4000, 5);
    CHECK(again.best_alphabet == james.best_alphabet);
    CHECK(again.best_diameter == james.best_diameter);

    CHECK_THROWS_AS(concentration_search([](const std::vector<int>&) { return Vector{}; },
                                         LpSpace{2.0}, 5, 3, 1.0, 2.0, 100, 1),
                    ConfigError);
}
