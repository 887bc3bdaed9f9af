#include "treelab/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "treelab/errors.hpp"
#include "treelab/rng.hpp"

namespace treelab {

Key node_key(const TreeNode& s) { return s.path; }

Key level_key(int level, const TreeNode& s) {
    Key k;
    k.reserve(s.path.size() + 1);
    k.push_back(-(level + 1));
    k.insert(k.end(), s.path.begin(), s.path.end());
    return k;
}

bool is_level_key(const Key& k) { return !k.empty() && k.front() < 0; }

int key_depth(const Key& k) {
    return is_level_key(k) ? static_cast<int>(k.size()) - 1 : static_cast<int>(k.size());
}

double Vector::at(const Key& k) const {
    auto it = entries.find(k);
    return it == entries.end() ? 0.0 : it->second;
}

void Vector::set(const Key& k, double value) {
    if (value == 0.0)
        entries.erase(k);
    else
        entries[k] = value;
}

void Vector::add(const Key& k, double value) {
    if (value == 0.0) return;
    auto [it, inserted] = entries.emplace(k, value);
    if (!inserted) {
        it->second += value;
        if (it->second == 0.0) entries.erase(it);
    }
}

Vector& Vector::operator+=(const Vector& other) {
    for (const auto& [k, v] : other.entries) add(k, v);
    return *this;
}

Vector& Vector::operator-=(const Vector& other) {
    for (const auto& [k, v] : other.entries) add(k, -v);
    return *this;
}

Vector& Vector::operator*=(double c) {
    if (c == 0.0) {
        entries.clear();
        return *this;
    }
    for (auto& [k, v] : entries) v *= c;
    return *this;
}

void axpy(Vector& f, double c, const Vector& v) {
    if (c == 0.0) return;
    for (const auto& [k, x] : v.entries) f.add(k, c * x);
}

double dot(const Vector& a, const Vector& b) {
    const Vector& small = a.entries.size() <= b.entries.size() ? a : b;
    const Vector& big = a.entries.size() <= b.entries.size() ? b : a;
    double sum = 0.0;
    for (const auto& [k, v] : small.entries) {
        auto it = big.entries.find(k);
        if (it != big.entries.end()) sum += v * it->second;
    }
    return sum;
}

double pair(const LinearFunctional& f, const Vector& v) { return dot(f.coeffs, v); }

double lp_norm(const Vector& v, double p) {
    if (std::isinf(p)) {
        double m = 0.0;
        for (const auto& [k, x] : v.entries) m = std::max(m, std::abs(x));
        return m;
    }
    if (p < 1.0) throw ConfigError("lp norm requires p >= 1");
    if (p == 1.0) {
        double s = 0.0;
        for (const auto& [k, x] : v.entries) s += std::abs(x);
        return s;
    }
    if (p == 2.0) {
        double s = 0.0;
        for (const auto& [k, x] : v.entries) s += x * x;
        return std::sqrt(s);
    }
    // General p: scale by the max for stability.
    double m = 0.0;
    for (const auto& [k, x] : v.entries) m = std::max(m, std::abs(x));
    if (m == 0.0) return 0.0;
    double s = 0.0;
    for (const auto& [k, x] : v.entries) s += std::pow(std::abs(x) / m, p);
    return m * std::pow(s, 1.0 / p);
}

namespace {

double combine_lp(const std::vector<double>& parts, double p) {
    if (std::isinf(p)) {
        double m = 0.0;
        for (double x : parts) m = std::max(m, x);
        return m;
    }
    if (p == 1.0) {
        double s = 0.0;
        for (double x : parts) s += x;
        return s;
    }
    if (p == 2.0) {
        double s = 0.0;
        for (double x : parts) s += x * x;
        return std::sqrt(s);
    }
    double m = 0.0;
    for (double x : parts) m = std::max(m, x);
    if (m == 0.0) return 0.0;
    double s = 0.0;
    for (double x : parts) s += std::pow(x / m, p);
    return m * std::pow(s, 1.0 / p);
}

}  // namespace

double norm(const Vector& v, const SpaceModel& space) {
    if (const auto* lp = std::get_if<LpSpace>(&space)) {
        if (!(lp->p >= 1.0)) throw ConfigError("invalid p < 1");
        return lp_norm(v, lp->p);
    }
    if (const auto* nested = std::get_if<NestedSumSpace>(&space)) {
        std::vector<Vector> per_block(nested->blocks.size());
        for (const auto& [k, x] : v.entries) {
            bool placed = false;
            for (std::size_t i = 0; i < nested->blocks.size(); ++i) {
                if (nested->blocks[i].keys.count(k)) {
                    per_block[i].set(k, x);
                    placed = true;
                    break;
                }
            }
            if (!placed) throw ConfigError("vector key outside declared nested-sum blocks");
        }
        std::vector<double> parts(per_block.size());
        for (std::size_t i = 0; i < per_block.size(); ++i)
            parts[i] = lp_norm(per_block[i], nested->blocks[i].p);
        return combine_lp(parts, nested->outer_p);
    }
    const auto& eval = std::get<EvalNormSpace>(space);
    if (eval.epsilon < 0.0) throw ConfigError("EvalNorm epsilon must be >= 0");
    double fsup = 0.0;
    for (const auto& f : eval.functionals) fsup = std::max(fsup, std::abs(pair(f, v)));
    return fsup + eval.epsilon * lp_norm(v, kInfinityP);
}

double dual_norm(const LinearFunctional& f, const LpSpace& space) {
    if (!(space.p >= 1.0)) throw ConfigError("invalid p < 1");
    double q = std::isinf(space.p) ? 1.0 : (space.p == 1.0 ? kInfinityP : space.p / (space.p - 1.0));
    return lp_norm(f.coeffs, q);
}

std::string space_to_string(const SpaceModel& space) {
    if (const auto* lp = std::get_if<LpSpace>(&space)) {
        if (std::isinf(lp->p)) return "lp(inf)";
        return "lp(" + std::to_string(lp->p) + ")";
    }
    if (std::holds_alternative<NestedSumSpace>(space)) return "nested";
    return "eval";
}

Grading path_depth_grading() {
    return [](const Key& k) -> std::optional<int> { return key_depth(k); };
}

Vector level_truncate(const Vector& v, int k, const Grading& grading) {
    Vector out;
    for (const auto& [key, x] : v.entries) {
        auto lvl = grading(key);
        if (!lvl) throw ConfigError("ungraded key in level projection");
        if (*lvl <= k) out.set(key, x);
    }
    return out;
}

Vector level_average(const Vector& v, int k, int branching) {
    if (branching < 1) throw ConfigError("level_average requires a declared branching >= 1");
    if (k < 0) return Vector{};
    Vector out;
    for (const auto& [key, x] : v.entries) {
        if (is_level_key(key)) throw ConfigError("level_average requires plain node-path keys");
        int len = static_cast<int>(key.size());
        if (len <= k) {
            out.add(key, x);
            continue;
        }
        // Spread the mass uniformly over the sibling orbit sharing the level-k
        // prefix: the mean over all b^{len-k} extensions.
        double orbit = std::pow(static_cast<double>(branching), len - k);
        double share = x / orbit;
        std::vector<int> digits(static_cast<std::size_t>(len - k), 1);
        Key target(key.begin(), key.begin() + k);
        target.resize(len);
        for (;;) {
            for (int i = 0; i < len - k; ++i) target[k + i] = digits[i];
            out.add(target, share);
            int i = len - k - 1;
            while (i >= 0 && digits[i] == branching) digits[i--] = 1;
            if (i < 0) break;
            ++digits[i];
        }
    }
    return out;
}

Vector level_projection(const Vector& v, int k, ProjectionMode mode, const Grading& grading,
                        int branching) {
    if (k < 0) return Vector{};
    if (mode == ProjectionMode::Truncate) return level_truncate(v, k, grading);
    return level_average(v, k, branching);
}

namespace {

// Deterministic point on the unit sphere of the span of coords [lo, hi).
Vector sphere_sample(double p, int lo, int hi, Pcg32& rng) {
    Vector x;
    for (int i = lo; i < hi; ++i) x.set(Key{i + 1}, rng.next_signed());
    double n = lp_norm(x, p);
    if (n == 0.0) {
        x.set(Key{lo + 1}, 1.0);
        return x;
    }
    x *= 1.0 / n;
    return x;
}

void check_modulus_args(double p, int dim, double tau) {
    if (!(p >= 1.0)) throw ConfigError("modulus estimate requires p >= 1");
    if (dim < 4) throw ConfigError("dimension too small for the tail approximation (d < 4)");
    if (!(tau > 0.0 && tau <= 10.0)) throw ConfigError("tau must lie in (0, 10]");
}

}  // namespace

double aus_modulus_estimate(double p, int dim, double tau, std::uint64_t seed, int samples) {
    check_modulus_args(p, dim, tau);
    int head = dim - (dim + 1) / 2;  // tail = last ceil(d/2) coordinates
    Pcg32 rng(mix_seed(seed, 0xa05));
    double best = -1.0;
    for (int s = 0; s < samples; ++s) {
        Vector x = sphere_sample(p, 0, head, rng);
        Vector y = sphere_sample(p, head, dim, rng);
        axpy(x, tau, y);
        best = std::max(best, lp_norm(x, p) - 1.0);
    }
    return best;
}

double auc_modulus_estimate(double p, int dim, double tau, std::uint64_t seed, int samples) {
    check_modulus_args(p, dim, tau);
    int head = dim - (dim + 1) / 2;
    Pcg32 rng(mix_seed(seed, 0xa0c));
    double best = std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) {
        Vector x = sphere_sample(p, 0, head, rng);
        Vector y = sphere_sample(p, head, dim, rng);
        axpy(x, tau, y);
        best = std::min(best, lp_norm(x, p) - 1.0);
    }
    return best;
}

}  // namespace treelab
