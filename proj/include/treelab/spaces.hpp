#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "treelab/tree.hpp"

namespace treelab {

// Coordinate keys are integer sequences. Plain node keys are the node path;
// level-tagged keys prepend -(level+1), so they can never collide with node
// paths (whose entries are >= 1).
using Key = std::vector<int>;

Key node_key(const TreeNode& s);
Key level_key(int level, const TreeNode& s);
bool is_level_key(const Key& k);
int key_depth(const Key& k);  // depth of the underlying tree node

// Finitely supported coordinate vector. Exact zeros are pruned so that the
// zero vector is the empty map and equality is structural.
struct Vector {
    std::map<Key, double> entries;

    double at(const Key& k) const;
    void set(const Key& k, double value);
    void add(const Key& k, double value);
    bool is_zero() const { return entries.empty(); }
    std::size_t support_size() const { return entries.size(); }

    Vector& operator+=(const Vector& other);
    Vector& operator-=(const Vector& other);
    Vector& operator*=(double c);

    friend Vector operator+(Vector a, const Vector& b) { return a += b; }
    friend Vector operator-(Vector a, const Vector& b) { return a -= b; }
    friend Vector operator*(double c, Vector v) { return v *= c; }

    bool operator==(const Vector& other) const = default;
};

// f += c * v
void axpy(Vector& f, double c, const Vector& v);

struct LinearFunctional {
    Vector coeffs;
    double bound = 0.0;  // declared norm bound; 0 = undeclared
};

// <f, v> = sum over shared keys.
double pair(const LinearFunctional& f, const Vector& v);
double dot(const Vector& a, const Vector& b);

// --- Norm models -----------------------------------------------------------

constexpr double kInfinityP = std::numeric_limits<double>::infinity();

struct LpSpace {
    double p = 2.0;  // in [1, inf]
};

struct NestedBlock {
    double p = 2.0;
    std::set<Key> keys;
};

// Outer lp-sum of inner lp blocks with disjoint key sets.
struct NestedSumSpace {
    double outer_p = 2.0;
    std::vector<NestedBlock> blocks;
};

// ||v|| = max_f |<f,v>| + epsilon * max_k |v(k)|; a true norm for epsilon > 0.
struct EvalNormSpace {
    std::vector<LinearFunctional> functionals;
    double epsilon = 1e-6;
};

using SpaceModel = std::variant<LpSpace, NestedSumSpace, EvalNormSpace>;

double lp_norm(const Vector& v, double p);
double norm(const Vector& v, const SpaceModel& space);

// Norm of a functional acting on an Lp space: the conjugate-exponent norm of
// its coefficients (p=1 -> sup, p=inf -> l1).
double dual_norm(const LinearFunctional& f, const LpSpace& space);

std::string space_to_string(const SpaceModel& space);

// --- Level projections E_k --------------------------------------------------

enum class ProjectionMode { Truncate, Average };

// Level of a key, or nullopt for ungraded keys (an error when encountered).
using Grading = std::function<std::optional<int>(const Key&)>;

// Grades a key by the depth of its underlying tree node (works for plain and
// level-tagged keys alike).
Grading path_depth_grading();

// Truncate mode: zero all coordinates of level > k. Norm-nonincreasing in
// every lp.
Vector level_truncate(const Vector& v, int k, const Grading& grading);

// Average mode: a coordinate at level j > k is replaced by the mean of v over
// all keys with the same level-k prefix and the same length, the sibling
// orbit being the full b-ary extension family. Keys must be node paths.
Vector level_average(const Vector& v, int k, int branching);

Vector level_projection(const Vector& v, int k, ProjectionMode mode, const Grading& grading,
                        int branching = 0);

// --- Asymptotic moduli -------------------------------------------------------

// Numerical estimate of the asymptotic uniform smoothness / convexity modulus
// of lp^d, with finite-codimension subspaces stood in by the span of the last
// ceil(d/2) coordinates (and x restricted to the complementary head span by
// symmetry). For lp both moduli equal (1+tau^p)^{1/p} - 1.
double aus_modulus_estimate(double p, int dim, double tau, std::uint64_t seed = 7,
                            int samples = 64);
double auc_modulus_estimate(double p, int dim, double tau, std::uint64_t seed = 7,
                            int samples = 64);

}  // namespace treelab
