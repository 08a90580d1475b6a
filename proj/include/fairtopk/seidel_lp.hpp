/*
 * This Source Code Form is subject to the terms of the Mozilla Public
 * License, v. 2.0. If a copy of the MPL was not distributed with this
 * file, You can obtain one at https://mozilla.org/MPL/2.0/.
 */

#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "fairtopk/errors.hpp"
#include "fairtopk/exact.hpp"
#include "fairtopk/model.hpp"

namespace fairtopk {

inline constexpr int kMaxLpDimension = 12;

/// a . x <= b
struct LinearConstraint {
    std::vector<Rational> a;
    Rational b;
};

struct LinearProgram {
    int dim = 0;
    std::vector<LinearConstraint> constraints;
    std::optional<std::vector<Rational>> objective;  // maximized when present

    explicit LinearProgram(int dimension = 0) : dim(dimension) {}

    void addLessEqual(std::vector<Rational> a, Rational b) {
        if (static_cast<int>(a.size()) != dim) throw ParameterError("constraint dimension mismatch");
        constraints.push_back({std::move(a), std::move(b)});
    }
    void addGreaterEqual(std::vector<Rational> a, Rational b) {
        for (auto& x : a) x = -x;
        addLessEqual(std::move(a), -b);
    }
    void addEquality(const std::vector<Rational>& a, const Rational& b) {
        addLessEqual(a, b);
        addGreaterEqual(a, b);
    }
};

enum class LpStatus { Feasible, Infeasible, Unbounded };

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<Rational> x;

    bool feasible() const { return status == LpStatus::Feasible; }
};

inline Rational dot(std::span<const Rational> a, std::span<const Rational> x) {
    Rational acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (sgn(a[i]) != 0) acc += a[i] * x[i];
    return acc;
}

inline bool satisfies(const LinearProgram& lp, std::span<const Rational> x) {
    if (static_cast<int>(x.size()) != lp.dim) return false;
    for (const auto& c : lp.constraints)
        if (dot(c.a, x) > c.b) return false;
    return true;
}

namespace detail {

using Point = std::vector<Rational>;
using Objectives = std::vector<std::vector<Rational>>;

// Lexicographic minimum of the objective list over the box [-bound, bound]^dim.
inline Point boxVertex(int dim, const Objectives& objectives, const Rational& bound) {
    Point x(dim, Rational(-bound));
    for (int l = 0; l < dim; ++l) {
        for (const auto& o : objectives) {
            int s = sgn(o[l]);
            if (s != 0) {
                x[l] = s > 0 ? Rational(-bound) : bound;
                break;
            }
        }
    }
    return x;
}

// Restricts `c` to the hyperplane h.a . x = h.b by eliminating coordinate j.
inline LinearConstraint projectOnto(const LinearConstraint& c, const LinearConstraint& h, int j) {
    LinearConstraint out;
    const int dim = static_cast<int>(c.a.size());
    out.a.reserve(dim - 1);
    Rational factor = c.a[j] / h.a[j];
    for (int l = 0; l < dim; ++l) {
        if (l == j) continue;
        out.a.push_back(sgn(factor) == 0 ? c.a[l] : Rational(c.a[l] - factor * h.a[l]));
    }
    out.b = sgn(factor) == 0 ? c.b : Rational(c.b - factor * h.b);
    return out;
}

// Seidel's randomized incremental LP with a lexicographic objective, which
// makes the optimum unique; every level keeps its own copy of the box.
inline std::optional<Point> seidelLex(int dim, std::span<const LinearConstraint> constraints,
                                      const Objectives& objectives, const Rational& bound) {
    if (dim == 0) {
        for (const auto& c : constraints)
            if (c.b < 0) return std::nullopt;
        return Point{};
    }
    Point x = boxVertex(dim, objectives, bound);
    for (std::size_t i = 0; i < constraints.size(); ++i) {
        const LinearConstraint& h = constraints[i];
        if (dot(h.a, x) <= h.b) continue;

        int pivot = -1;
        for (int l = 0; l < dim; ++l) {
            if (sgn(h.a[l]) != 0) {
                pivot = l;
                break;
            }
        }
        if (pivot < 0) return std::nullopt;  // 0 <= b violated

        std::vector<LinearConstraint> sub;
        sub.reserve(i + 2);
        for (std::size_t l = 0; l < i; ++l) sub.push_back(projectOnto(constraints[l], h, pivot));
        for (int s : {1, -1}) {
            LinearConstraint side;
            side.a.assign(dim, Rational(0));
            side.a[pivot] = s;
            side.b = bound;
            sub.push_back(projectOnto(side, h, pivot));
        }
        Objectives projected;
        projected.reserve(objectives.size());
        for (const auto& o : objectives) {
            LinearConstraint asRow{o, Rational(0)};
            projected.push_back(projectOnto(asRow, h, pivot).a);
        }
        std::optional<Point> y = seidelLex(dim - 1, sub, projected, bound);
        if (!y) return std::nullopt;

        Rational rest = h.b;
        Point lifted;
        lifted.reserve(dim);
        for (int l = 0, m = 0; l < dim; ++l) {
            if (l == pivot) {
                lifted.emplace_back(0);
                continue;
            }
            rest -= h.a[l] * (*y)[m];
            lifted.push_back((*y)[m++]);
        }
        lifted[pivot] = rest / h.a[pivot];
        x = std::move(lifted);
    }
    return x;
}

}  // namespace detail

/// Exact fixed-dimension LP. Without an objective it returns the
/// lexicographically smallest feasible point; variables are confined to
/// |x_i| <= 2^40.
inline LpSolution solve(const LinearProgram& lp, std::uint64_t seed) {
    if (lp.dim < 0) throw ParameterError("negative LP dimension");
    if (lp.dim > kMaxLpDimension) throw UnsupportedDimensionError("LP dimension exceeds " + std::to_string(kMaxLpDimension));
    for (const auto& c : lp.constraints)
        if (static_cast<int>(c.a.size()) != lp.dim) throw ParameterError("constraint dimension mismatch");
    if (lp.objective && static_cast<int>(lp.objective->size()) != lp.dim) throw ParameterError("objective dimension mismatch");

    std::vector<std::size_t> order(lp.constraints.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<LinearConstraint> shuffled;
    shuffled.reserve(order.size());
    for (std::size_t i : order) shuffled.push_back(lp.constraints[i]);

    detail::Objectives objectives;
    if (lp.objective) {
        std::vector<Rational> negated = *lp.objective;
        for (auto& v : negated) v = -v;
        objectives.push_back(std::move(negated));
    }
    for (int i = 0; i < lp.dim; ++i) {
        std::vector<Rational> e(lp.dim, Rational(0));
        e[i] = 1;
        objectives.push_back(std::move(e));
    }

    Rational bound = BigInt(1) << 40;
    std::optional<detail::Point> x = detail::seidelLex(lp.dim, shuffled, objectives, bound);
    if (!x) return {LpStatus::Infeasible, {}};
    if (!satisfies(lp, *x)) throw StateError("LP certificate failed verification");

    if (lp.objective) {
        bool onBox = std::any_of(x->begin(), x->end(), [&](const Rational& v) { return abs(v) == bound; });
        if (onBox) {
            std::optional<detail::Point> wider = detail::seidelLex(lp.dim, shuffled, objectives, Rational(2 * bound));
            if (wider && dot(*lp.objective, *wider) > dot(*lp.objective, *x)) return {LpStatus::Unbounded, {}};
        }
    }
    return {LpStatus::Feasible, std::move(*x)};
}

/// Reduced simplex coordinates: w_1..w_{d-1} free, w_d = 1 - sum. Rewrites
/// a . w as (coefficients over the first d - 1 weights, constant term).
inline std::pair<std::vector<Rational>, Rational> reduceLinearForm(std::span<const Rational> a) {
    const std::size_t d = a.size();
    std::vector<Rational> out;
    out.reserve(d - 1);
    for (std::size_t i = 0; i + 1 < d; ++i) out.push_back(a[i] - a[d - 1]);
    return {std::move(out), a[d - 1]};
}

/// LP whose first d - 1 variables are reduced weights constrained to the
/// simplex and the box; `extra` trailing variables are left unconstrained.
inline LinearProgram simplexProgram(const WeightBox& box, int extra = 0) {
    const int d = box.d;
    if (d < 1) throw ParameterError("weight dimension must be positive");
    LinearProgram lp(d - 1 + extra);
    for (int i = 0; i + 1 < d; ++i) {
        std::vector<Rational> a(lp.dim, Rational(0));
        a[i] = -1;
        lp.addLessEqual(std::move(a), 0);
    }
    {
        std::vector<Rational> a(lp.dim, Rational(0));
        for (int i = 0; i + 1 < d; ++i) a[i] = 1;
        lp.addLessEqual(std::move(a), 1);
    }
    for (const auto& h : box.inequalities) {
        auto [coeffs, constant] = reduceLinearForm(h.a);
        coeffs.resize(lp.dim, Rational(0));
        lp.addLessEqual(std::move(coeffs), h.b - constant);
    }
    return lp;
}

inline WeightVector liftSimplex(std::span<const Rational> reduced, int d) {
    std::vector<Rational> w;
    w.reserve(d);
    Rational rest = 1;
    for (int i = 0; i + 1 < d; ++i) {
        w.push_back(reduced[i]);
        rest -= reduced[i];
    }
    w.push_back(rest);
    return WeightVector(std::move(w));
}

inline std::optional<WeightVector> feasiblePointInBox(const WeightBox& box, int d, std::uint64_t seed) {
    if (box.d != d) throw ParameterError("box dimension mismatch");
    LpSolution s = solve(simplexProgram(box), seed);
    if (!s.feasible()) return std::nullopt;
    return liftSimplex(s.x, d);
}

}  // namespace fairtopk
