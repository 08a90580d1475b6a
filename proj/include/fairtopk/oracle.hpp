/*
 * This Source Code Form is subject to the terms of the Mozilla Public
 * License, v. 2.0. If a copy of the MPL was not distributed with this
 * file, You can obtain one at https://mozilla.org/MPL/2.0/.
 */

#pragma once

// Brute-force reference solvers and test-data generators. Nothing here uses
// the kinetic queue or the k-level search.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "fairtopk/control.hpp"
#include "fairtopk/errors.hpp"
#include "fairtopk/model.hpp"
#include "fairtopk/seidel_lp.hpp"

namespace fairtopk {

struct OracleOutcome {
    Verdict verdict = Verdict::Infeasible;
    std::optional<Rational> t;  // 2-D only
    WeightVector w;
    std::vector<int> subset;

    bool found() const { return verdict == Verdict::Found; }
};

/// Checks every pairwise crossing in [lb, ub], the endpoints and the midpoints
/// between them, in increasing order.
inline OracleOutcome bruteForce2D(const Dataset& ds, const FairnessSpec& spec, const Rational& lb, const Rational& ub) {
    if (ds.dim() != 2) throw UnsupportedDimensionError("bruteForce2D needs d = 2");
    spec.checkAgainst(ds);
    if (lb < 0 || ub > 1 || lb > ub) throw ParameterError("need 0 <= lb <= ub <= 1");

    // score_c(x) = x * p1 + (1 - x) * p2 = x * (p1 - p2) + p2
    std::vector<Rational> slope, base;
    for (const Candidate& c : ds.candidates()) {
        slope.push_back(c.exact(0) - c.exact(1));
        base.push_back(c.exact(1));
    }
    std::vector<Rational> events{lb, ub};
    for (int i = 0; i < ds.size(); ++i)
        for (int j = i + 1; j < ds.size(); ++j) {
            if (slope[i] == slope[j]) continue;
            Rational x = (base[j] - base[i]) / (slope[i] - slope[j]);
            if (x >= lb && x <= ub) events.push_back(x);
        }
    std::sort(events.begin(), events.end());
    events.erase(std::unique(events.begin(), events.end()), events.end());

    std::vector<Rational> probes;
    for (std::size_t i = 0; i < events.size(); ++i) {
        probes.push_back(events[i]);
        if (i + 1 < events.size()) probes.push_back((events[i] + events[i + 1]) / 2);
    }
    for (const Rational& x : probes) {
        WeightVector w({x, Rational(1 - x)});
        TopKResult r = topK(ds, w, spec.k);
        if (isFair(spec, fairnessInterval(ds, r))) return {Verdict::Found, x, w, fairCompletion(ds, spec, r)};
    }
    return {};
}

/// Enumerates all k-subsets and tests the fair ones with a pairwise
/// separation LP over the box.
inline OracleOutcome bruteForceHD(const Dataset& ds, const FairnessSpec& spec, const WeightBox& box,
                                  std::uint64_t seed = 0) {
    const int n = ds.size();
    const int d = ds.dim();
    if (n > 15 || spec.k > 4) throw ParameterError("bruteForceHD is limited to n <= 15 and k <= 4");
    if (box.d != d) throw ParameterError("box dimension does not match dataset");
    spec.checkAgainst(ds);

    std::vector<int> pick(spec.k);
    for (int i = 0; i < spec.k; ++i) pick[i] = i;
    for (;;) {
        std::vector<bool> in(n, false);
        int g = 0;
        for (int pos : pick) {
            in[pos] = true;
            g += ds.isProtectedAt(pos);
        }
        if (g >= spec.lower && g <= spec.upper) {
            LinearProgram lp(d);
            for (int i = 0; i < d; ++i) {
                std::vector<Rational> a(d, Rational(0));
                a[i] = -1;
                lp.addLessEqual(std::move(a), 0);
            }
            lp.addEquality(std::vector<Rational>(d, Rational(1)), 1);
            for (const auto& h : box.inequalities) lp.addLessEqual(h.a, h.b);
            for (int a : pick)
                for (int b = 0; b < n; ++b) {
                    if (in[b]) continue;
                    std::vector<Rational> diff(d);
                    for (int i = 0; i < d; ++i) diff[i] = Rational(static_cast<long>(ds[a].ticks[i] - ds[b].ticks[i]));
                    lp.addGreaterEqual(std::move(diff), 0);
                }
            LpSolution s = solve(lp, seed);
            if (s.feasible()) {
                std::vector<int> ids;
                for (int pos : pick) ids.push_back(ds[pos].id);
                std::sort(ids.begin(), ids.end());
                return {Verdict::Found, std::nullopt, WeightVector(s.x), ids};
            }
        }
        int i = spec.k - 1;
        while (i >= 0 && pick[i] == n - spec.k + i) --i;
        if (i < 0) break;
        ++pick[i];
        for (int j = i + 1; j < spec.k; ++j) pick[j] = pick[j - 1] + 1;
    }
    return {};
}

namespace detail {

inline Dataset pad(const Dataset& ds, int count, int group, bool dominating) {
    if (count < 0) throw ParameterError("count must be non-negative");
    if (group < 0 || group >= static_cast<int>(ds.groups().size())) throw ParameterError("unknown group");
    if (count == 0) return ds;
    const std::int64_t scale = ds.grid().scale;
    std::vector<std::int64_t> edge(ds.dim());
    for (int i = 0; i < ds.dim(); ++i) {
        std::int64_t v = dominating ? 0 : scale;
        for (const Candidate& c : ds.candidates()) v = dominating ? std::max(v, c.ticks[i]) : std::min(v, c.ticks[i]);
        if (dominating ? v >= scale : v <= 0)
            throw ConstructionError("coordinate " + std::to_string(i) + " already at " + (dominating ? "1" : "0") +
                                    "; no margin left for a strictly " + (dominating ? "dominating" : "dominated") +
                                    " candidate");
        edge[i] = dominating ? v + 1 : v - 1;
    }
    std::vector<Candidate> cs(ds.candidates().begin(), ds.candidates().end());
    int nextId = 0;
    for (const Candidate& c : cs) nextId = std::max(nextId, c.id + 1);
    for (int j = 0; j < count; ++j) cs.push_back(Candidate{nextId++, edge, scale, group});
    return Dataset(std::move(cs), ds.groups(), ds.protectedGroup(), ds.grid(), ds.columnNames());
}

}  // namespace detail

/// Appends `count` copies of a candidate one grid tick below the minimum of every coordinate.
inline Dataset padDominated(const Dataset& ds, int count, int group) { return detail::pad(ds, count, group, false); }

/// Appends `count` copies of a candidate one grid tick above the maximum of every coordinate.
inline Dataset padDominating(const Dataset& ds, int count, int group) { return detail::pad(ds, count, group, true); }

/// Reproducible instance with scores on multiples of `step` (which must divide
/// 1 on the 6-place grid); `interior` keeps scores away from 0 and 1.
inline Dataset genRandomInstance(std::uint64_t seed, int n, int d, const Rational& step, double pG1,
                                 bool interior = false) {
    if (n < 1 || d < 1) throw ParameterError("need n >= 1 and d >= 1");
    if (step <= 0 || step > 1) throw ParameterError("grid step must be in (0, 1]");
    Rational cells = 1 / step;
    if (cells.get_den() != 1) throw ParameterError("grid step must divide 1");
    const Grid grid = Grid::withPlaces(6);
    const long steps = cells.get_num().get_si();
    if (grid.scale % steps != 0) throw ParameterError("grid step is not a multiple of the score grid");
    const std::int64_t tick = grid.scale / steps;
    const long lo = interior ? 1 : 0;
    const long hi = interior ? std::max(1L, steps - 1) : steps;

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<long> value(lo, hi);
    std::bernoulli_distribution label(std::clamp(pG1, 0.0, 1.0));
    std::vector<Candidate> cs;
    for (int i = 0; i < n; ++i) {
        Candidate c;
        c.id = i;
        c.scale = grid.scale;
        for (int j = 0; j < d; ++j) c.ticks.push_back(value(rng) * tick);
        c.group = label(rng) ? 0 : 1;
        cs.push_back(std::move(c));
    }
    return Dataset(std::move(cs), {"G1", "G2"}, 0, grid);
}

/// Uniform point of the simplex rounded to multiples of 1/denominator.
inline WeightVector randomSimplexWeight(std::mt19937_64& rng, int d, long denominator = 1000) {
    std::uniform_int_distribution<long> cut(0, denominator);
    std::vector<long> cuts{0, denominator};
    for (int i = 0; i + 1 < d; ++i) cuts.push_back(cut(rng));
    std::sort(cuts.begin(), cuts.end());
    std::vector<Rational> w;
    for (int i = 0; i < d; ++i) w.emplace_back(cuts[i + 1] - cuts[i], denominator);
    for (auto& x : w) x.canonicalize();
    return WeightVector(std::move(w));
}

/// Box {w1 in [lb, ub]} over the 2-D simplex.
inline WeightBox intervalBox(const Rational& lb, const Rational& ub) {
    WeightBox box = WeightBox::simplex(2);
    box.add({Rational(1), Rational(0)}, ub);
    box.add({Rational(-1), Rational(0)}, -lb);
    return box;
}

}  // namespace fairtopk
