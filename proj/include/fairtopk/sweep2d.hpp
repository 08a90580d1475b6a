/*
 * This Source Code Form is subject to the terms of the Mozilla Public
 * License, v. 2.0. If a copy of the MPL was not distributed with this
 * file, You can obtain one at https://mozilla.org/MPL/2.0/.
 */

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "fairtopk/control.hpp"
#include "fairtopk/kinetic_tournament.hpp"
#include "fairtopk/model.hpp"

namespace fairtopk {

struct SweepCounters {
    std::uint64_t iterations = 0;
    std::uint64_t queueEvents = 0;
    std::uint64_t boundaryEvents = 0;
    std::uint64_t exchanges = 0;
    std::uint64_t simultaneousEvents = 0;
    std::uint64_t fairnessChecks = 0;
};

struct SweepOutcome {
    Verdict verdict = Verdict::Infeasible;
    std::optional<KineticTime> t;
    WeightVector w;
    std::vector<int> subset;  // a fair top-k at w when found
    SweepCounters counters;

    bool found() const { return verdict == Verdict::Found; }
};

/// State handed to an observer after every sweep step.
struct SweepProbe {
    KineticTime now;
    const KineticTournament& inside;    // min-queue holding the current top-k
    const KineticTournament* outside;   // max-queue of the rest (null when k = n)
};

struct SweepOptions {
    SolveControl control;
    std::function<void(const SweepProbe&)> observer;
};

/// Earliest t >= now at which `outsideTop` rises above `insideTop` (perturbed), +inf if never.
inline KineticTime intersectTime(const DualLine& insideTop, const DualLine& outsideTop, const KineticTime& now) {
    if (outsideTop.slope <= insideTop.slope) return KineticTime::infinity();
    KineticTime t = crossingTime(insideTop, outsideTop);
    return t < now ? now : t;
}

inline WeightVector weightAt(const Rational& t) { return WeightVector({t, Rational(1 - t)}); }

namespace detail {

inline SweepOutcome sweepFound(const Dataset& ds, const FairnessSpec& spec, const KineticTime& t,
                               SweepCounters counters) {
    SweepOutcome out;
    out.verdict = Verdict::Found;
    out.t = t;
    out.w = weightAt(t.toRational());
    out.subset = fairCompletion(ds, spec, topK(ds, out.w, spec.k));
    out.counters = counters;
    return out;
}

}  // namespace detail

/// Sweeps w = (t, 1 - t) for t from lb to ub and returns the first t that
/// admits a fair top-k subset.
inline SweepOutcome findFair2D(const Dataset& ds, const FairnessSpec& spec, const Rational& lb, const Rational& ub,
                               const SweepOptions& options = {}) {
    if (ds.dim() != 2) throw UnsupportedDimensionError("the 2-D sweep needs d = 2");
    spec.checkAgainst(ds);
    if (lb < 0 || ub > 1 || lb > ub) throw ParameterError("need 0 <= lb <= ub <= 1");

    const KineticTime start = KineticTime::fromRational(lb);
    const KineticTime stop = KineticTime::fromRational(ub);
    const int n = ds.size();
    const int k = spec.k;
    SweepCounters counters;

    // The check at lb is tie-aware; afterwards the queues hold the state just after lb.
    ++counters.fairnessChecks;
    if (isFair(spec, fairnessInterval(ds, topK(ds, weightAt(lb), k)))) return detail::sweepFound(ds, spec, start, counters);
    if (k == n || lb == ub) return SweepOutcome{Verdict::Infeasible, std::nullopt, {}, {}, counters};

    std::vector<DualLine> lines = dualLines(ds);
    std::sort(lines.begin(), lines.end(), [&](const DualLine& a, const DualLine& b) { return isAbove(a, b, start); });
    KineticTournament inside(std::vector<DualLine>(lines.begin(), lines.begin() + k), QueueMode::Min, start);
    KineticTournament outside(std::vector<DualLine>(lines.begin() + k, lines.end()), QueueMode::Max, start);
    lines.clear();
    lines.shrink_to_fit();

    KineticTime now = start;
    for (;;) {
        ++counters.iterations;
        if ((counters.iterations & 1023) == 1) {
            if (auto reason = options.control.stopReason())
                return SweepOutcome{*reason, std::nullopt, {}, {}, counters};
        }
        const KineticTime t1 = inside.nextEventTime();
        const KineticTime t2 = outside.nextEventTime();
        const KineticTime t3 = intersectTime(inside.top(), outside.top(), now);
        const KineticTime t = std::min({t1, t2, t3});
        if (t > stop) return SweepOutcome{Verdict::Infeasible, std::nullopt, {}, {}, counters};

        if (t == t3) {
            bool drained = false;
            while (inside.nextEventTime() == t) {
                inside.advance();
                ++counters.queueEvents;
                drained = true;
            }
            while (outside.nextEventTime() == t) {
                outside.advance();
                ++counters.queueEvents;
                drained = true;
            }
            if (inside.now() < t) inside.advanceTo(t);
            if (outside.now() < t) outside.advanceTo(t);
            now = t;

            if (compareValueAt(inside.top(), outside.top(), t) == 0) {
                ++counters.boundaryEvents;
                std::vector<int> tiedInside = inside.collectTiedWithTop(t);
                std::vector<int> tiedOutside = outside.collectTiedWithTop(t);
                int protectedInside = 0;
                int protectedOutside = 0;
                for (int owner : tiedInside) protectedInside += ds.isProtected(ds.byId(owner));
                for (int owner : tiedOutside) protectedOutside += ds.isProtected(ds.byId(owner));
                const int poolSize = static_cast<int>(tiedInside.size() + tiedOutside.size());
                const int pool = protectedInside + protectedOutside;
                ProtectedInterval interval = fairnessInterval(inside.pgCount() - protectedInside, pool, poolSize - pool,
                                                              static_cast<int>(tiedInside.size()));
                ++counters.fairnessChecks;
                if (drained || poolSize > 2) ++counters.simultaneousEvents;
                if (isFair(spec, interval)) return detail::sweepFound(ds, spec, t, counters);
            }

            while (isAbove(outside.top(), inside.top(), t)) {
                const DualLine goingOut = inside.top();
                const DualLine comingIn = outside.top();
                inside.replace(goingOut.owner, comingIn);
                outside.replace(comingIn.owner, goingOut);
                ++counters.exchanges;
            }
        } else if (t == t1) {
            inside.advance();
            ++counters.queueEvents;
            now = t;
        } else {
            outside.advance();
            ++counters.queueEvents;
            now = t;
        }

        if (options.observer) options.observer(SweepProbe{now, inside, &outside});
    }
}

}  // namespace fairtopk
