/*
 * This Source Code Form is subject to the terms of the Mozilla Public
 * License, v. 2.0. If a copy of the MPL was not distributed with this
 * file, You can obtain one at https://mozilla.org/MPL/2.0/.
 */

#pragma once

#include <algorithm>
#include <functional>
#include <span>
#include <vector>

#include "fairtopk/model.hpp"

namespace fairtopk {

/// x_d = sum_i coeffs[i] * x_i + intercept, all in grid ticks.
struct DualHyperplane {
    int owner = 0;
    std::vector<std::int64_t> coeffs;
    std::int64_t intercept = 0;
    std::int64_t scale = 1;

    /// Height above (x_1, ..., x_{d-1}).
    Rational evaluate(std::span<const Rational> x) const {
        if (x.size() != coeffs.size()) throw ParameterError("point dimension mismatch");
        Rational acc = BigInt(static_cast<long>(intercept));
        for (std::size_t i = 0; i < coeffs.size(); ++i) acc += x[i] * BigInt(static_cast<long>(coeffs[i]));
        return acc / BigInt(static_cast<long>(scale));
    }
};

/// Dual of a 2-D candidate: y = slope * x + intercept (ticks), so that
/// evaluating at x gives the score under w = (x, 1 - x).
struct DualLine {
    int owner = 0;
    std::int64_t slope = 0;
    std::int64_t intercept = 0;
    int stableIndex = 0;
    bool protectedOwner = false;

    friend bool operator==(const DualLine&, const DualLine&) = default;
};

inline DualHyperplane dualTransform(const Candidate& c) {
    DualHyperplane h;
    h.owner = c.id;
    h.scale = c.scale;
    const int d = c.dim();
    h.intercept = c.ticks[d - 1];
    for (int i = 0; i + 1 < d; ++i) h.coeffs.push_back(c.ticks[i] - c.ticks[d - 1]);
    return h;
}

inline DualLine dualLine(const Candidate& c, int stableIndex, bool isProtected) {
    if (c.dim() != 2) throw UnsupportedDimensionError("dual lines need d = 2");
    return DualLine{c.id, c.ticks[0] - c.ticks[1], c.ticks[1], stableIndex, isProtected};
}

inline std::vector<DualLine> dualLines(const Dataset& ds) {
    std::vector<DualLine> out;
    out.reserve(ds.size());
    for (int pos = 0; pos < ds.size(); ++pos) out.push_back(dualLine(ds[pos], pos, ds.isProtectedAt(pos)));
    return out;
}

/// Strict in every coordinate.
inline bool dominates(const Candidate& a, const Candidate& b) {
    if (a.dim() != b.dim()) throw ParameterError("dimension mismatch");
    for (int i = 0; i < a.dim(); ++i)
        if (a.ticks[i] <= b.ticks[i]) return false;
    return true;
}

/// Ids of candidates dominated by at most k - 1 others, ascending.
// Pairwise counting; the output-sensitive skyband algorithms are not needed at
// the sizes this runs on.
inline std::vector<int> kSkyband(const Dataset& ds, int k) {
    if (k < 1 || k > ds.size()) throw ParameterError("k out of range");
    std::vector<int> ids;
    const int n = ds.size();
    for (int i = 0; i < n; ++i) {
        int dominatedBy = 0;
        for (int j = 0; j < n && dominatedBy < k; ++j)
            if (j != i && dominates(ds[j], ds[i])) ++dominatedBy;
        if (dominatedBy < k) ids.push_back(ds[i].id);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

/// Preprocessing step: returns the ids to keep for a given k. Every top-k
/// subset of every weight vector must survive.
using Reducer = std::function<std::vector<int>(const Dataset&, int)>;

inline Reducer skybandReducer() {
    return [](const Dataset& ds, int k) { return kSkyband(ds, k); };
}

inline Dataset preprocess(const Dataset& ds, int k, std::span<const Reducer> reducers) {
    Dataset current = ds;
    for (const auto& reduce : reducers) {
        std::vector<int> keep = reduce(current, k);
        if (static_cast<int>(keep.size()) < k) throw StateError("reducer dropped below k candidates");
        current = current.restrict(keep);
    }
    return current;
}

}  // namespace fairtopk
