/*
 * This Source Code Form is subject to the terms of the Mozilla Public
 * License, v. 2.0. If a copy of the MPL was not distributed with this
 * file, You can obtain one at https://mozilla.org/MPL/2.0/.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fairtopk/errors.hpp"
#include "fairtopk/exact.hpp"

namespace fairtopk {

/// Decimal snapping grid: every score is an integer number of ticks of 10^-places.
struct Grid {
    int places = 6;
    std::int64_t scale = 1000000;

    static Grid withPlaces(int places) {
        if (places < 0 || places > 9) throw ParameterError("grid places must be in [0, 9]");
        std::int64_t scale = 1;
        for (int i = 0; i < places; ++i) scale *= 10;
        return Grid{places, scale};
    }

    std::int64_t snap(double value) const {
        if (!std::isfinite(value)) throw ValidationError("non-finite score");
        return static_cast<std::int64_t>(std::llround(value * static_cast<double>(scale)));
    }

    friend bool operator==(const Grid&, const Grid&) = default;
};

/// One item: d scores on the dataset grid plus a group index.
struct Candidate {
    int id = 0;
    std::vector<std::int64_t> ticks;
    std::int64_t scale = 1;
    int group = 0;

    int dim() const { return static_cast<int>(ticks.size()); }
    double value(int i) const { return static_cast<double>(ticks[i]) / static_cast<double>(scale); }
    Rational exact(int i) const {
        Rational r(BigInt(static_cast<long>(ticks[i])), BigInt(static_cast<long>(scale)));
        r.canonicalize();
        return r;
    }
};

class Dataset {
public:
    Dataset(std::vector<Candidate> candidates, std::vector<std::string> groups, int protectedGroup, Grid grid,
            std::vector<std::string> columnNames = {})
        : candidates_(std::move(candidates)),
          groups_(std::move(groups)),
          protectedGroup_(protectedGroup),
          grid_(grid),
          columnNames_(std::move(columnNames)) {
        if (candidates_.empty()) throw ValidationError("dataset must contain at least one candidate");
        if (protectedGroup_ < 0 || protectedGroup_ >= static_cast<int>(groups_.size()))
            throw ValidationError("protected group index out of range");
        dim_ = candidates_.front().dim();
        if (dim_ < 1) throw ValidationError("candidates need at least one score");
        if (!columnNames_.empty() && static_cast<int>(columnNames_.size()) != dim_)
            throw ValidationError("column names do not match dimension");
        positions_.reserve(candidates_.size());
        for (std::size_t pos = 0; pos < candidates_.size(); ++pos) {
            Candidate& c = candidates_[pos];
            if (c.dim() != dim_) throw ValidationError("candidate " + std::to_string(c.id) + " has wrong dimension");
            if (c.scale != grid_.scale) throw ValidationError("candidate scale does not match dataset grid");
            for (std::int64_t t : c.ticks)
                if (t < 0 || t > grid_.scale)
                    throw ValidationError("candidate " + std::to_string(c.id) + " has a score outside [0,1]");
            if (c.group < 0 || c.group >= static_cast<int>(groups_.size()))
                throw ValidationError("candidate " + std::to_string(c.id) + " has unknown group");
            if (!positions_.emplace(c.id, static_cast<int>(pos)).second)
                throw ValidationError("duplicate candidate id " + std::to_string(c.id));
            if (c.group == protectedGroup_) ++protectedCount_;
        }
    }

    /// Two-group dataset from already normalized values; `isProtected[i]` marks G1.
    static Dataset fromValues(const std::vector<std::vector<double>>& rows, const std::vector<bool>& isProtected,
                              int places = 6) {
        if (rows.size() != isProtected.size()) throw ValidationError("rows and labels differ in length");
        Grid grid = Grid::withPlaces(places);
        std::vector<Candidate> cs;
        cs.reserve(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            Candidate c;
            c.id = static_cast<int>(i);
            c.scale = grid.scale;
            c.group = isProtected[i] ? 0 : 1;
            for (double v : rows[i]) c.ticks.push_back(grid.snap(v));
            cs.push_back(std::move(c));
        }
        return Dataset(std::move(cs), {"G1", "G2"}, 0, grid);
    }

    std::span<const Candidate> candidates() const { return candidates_; }
    const Candidate& operator[](std::size_t pos) const { return candidates_[pos]; }
    int size() const { return static_cast<int>(candidates_.size()); }
    int dim() const { return dim_; }
    const Grid& grid() const { return grid_; }
    const std::vector<std::string>& groups() const { return groups_; }
    int protectedGroup() const { return protectedGroup_; }
    int protectedCount() const { return protectedCount_; }
    const std::vector<std::string>& columnNames() const { return columnNames_; }

    bool isProtected(const Candidate& c) const { return c.group == protectedGroup_; }
    bool isProtectedAt(int pos) const { return candidates_[pos].group == protectedGroup_; }

    int positionOf(int id) const {
        auto it = positions_.find(id);
        if (it == positions_.end()) throw ParameterError("unknown candidate id " + std::to_string(id));
        return it->second;
    }
    const Candidate& byId(int id) const { return candidates_[positionOf(id)]; }

    /// Sub-dataset keeping the given ids (original ids are preserved).
    Dataset restrict(std::span<const int> ids) const {
        std::vector<Candidate> kept;
        kept.reserve(ids.size());
        for (int id : ids) kept.push_back(byId(id));
        return Dataset(std::move(kept), groups_, protectedGroup_, grid_, columnNames_);
    }

private:
    std::vector<Candidate> candidates_;
    std::vector<std::string> groups_;
    int protectedGroup_ = 0;
    Grid grid_;
    std::vector<std::string> columnNames_;
    int dim_ = 0;
    int protectedCount_ = 0;
    std::unordered_map<int, int> positions_;
};

struct FairnessSpec {
    int k = 1;
    int lower = 0;
    int upper = 0;

    FairnessSpec() = default;
    FairnessSpec(int k_, int lower_, int upper_) : k(k_), lower(lower_), upper(upper_) {
        if (k < 1) throw ParameterError("k must be positive");
        if (lower < 0 || lower > upper || upper > k) throw ParameterError("need 0 <= lower <= upper <= k");
    }

    void checkAgainst(const Dataset& ds) const {
        if (k > ds.size()) throw ParameterError("k exceeds dataset size");
    }
};

class WeightVector {
public:
    WeightVector() = default;
    explicit WeightVector(std::vector<Rational> w) : w_(std::move(w)) {
        if (w_.empty()) throw ParameterError("empty weight vector");
        Rational sum = 0;
        for (const auto& x : w_) {
            if (x < 0) throw ParameterError("weight components must be non-negative");
            sum += x;
        }
        if (abs(sum - 1) > Rational(1, 1000000000)) throw ParameterError("weights must sum to 1");
        // within tolerance: rescale so the vector lies exactly on the simplex
        if (sum != 1)
            for (auto& x : w_) x /= sum;
    }

    static WeightVector fromDoubles(const std::vector<double>& w) {
        std::vector<Rational> exact;
        exact.reserve(w.size());
        for (double x : w) exact.push_back(fromDouble(x));
        return WeightVector(std::move(exact));
    }

    static WeightVector fromStrings(const std::vector<std::string>& w) {
        std::vector<Rational> exact;
        exact.reserve(w.size());
        for (const auto& x : w) exact.push_back(parseDecimal(x));
        return WeightVector(std::move(exact));
    }

    int dim() const { return static_cast<int>(w_.size()); }
    const Rational& operator[](int i) const { return w_[i]; }
    const std::vector<Rational>& values() const { return w_; }
    std::vector<double> toDoubles() const {
        std::vector<double> out;
        for (const auto& x : w_) out.push_back(x.get_d());
        return out;
    }

    friend bool operator==(const WeightVector& a, const WeightVector& b) { return a.w_ == b.w_; }

private:
    std::vector<Rational> w_;
};

/// One linear inequality a . w <= b over the weight space.
struct WeightInequality {
    std::vector<Rational> a;
    Rational b;
};

/// Feasible weight region: the listed inequalities plus w >= 0 and sum(w) = 1.
struct WeightBox {
    int d = 0;
    std::vector<WeightInequality> inequalities;

    static WeightBox simplex(int d) { return WeightBox{d, {}}; }

    void add(std::vector<Rational> a, Rational b) {
        if (static_cast<int>(a.size()) != d) throw ParameterError("inequality dimension mismatch");
        inequalities.push_back({std::move(a), std::move(b)});
    }

    bool contains(const WeightVector& w) const {
        if (w.dim() != d) return false;
        Rational sum = 0;
        for (int i = 0; i < d; ++i) {
            if (w[i] < 0) return false;
            sum += w[i];
        }
        if (sum != 1) return false;
        for (const auto& h : inequalities) {
            Rational lhs = 0;
            for (int i = 0; i < d; ++i) lhs += h.a[i] * w[i];
            if (lhs > h.b) return false;
        }
        return true;
    }
};

inline WeightBox fromEpsilonBox(const WeightVector& w0, const Rational& eps) {
    if (eps < 0) throw ParameterError("eps must be non-negative");
    if (eps > 1) throw ParameterError("eps must not exceed 1");
    WeightBox box = WeightBox::simplex(w0.dim());
    for (int i = 0; i < w0.dim(); ++i) {
        std::vector<Rational> up(w0.dim(), Rational(0));
        up[i] = 1;
        box.add(up, w0[i] + eps);
        std::vector<Rational> down(w0.dim(), Rational(0));
        down[i] = -1;
        box.add(down, -(w0[i] - eps));
    }
    return box;
}

inline WeightBox fromEpsilonBox(const WeightVector& w0, double eps) {
    if (!std::isfinite(eps)) throw ParameterError("eps must be finite");
    if (eps < 0) throw ParameterError("eps must be non-negative");
    return fromEpsilonBox(w0, fromDouble(eps));
}

inline Rational exactScore(const WeightVector& w, const Candidate& c) {
    if (w.dim() != c.dim()) throw ParameterError("weight/candidate dimension mismatch");
    Rational sum = 0;
    for (int i = 0; i < c.dim(); ++i) sum += w[i] * BigInt(static_cast<long>(c.ticks[i]));
    return sum / BigInt(static_cast<long>(c.scale));
}

inline double scoreOf(const WeightVector& w, const Candidate& c) { return exactScore(w, c).get_d(); }

/// Integer scores proportional to the exact scores of every candidate (common
/// positive factor), so ties and order are exact and cheap to compare.
inline std::vector<BigInt> scaledScores(const Dataset& ds, const WeightVector& w) {
    if (w.dim() != ds.dim()) throw ParameterError("weight/dataset dimension mismatch");
    BigInt common = 1;
    for (const auto& x : w.values()) mpz_lcm(common.get_mpz_t(), common.get_mpz_t(), x.get_den_mpz_t());
    std::vector<BigInt> weights;
    for (const auto& x : w.values()) weights.push_back(x.get_num() * (common / x.get_den()));
    std::vector<BigInt> out(ds.size());
    for (int pos = 0; pos < ds.size(); ++pos) {
        BigInt acc = 0;
        const Candidate& c = ds[pos];
        for (int i = 0; i < ds.dim(); ++i)
            if (c.ticks[i] != 0 && weights[i] != 0) acc += weights[i] * static_cast<long>(c.ticks[i]);
        out[pos] = std::move(acc);
    }
    return out;
}

/// Top-k as tie classes: every valid top-k subset is strictlyIn plus `slots`
/// members of tiedPool. tiedPool is empty unless the tie at the k-th score
/// straddles the cut. Ids are sorted ascending.
struct TopKResult {
    std::vector<int> strictlyIn;
    std::vector<int> tiedPool;
    int slots = 0;

    bool isValidSubset(std::span<const int> subset, int k) const {
        if (static_cast<int>(subset.size()) != k) return false;
        std::vector<int> sorted(subset.begin(), subset.end());
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return false;
        int fromPool = 0;
        for (int id : sorted) {
            if (std::binary_search(strictlyIn.begin(), strictlyIn.end(), id)) continue;
            if (!std::binary_search(tiedPool.begin(), tiedPool.end(), id)) return false;
            ++fromPool;
        }
        return fromPool == slots;
    }
};

inline TopKResult topK(const Dataset& ds, const WeightVector& w, int k) {
    if (k < 1 || k > ds.size()) throw ParameterError("k out of range");
    std::vector<BigInt> scores = scaledScores(ds, w);
    std::vector<BigInt> sorted = scores;
    std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end(), std::greater<>());
    const BigInt kth = sorted[k - 1];
    TopKResult r;
    for (int pos = 0; pos < ds.size(); ++pos) {
        int order = cmp(scores[pos], kth);
        if (order > 0) r.strictlyIn.push_back(ds[pos].id);
        else if (order == 0) r.tiedPool.push_back(ds[pos].id);
    }
    // a tie class that fits entirely leaves no choice
    if (r.strictlyIn.size() + r.tiedPool.size() == static_cast<std::size_t>(k)) {
        r.strictlyIn.insert(r.strictlyIn.end(), r.tiedPool.begin(), r.tiedPool.end());
        r.tiedPool.clear();
    }
    std::sort(r.strictlyIn.begin(), r.strictlyIn.end());
    std::sort(r.tiedPool.begin(), r.tiedPool.end());
    r.slots = k - static_cast<int>(r.strictlyIn.size());
    return r;
}

struct ProtectedInterval {
    int minG1 = 0;
    int maxG1 = 0;
    friend bool operator==(const ProtectedInterval&, const ProtectedInterval&) = default;
};

/// Tight protected-count range over all choices of `slots` tied members.
inline ProtectedInterval fairnessInterval(int fixedProtected, int tiedProtected, int tiedOther, int slots) {
    if (slots < 0 || slots > tiedProtected + tiedOther) throw StateError("slots exceed the tie pool");
    return {fixedProtected + std::max(0, slots - tiedOther), fixedProtected + std::min(slots, tiedProtected)};
}

inline ProtectedInterval fairnessInterval(const Dataset& ds, const TopKResult& r) {
    int fixed = 0;
    for (int id : r.strictlyIn) fixed += ds.isProtected(ds.byId(id));
    int g = 0;
    for (int id : r.tiedPool) g += ds.isProtected(ds.byId(id));
    return fairnessInterval(fixed, g, static_cast<int>(r.tiedPool.size()) - g, r.slots);
}

inline bool isFair(const FairnessSpec& spec, ProtectedInterval interval) {
    return std::max(interval.minG1, spec.lower) <= std::min(interval.maxG1, spec.upper);
}

inline int protectedCount(const Dataset& ds, std::span<const int> ids) {
    int count = 0;
    for (int id : ids) count += ds.isProtected(ds.byId(id));
    return count;
}

/// Independent check of a solver claim: w lies in the box, subset is a valid
/// top-k at w, and its protected count is within bounds.
inline bool verifyFairSubset(const Dataset& ds, const FairnessSpec& spec, const WeightBox& box,
                             const WeightVector& w, std::span<const int> subset) {
    if (!box.contains(w)) return false;
    TopKResult r = topK(ds, w, spec.k);
    if (!r.isValidSubset(subset, spec.k)) return false;
    int g = protectedCount(ds, subset);
    return g >= spec.lower && g <= spec.upper;
}

/// Picks a fair completion of `r` when one exists (empty result otherwise).
inline std::vector<int> fairCompletion(const Dataset& ds, const FairnessSpec& spec, const TopKResult& r) {
    ProtectedInterval in = fairnessInterval(ds, r);
    if (!isFair(spec, in)) return {};
    int target = std::max(in.minG1, spec.lower);
    int fixed = 0;
    for (int id : r.strictlyIn) fixed += ds.isProtected(ds.byId(id));
    int wantProtected = target - fixed;
    int wantOther = r.slots - wantProtected;
    std::vector<int> out = r.strictlyIn;
    for (int id : r.tiedPool) {
        bool p = ds.isProtected(ds.byId(id));
        if (p && wantProtected > 0) {
            out.push_back(id);
            --wantProtected;
        } else if (!p && wantOther > 0) {
            out.push_back(id);
            --wantOther;
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace fairtopk
