/*
 * This Source Code Form is subject to the terms of the Mozilla Public
 * License, v. 2.0. If a copy of the MPL was not distributed with this
 * file, You can obtain one at https://mozilla.org/MPL/2.0/.
 */

#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <unordered_set>
#include <vector>

#include "fairtopk/control.hpp"
#include "fairtopk/geometry.hpp"
#include "fairtopk/model.hpp"
#include "fairtopk/seidel_lp.hpp"

namespace fairtopk {

/// Canonical top-k subset: strictly increasing candidate ids.
struct SubsetKey {
    std::vector<int> ids;

    static SubsetKey from(std::vector<int> ids) {
        std::sort(ids.begin(), ids.end());
        if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw ParameterError("subset has repeated ids");
        return SubsetKey{std::move(ids)};
    }

    friend bool operator==(const SubsetKey&, const SubsetKey&) = default;
    friend auto operator<=>(const SubsetKey&, const SubsetKey&) = default;
};

struct HdCounters {
    std::uint64_t lps = 0;
    std::uint64_t expanded = 0;
    std::uint64_t enqueued = 0;
    std::uint64_t pruned = 0;
};

struct HdOptions {
    int workers = 1;
    std::uint64_t seed = 0;
    std::uint64_t budget = 10'000'000;  // max subsets expanded
    bool dominancePruning = true;
    bool recordVisited = false;
    std::optional<WeightVector> start;  // used as the seed point when it lies in the box
    SolveControl control;
};

struct HdOutcome {
    Verdict verdict = Verdict::Infeasible;
    WeightVector w;
    std::vector<int> subset;
    HdCounters counters;
    std::vector<SubsetKey> visited;  // expanded subsets, only with recordVisited

    bool found() const { return verdict == Verdict::Found; }
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct CountsHash {
    std::size_t operator()(const std::vector<int>& v) const {
        std::uint64_t h = 0x51ed270b27f6a1c3ULL;
        for (int x : v) h = mix64(h ^ static_cast<std::uint64_t>(x));
        return static_cast<std::size_t>(h);
    }
};

/// Insert-once set split over independently locked shards.
class ShardedSet {
public:
    bool insert(const std::vector<int>& key) {
        std::size_t h = CountsHash{}(key);
        Shard& s = shards_[h % kShards];
        std::lock_guard lock(s.mutex);
        return s.keys.insert(key).second;
    }

    std::vector<std::vector<int>> snapshot() const {
        std::vector<std::vector<int>> out;
        for (const auto& s : shards_) {
            std::lock_guard lock(s.mutex);
            out.insert(out.end(), s.keys.begin(), s.keys.end());
        }
        return out;
    }

    std::size_t size() const {
        std::size_t n = 0;
        for (const auto& s : shards_) {
            std::lock_guard lock(s.mutex);
            n += s.keys.size();
        }
        return n;
    }

private:
    static constexpr std::size_t kShards = 16;
    struct Shard {
        mutable std::mutex mutex;
        std::unordered_set<std::vector<int>, CountsHash> keys;
    };
    Shard shards_[kShards];
};

/// Candidates with identical score vectors, searched as one unit.
struct ScoreGroup {
    std::vector<int> members;  // dataset positions, ascending
    int protectedMembers = 0;
    int rep = 0;               // position of the first member
};

inline std::vector<ScoreGroup> collapseDuplicates(const Dataset& ds) {
    std::map<std::vector<std::int64_t>, int> index;
    std::vector<ScoreGroup> groups;
    for (int pos = 0; pos < ds.size(); ++pos) {
        auto [it, fresh] = index.emplace(ds[pos].ticks, static_cast<int>(groups.size()));
        if (fresh) groups.push_back(ScoreGroup{{}, 0, pos});
        ScoreGroup& g = groups[it->second];
        g.members.push_back(pos);
        g.protectedMembers += ds.isProtectedAt(pos);
    }
    return groups;
}

}  // namespace detail

/// Breadth-first search over top-k subsets of the (k-1)-level cells that meet
/// the box, run by a pool of workers sharing one job queue.
class KLevelSearch {
public:
    KLevelSearch(const Dataset& ds, const FairnessSpec& spec, const WeightBox& box, HdOptions options)
        : ds_(ds), spec_(spec), box_(box), options_(std::move(options)), groups_(detail::collapseDuplicates(ds)) {
        if (ds.dim() < 2 || ds.dim() > kMaxLpDimension)
            throw UnsupportedDimensionError("k-level search supports 2 <= d <= " + std::to_string(kMaxLpDimension));
        if (box.d != ds.dim()) throw ParameterError("box dimension does not match dataset");
        if (options_.workers < 1) throw ParameterError("workers must be at least 1");
        spec.checkAgainst(ds);
        const int g = static_cast<int>(groups_.size());
        dominance_.assign(static_cast<std::size_t>(g) * g, false);
        for (int a = 0; a < g; ++a)
            for (int b = 0; b < g; ++b)
                if (a != b) dominance_[a * g + b] = dominates(ds[groups_[a].rep], ds[groups_[b].rep]);
    }

    HdOutcome run() {
        std::optional<WeightVector> w0;
        if (options_.start && box_.contains(*options_.start)) {
            w0 = options_.start;
        } else {
            w0 = feasiblePointInBox(box_, ds_.dim(), options_.seed);
            ++lps_;
        }
        if (!w0) return finish(Verdict::Infeasible);

        TopKResult r = topK(ds_, *w0, spec_.k);
        std::vector<int> completion = fairCompletion(ds_, spec_, r);
        if (!completion.empty()) {
            publish(*w0, std::move(completion));
            return finish(Verdict::Found);
        }

        std::vector<int> seed = countsOf(r);
        seen_.insert(seed);
        expand(seed);
        if (!stop_.load()) {
            std::vector<std::thread> pool;
            for (int i = 1; i < options_.workers; ++i) pool.emplace_back([this] { workerLoop(); });
            workerLoop();
            for (auto& t : pool) t.join();
        }

        if (result_) return finish(Verdict::Found);
        if (budgetHit_.load()) return finish(Verdict::BudgetExhausted);
        if (stopReason_) return finish(*stopReason_);
        return finish(Verdict::Infeasible);
    }

    /// Separation LP for a count state: Some(w) when a weight vector in the box
    /// puts every chosen candidate at or above every other one.
    std::optional<WeightVector> separate(const std::vector<int>& counts, std::uint64_t seed) const {
        const int d = ds_.dim();
        LinearProgram lp = simplexProgram(box_, 1);
        for (std::size_t g = 0; g < groups_.size(); ++g) {
            const Candidate& c = ds_[groups_[g].rep];
            // score(w) - lam, with score = sum_i (t_i - t_d) w_i + t_d over reduced weights
            std::vector<Rational> a(d, Rational(0));
            for (int i = 0; i + 1 < d; ++i) a[i] = Rational(static_cast<long>(c.ticks[i] - c.ticks[d - 1]));
            a[d - 1] = -1;
            Rational constant = Rational(static_cast<long>(c.ticks[d - 1]));
            const int size = static_cast<int>(groups_[g].members.size());
            if (counts[g] == size) lp.addGreaterEqual(a, -constant);
            else if (counts[g] == 0) lp.addLessEqual(a, -constant);
            else lp.addEquality(a, -constant);
        }
        LpSolution s = solve(lp, seed);
        if (!s.feasible()) return std::nullopt;
        return liftSimplex(std::span<const Rational>(s.x).first(d - 1), d);
    }

    const std::vector<detail::ScoreGroup>& groups() const { return groups_; }

private:
    std::vector<int> countsOf(const TopKResult& r) const {
        std::vector<int> subset = r.strictlyIn;
        subset.insert(subset.end(), r.tiedPool.begin(), r.tiedPool.begin() + r.slots);
        std::vector<int> groupOf(ds_.size());
        for (std::size_t g = 0; g < groups_.size(); ++g)
            for (int pos : groups_[g].members) groupOf[pos] = static_cast<int>(g);
        std::vector<int> counts(groups_.size(), 0);
        for (int id : subset) ++counts[groupOf[ds_.positionOf(id)]];
        return counts;
    }

    // Range of protected counts over all subsets with these group counts.
    ProtectedInterval intervalOf(const std::vector<int>& counts) const {
        ProtectedInterval in;
        for (std::size_t g = 0; g < groups_.size(); ++g) {
            const int size = static_cast<int>(groups_[g].members.size());
            const int p = groups_[g].protectedMembers;
            in.minG1 += std::max(0, counts[g] - (size - p));
            in.maxG1 += std::min(counts[g], p);
        }
        return in;
    }

    std::vector<int> concreteSubset(const std::vector<int>& counts) const {
        ProtectedInterval in = intervalOf(counts);
        int extra = std::max(in.minG1, spec_.lower) - in.minG1;  // protected picks above the minimum
        std::vector<int> ids;
        for (std::size_t g = 0; g < groups_.size(); ++g) {
            const auto& group = groups_[g];
            const int size = static_cast<int>(group.members.size());
            int minP = std::max(0, counts[g] - (size - group.protectedMembers));
            int maxP = std::min(counts[g], group.protectedMembers);
            int takeP = minP + std::min(extra, maxP - minP);
            extra -= takeP - minP;
            int takeO = counts[g] - takeP;
            for (int pos : group.members) {
                bool p = ds_.isProtectedAt(pos);
                if (p && takeP > 0) {
                    ids.push_back(ds_[pos].id);
                    --takeP;
                } else if (!p && takeO > 0) {
                    ids.push_back(ds_[pos].id);
                    --takeO;
                }
            }
        }
        std::sort(ids.begin(), ids.end());
        return ids;
    }

    SubsetKey keyOf(const std::vector<int>& counts) const {
        std::vector<int> ids;
        for (std::size_t g = 0; g < groups_.size(); ++g)
            for (int i = 0; i < counts[g]; ++i) ids.push_back(ds_[groups_[g].members[i]].id);
        return SubsetKey::from(std::move(ids));
    }

    void publish(const WeightVector& w, std::vector<int> subset) {
        std::lock_guard lock(resultMutex_);
        if (result_) return;  // first writer wins
        result_ = std::make_pair(w, std::move(subset));
        stop_.store(true);
    }

    void expand(const std::vector<int>& counts) {
        if (expanded_.fetch_add(1) >= options_.budget) {
            budgetHit_.store(true);
            stop_.store(true);
            return;
        }
        if (options_.recordVisited) visited_.insert(counts);
        const int g = static_cast<int>(groups_.size());
        std::vector<std::vector<int>> fresh;
        for (int o = 0; o < g; ++o) {
            if (counts[o] == 0) continue;
            for (int c = 0; c < g; ++c) {
                if (c == o || counts[c] == static_cast<int>(groups_[c].members.size())) continue;
                if (options_.dominancePruning && dominance_[o * g + c]) {
                    pruned_.fetch_add(1, std::memory_order_relaxed);
                    continue;
                }
                std::vector<int> next = counts;
                --next[o];
                ++next[c];
                if (seen_.insert(next)) fresh.push_back(std::move(next));
            }
        }
        if (fresh.empty()) return;
        enqueued_.fetch_add(fresh.size(), std::memory_order_relaxed);
        {
            std::lock_guard lock(queueMutex_);
            for (auto& s : fresh) queue_.push_back(std::move(s));
        }
        queueReady_.notify_all();
    }

    void process(const std::vector<int>& counts) {
        std::uint64_t seed = options_.seed ^ detail::CountsHash{}(counts);
        std::optional<WeightVector> w = separate(counts, seed);
        lps_.fetch_add(1, std::memory_order_relaxed);
        if (!w) return;
        if (isFair(spec_, intervalOf(counts))) {
            publish(*w, concreteSubset(counts));
            return;
        }
        expand(counts);
    }

    // Workers block while the queue is empty but some peer is still
    // processing a job, since that job may enqueue more work.
    void workerLoop() {
        std::unique_lock lock(queueMutex_);
        for (;;) {
            queueReady_.wait(lock, [&] { return stop_.load() || !queue_.empty() || active_ == 0; });
            if (stop_.load() || queue_.empty()) break;
            std::vector<int> job = std::move(queue_.front());
            queue_.pop_front();
            ++active_;
            lock.unlock();

            if (auto reason = options_.control.stopReason()) {
                std::lock_guard guard(resultMutex_);
                stopReason_ = reason;
                stop_.store(true);
            } else {
                process(job);
            }

            lock.lock();
            --active_;
            if (active_ == 0 || stop_.load()) queueReady_.notify_all();
        }
        queueReady_.notify_all();
    }

    HdOutcome finish(Verdict v) {
        HdOutcome out;
        out.verdict = v;
        if (v == Verdict::Found) {
            out.w = result_->first;
            out.subset = result_->second;
        }
        out.counters.lps = lps_.load();
        out.counters.expanded = std::min<std::uint64_t>(expanded_.load(), options_.budget);
        out.counters.enqueued = enqueued_.load();
        out.counters.pruned = pruned_.load();
        if (options_.recordVisited) {
            for (const auto& counts : visited_.snapshot()) out.visited.push_back(keyOf(counts));
            std::sort(out.visited.begin(), out.visited.end());
        }
        return out;
    }

    const Dataset& ds_;
    FairnessSpec spec_;
    WeightBox box_;
    HdOptions options_;
    std::vector<detail::ScoreGroup> groups_;
    std::vector<bool> dominance_;  // dominance_[a * g + b]: rep a dominates rep b

    detail::ShardedSet seen_;
    detail::ShardedSet visited_;
    std::mutex queueMutex_;
    std::condition_variable queueReady_;
    std::deque<std::vector<int>> queue_;
    int active_ = 0;

    std::atomic<bool> stop_{false};
    std::atomic<bool> budgetHit_{false};
    std::atomic<std::uint64_t> lps_{0};
    std::atomic<std::uint64_t> expanded_{0};
    std::atomic<std::uint64_t> enqueued_{0};
    std::atomic<std::uint64_t> pruned_{0};

    std::mutex resultMutex_;
    std::optional<std::pair<WeightVector, std::vector<int>>> result_;
    std::optional<Verdict> stopReason_;
};

inline HdOutcome findFairHD(const Dataset& ds, const FairnessSpec& spec, const WeightBox& box,
                            const HdOptions& options = {}) {
    KLevelSearch search(ds, spec, box, options);
    return search.run();
}

}  // namespace fairtopk
