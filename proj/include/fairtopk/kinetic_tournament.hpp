/*
 * This Source Code Form is subject to the terms of the Mozilla Public
 * License, v. 2.0. If a copy of the MPL was not distributed with this
 * file, You can obtain one at https://mozilla.org/MPL/2.0/.
 */

#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "fairtopk/exact.hpp"
#include "fairtopk/geometry.hpp"

namespace fairtopk {

/// Sign of value(a) - value(b) at time t (values only, no perturbation).
inline int compareValueAt(const DualLine& a, const DualLine& b, const KineticTime& t) {
    int128 diff = static_cast<int128>(a.slope - b.slope) * t.num + static_cast<int128>(a.intercept - b.intercept) * t.den;
    return signOf(diff);
}

/// Perturbed order at t + eps: value, then slope, then smaller stableIndex.
inline bool isAbove(const DualLine& a, const DualLine& b, const KineticTime& t) {
    int byValue = compareValueAt(a, b, t);
    if (byValue != 0) return byValue > 0;
    if (a.slope != b.slope) return a.slope > b.slope;
    return a.stableIndex < b.stableIndex;
}

/// Time where the two lines meet, +inf for parallel (or identical) lines.
inline KineticTime crossingTime(const DualLine& a, const DualLine& b) {
    if (a.slope == b.slope) return KineticTime::infinity();
    return KineticTime::make(b.intercept - a.intercept, a.slope - b.slope);
}

enum class QueueMode { Min, Max };

/// Kinetic tournament tree with a fixed number of leaves. Nodes live in a
/// flat pre-order array: the left child of node i is i + 1 and the right child
/// is i + 2 * (leaves under the left child).
class KineticTournament {
public:
    KineticTournament(std::vector<DualLine> lines, QueueMode mode, KineticTime start)
        : mode_(mode), now_(start), leaves_(std::move(lines)) {
        if (leaves_.empty()) throw ParameterError("kinetic tournament needs at least one line");
        if (start.isInfinite()) throw ParameterError("start time must be finite");
        nodes_.reserve(2 * leaves_.size() - 1);
        leafNode_.assign(leaves_.size(), -1);
        slotOf_.reserve(leaves_.size() * 2);
        for (std::size_t slot = 0; slot < leaves_.size(); ++slot) {
            if (!slotOf_.emplace(leaves_[slot].owner, static_cast<int>(slot)).second)
                throw ParameterError("duplicate line owner");
            pgCount_ += leaves_[slot].protectedOwner;
        }
        build(0, static_cast<int>(leaves_.size()), -1);
        for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) recompute(i);
        lastNodeUpdates_ = 0;
    }

    QueueMode mode() const { return mode_; }
    const KineticTime& now() const { return now_; }
    int size() const { return static_cast<int>(leaves_.size()); }
    int pgCount() const { return pgCount_; }
    const DualLine& top() const { return leaves_[nodes_[0].winner]; }
    const std::vector<DualLine>& leaves() const { return leaves_; }
    bool contains(int owner) const { return slotOf_.count(owner) != 0; }

    /// Earliest pending certificate failure. May equal now() while simultaneous
    /// events at the current time have not all been processed.
    KineticTime nextEventTime() const { return nodes_[0].subtreeMin; }

    /// Processes one certificate failure at nextEventTime().
    void advance() {
        KineticTime t = nodes_[0].subtreeMin;
        if (t.isInfinite()) throw StateError("no pending kinetic event");
        now_ = t;
        int i = 0;
        while (!(nodes_[i].cert == t)) {
            int left = nodes_[i].left;
            i = nodes_[left].subtreeMin == t ? left : nodes_[i].right;
        }
        lastNodeUpdates_ = 0;
        updatePath(i);
        ++events_;
    }

    /// Moves the clock to t without processing events; t must not pass the next event.
    void advanceTo(const KineticTime& t) {
        if (t < now_) throw StateError("time cannot move backwards");
        if (t > nextEventTime()) throw StateError("cannot skip pending kinetic events");
        now_ = t;
    }

    /// Swaps the leaf owned by `outOwner` for `in` at the current time.
    void replace(int outOwner, const DualLine& in) {
        auto it = slotOf_.find(outOwner);
        if (it == slotOf_.end()) throw ParameterError("line " + std::to_string(outOwner) + " is not in the queue");
        int slot = it->second;
        if (in.owner != outOwner && slotOf_.count(in.owner)) throw ParameterError("incoming line already queued");
        pgCount_ += static_cast<int>(in.protectedOwner) - static_cast<int>(leaves_[slot].protectedOwner);
        slotOf_.erase(it);
        slotOf_.emplace(in.owner, slot);
        leaves_[slot] = in;
        lastNodeUpdates_ = 0;
        updatePath(leafNode_[slot]);
    }

    /// Owners of all leaves whose value at t equals the top's value at t.
    std::vector<int> collectTiedWithTop(const KineticTime& t) const {
        std::vector<int> out;
        const DualLine& best = top();
        collect(0, best, t, out);
        return out;
    }

    int lastNodeUpdates() const { return lastNodeUpdates_; }
    std::uint64_t eventsProcessed() const { return events_; }
    int depth() const { return depthOf(0); }

private:
    struct Node {
        int left = -1;
        int right = -1;
        int parent = -1;
        int winner = 0;
        KineticTime cert = KineticTime::infinity();
        KineticTime subtreeMin = KineticTime::infinity();
    };

    int build(int lo, int hi, int parent) {
        int index = static_cast<int>(nodes_.size());
        nodes_.push_back(Node{});
        nodes_[index].parent = parent;
        if (hi - lo == 1) {
            nodes_[index].winner = lo;
            leafNode_[lo] = index;
            return index;
        }
        int mid = lo + (hi - lo + 1) / 2;
        int left = build(lo, mid, index);
        int right = build(mid, hi, index);
        nodes_[index].left = left;
        nodes_[index].right = right;
        return index;
    }

    bool beats(int slotA, int slotB) const {
        const DualLine& a = leaves_[slotA];
        const DualLine& b = leaves_[slotB];
        return mode_ == QueueMode::Max ? isAbove(a, b, now_) : isAbove(b, a, now_);
    }

    void recompute(int i) {
        ++lastNodeUpdates_;
        Node& node = nodes_[i];
        if (node.left < 0) {
            node.cert = KineticTime::infinity();
            node.subtreeMin = KineticTime::infinity();
            return;
        }
        int a = nodes_[node.left].winner;
        int b = nodes_[node.right].winner;
        node.winner = beats(a, b) ? a : b;
        int loser = node.winner == a ? b : a;
        const DualLine& w = leaves_[node.winner];
        const DualLine& l = leaves_[loser];
        bool flips = mode_ == QueueMode::Max ? l.slope > w.slope : w.slope > l.slope;
        node.cert = flips ? crossingTime(w, l) : KineticTime::infinity();
        node.subtreeMin = std::min({node.cert, nodes_[node.left].subtreeMin, nodes_[node.right].subtreeMin});
    }

    void updatePath(int i) {
        for (; i >= 0; i = nodes_[i].parent) recompute(i);
    }

    void collect(int i, const DualLine& best, const KineticTime& t, std::vector<int>& out) const {
        const Node& node = nodes_[i];
        if (compareValueAt(leaves_[node.winner], best, t) != 0) return;
        if (node.left < 0) {
            out.push_back(leaves_[node.winner].owner);
            return;
        }
        collect(node.left, best, t, out);
        collect(node.right, best, t, out);
    }

    int depthOf(int i) const {
        if (nodes_[i].left < 0) return 0;
        return 1 + std::max(depthOf(nodes_[i].left), depthOf(nodes_[i].right));
    }

    QueueMode mode_;
    KineticTime now_;
    std::vector<DualLine> leaves_;
    std::vector<Node> nodes_;
    std::vector<int> leafNode_;
    std::unordered_map<int, int> slotOf_;
    int pgCount_ = 0;
    int lastNodeUpdates_ = 0;
    std::uint64_t events_ = 0;
};

}  // namespace fairtopk
