/*
 * This Source Code Form is subject to the terms of the Mozilla Public
 * License, v. 2.0. If a copy of the MPL was not distributed with this
 * file, You can obtain one at https://mozilla.org/MPL/2.0/.
 */

#pragma once

#include <atomic>
#include <chrono>
#include <optional>
#include <string_view>

namespace fairtopk {

enum class Verdict { Found, Infeasible, BudgetExhausted, Timeout, Cancelled };

inline std::string_view toString(Verdict v) {
    switch (v) {
        case Verdict::Found: return "Found";
        case Verdict::Infeasible: return "Infeasible";
        case Verdict::BudgetExhausted: return "BudgetExhausted";
        case Verdict::Timeout: return "Timeout";
        case Verdict::Cancelled: return "Cancelled";
    }
    return "Unknown";
}

/// Cooperative stop conditions shared by the long-running solvers.
struct SolveControl {
    const std::atomic<bool>* cancel = nullptr;
    std::optional<std::chrono::steady_clock::time_point> deadline;

    static SolveControl withTimeLimit(std::chrono::milliseconds limit,
                                      const std::atomic<bool>* cancelFlag = nullptr) {
        return SolveControl{cancelFlag, std::chrono::steady_clock::now() + limit};
    }

    // Verdict to report if the solver must stop now.
    std::optional<Verdict> stopReason() const {
        if (cancel && cancel->load(std::memory_order_relaxed)) return Verdict::Cancelled;
        if (deadline && std::chrono::steady_clock::now() >= *deadline) return Verdict::Timeout;
        return std::nullopt;
    }
};

}  // namespace fairtopk
