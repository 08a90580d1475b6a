/*
 * This Source Code Form is subject to the terms of the Mozilla Public
 * License, v. 2.0. If a copy of the MPL was not distributed with this
 * file, You can obtain one at https://mozilla.org/MPL/2.0/.
 */

// Audit a ranking function, then nudge its weights until the top-k is fair.

#include <iostream>

#include "fairtopk/app.hpp"

using namespace fairtopk;

int main() {
    // two score columns in [0, 1], protected candidates flagged true
    Dataset ds = Dataset::fromValues({{0.95, 0.40}, {0.90, 0.55}, {0.85, 0.30}, {0.40, 0.90}, {0.35, 0.95}, {0.60, 0.70}},
                                     {false, false, false, true, true, true});
    FairnessSpec spec(3, 1, 2);  // top-3 holds one or two protected candidates
    WeightVector w0 = WeightVector::fromStrings({"0.9", "0.1"});

    AuditReport audit = runAudit(ds, w0, spec);
    std::cout << "w0 fair: " << (audit.fair ? "yes" : "no") << " (protected in top-3: " << audit.interval.minG1 << ".."
              << audit.interval.maxG1 << ")\n";

    for (Algorithm a : {Algorithm::Sweep2D, Algorithm::KLevelHD, Algorithm::Milp}) {
        RepairOptions options;
        options.algorithm = a;
        RepairReport r = runRepair(ds, w0, Rational(3, 10), spec, options);
        std::cout << toString(a) << ": " << toString(r.verdict);
        if (r.weight) std::cout << " at (" << toFractionString((*r.weight)[0]) << ", " << toFractionString((*r.weight)[1]) << ")";
        std::cout << "\n";
        if (r.verdict != Verdict::Found || !r.verified) return 1;
    }
    return 0;
}
