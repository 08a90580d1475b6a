/*
 * This Source Code Form is subject to the terms of the Mozilla Public
 * License, v. 2.0. If a copy of the MPL was not distributed with this
 * file, You can obtain one at https://mozilla.org/MPL/2.0/.
 */

#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <random>

#include "support.hpp"

using namespace fairtopk;
using namespace fairtopk::testing;

namespace {

int countRows(const MilpModel& m, const std::string& prefix) {
    int n = 0;
    for (const auto& row : m.rows()) n += row.name.rfind(prefix, 0) == 0;
    return n;
}

}  // namespace

TEST(MilpModelTest, T1Census) {
    MilpModel m = buildModel(t1(), FairnessSpec(1, 1, 1), WeightBox::simplex(2));
    EXPECT_EQ(m.variableCount(), 6);
    EXPECT_EQ(m.windowRowCount(), 6);
    EXPECT_EQ(countRows(m, "win_"), 6);
    EXPECT_EQ(countRows(m, "card"), 1);
    EXPECT_EQ(countRows(m, "fair_"), 2);
    EXPECT_EQ(m.boxRowCount(), 0);
}

TEST(MilpModelTest, EpsilonBoxAddsSixRowsInThreeDimensions) {
    Dataset ds = Dataset::fromValues({{0.1, 0.2, 0.3}, {0.3, 0.2, 0.1}}, {true, false});
    MilpModel plain = buildModel(ds, FairnessSpec(1, 0, 1), WeightBox::simplex(3));
    MilpModel boxed = buildModel(ds, FairnessSpec(1, 0, 1), fromEpsilonBox(WeightVector::fromStrings({"0.3", "0.3", "0.4"}), q(5, 100)));
    EXPECT_EQ(boxed.rows().size() - plain.rows().size(), 6u);
}

TEST(MilpModelTest, RejectsMismatchedBox) {
    EXPECT_THROW(buildModel(t1(), FairnessSpec(1, 1, 1), WeightBox::simplex(3)), ParameterError);
}

TEST(Indicator, CutOffExamples) {
    EXPECT_TRUE(checkIndicatorSemantics(q(3, 10), q(1, 2), 0));
    EXPECT_FALSE(checkIndicatorSemantics(q(3, 10), q(1, 2), 1));
    EXPECT_FALSE(windowAdmits(q(3, 10), q(1, 2), q(1)));
    EXPECT_TRUE(checkIndicatorSemantics(q(7, 10), q(1, 2), 1));
    EXPECT_FALSE(checkIndicatorSemantics(q(7, 10), q(1, 2), 0));
    EXPECT_FALSE(windowAdmits(q(7, 10), q(1, 2), q(0)));
    EXPECT_TRUE(checkIndicatorSemantics(q(1, 2), q(1, 2), 0));
    EXPECT_TRUE(checkIndicatorSemantics(q(1, 2), q(1, 2), 1));
    EXPECT_TRUE(windowAdmits(q(1, 2), q(1, 2), q(0)));
    EXPECT_TRUE(windowAdmits(q(1, 2), q(1, 2), q(1)));
}

TEST(Indicator, WindowMatchesSemanticsOnRandomTriples) {
    std::mt19937_64 rng(51);
    std::uniform_int_distribution<int> grid(0, 20);
    int failures = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        // coarse grid so that score == lambda happens often
        Rational score = q(grid(rng), 20);
        Rational lambda = q(grid(rng), 20);
        for (int delta : {0, 1})
            failures += windowAdmits(score, lambda, Rational(delta)) != checkIndicatorSemantics(score, lambda, delta);
    }
    EXPECT_EQ(failures, 0);
}

TEST(MilpSolve, T1Found) {
    Dataset ds = t1();
    FairnessSpec spec(1, 1, 1);
    MilpModel m = buildModel(ds, spec, WeightBox::simplex(2));
    MilpOutcome out = solveFeasibility(m);
    ASSERT_TRUE(out.found());
    EXPECT_EQ(out.selectedIds(m), std::vector<int>{0});
    EXPECT_TRUE(verifyFairSubset(ds, spec, WeightBox::simplex(2), out.w, out.selectedIds(m)));

    // the hand-made assignment w = (0.6, 0.4), lam = 0.6, delta = (1, 0, 0)
    std::vector<Rational> values{q(3, 5), q(2, 5), q(3, 5), q(1), q(0), q(0)};
    EXPECT_TRUE(verifyAssignment(m, values));
    values[3] = 0;
    EXPECT_FALSE(verifyAssignment(m, values));
}

TEST(MilpSolve, T1InfeasibleWithCappedFirstWeight) {
    WeightBox box = WeightBox::simplex(2);
    box.add({q(1), q(0)}, q(3, 10));
    MilpModel m = buildModel(t1(), FairnessSpec(1, 1, 1), box);
    EXPECT_EQ(solveFeasibility(m).verdict, Verdict::Infeasible);
}

TEST(MilpSolve, UnconstrainedAlwaysFound) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Dataset ds = genRandomInstance(seed, 10, 2 + seed % 3, q(1, 20), 0.5);
        FairnessSpec spec(1 + seed % 5, 0, 1 + seed % 5);
        MilpModel m = buildModel(ds, spec, WeightBox::simplex(ds.dim()));
        EXPECT_TRUE(solveFeasibility(m).found()) << seed;
    }
}

TEST(MilpSolve, AgreesWithOracleOnTwoDimensions) {
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        RandomCase c = randomCase2D(seed);
        auto range = weightInterval2D(c.box);
        Verdict expected = range ? bruteForce2D(c.ds, c.spec, range->first, range->second).verdict : Verdict::Infeasible;
        MilpModel m = buildModel(c.ds, c.spec, c.box);
        MilpOutcome out = solveFeasibility(m);
        ASSERT_EQ(out.verdict, expected) << "seed " << seed;
        if (out.found()) {
            EXPECT_TRUE(verifyFairSubset(c.ds, c.spec, c.box, out.w, out.selectedIds(m)));
            std::vector<Rational> values(out.w.values());
            values.push_back(out.lambda);
            for (int v : out.delta) values.emplace_back(v);
            EXPECT_TRUE(verifyAssignment(m, values)) << "seed " << seed;
        }
    }
}

TEST(MilpSolve, BudgetAndCancellation) {
    // pick an instance whose search needs more than the root node
    std::optional<MilpModel> branching;
    for (std::uint64_t seed = 0; seed < 200 && !branching; ++seed) {
        Dataset ds = genRandomInstance(seed, 12, 3, q(1, 1000), 0.2);
        MilpModel m = buildModel(ds, FairnessSpec(4, 3, 4), WeightBox::simplex(3));
        if (solveFeasibility(m).counters.nodes > 2) branching = m;
    }
    ASSERT_TRUE(branching);
    const MilpModel& m = *branching;
    MilpOptions tight;
    tight.nodeBudget = 1;
    EXPECT_EQ(solveFeasibility(m, tight).verdict, Verdict::BudgetExhausted);
    std::atomic<bool> cancel{true};
    MilpOptions cancelled;
    cancelled.control.cancel = &cancel;
    EXPECT_EQ(solveFeasibility(m, cancelled).verdict, Verdict::Cancelled);
}

TEST(LpFormat, T1Export) {
    MilpModel m = buildModel(t1(), FairnessSpec(1, 1, 1), WeightBox::simplex(2));
    std::string text = toLpString(m);
    EXPECT_NE(text.find("Subject To"), std::string::npos);
    EXPECT_NE(text.find("Binaries"), std::string::npos);
    EXPECT_NE(text.find(" d0 d1 d2"), std::string::npos);
    // A = (1, 0): w1 - lam - d0 within [-1, 0]
    EXPECT_NE(text.find("win_lo_0: w1 - lam - d0 >= -1"), std::string::npos);
    EXPECT_NE(text.find("win_hi_0: w1 - lam - d0 <= 0"), std::string::npos);
    EXPECT_NE(text.find("card: d0 + d1 + d2 = 1"), std::string::npos);
    EXPECT_EQ(text.find("box_"), std::string::npos);
    EXPECT_NE(text.find("End"), std::string::npos);
}

TEST(LpFormat, RoundTrip) {
    auto dir = scratchDir("milp");
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        Dataset ds = genRandomInstance(seed, 1 + seed % 9, 2 + seed % 3, q(1, 20), 0.5);
        std::mt19937_64 rng(seed);
        FairnessSpec spec = randomSpec(rng, ds.size(), 4);
        auto [w0, eps] = randomEpsBox(rng, ds.dim());
        MilpModel m = buildModel(ds, spec, seed % 2 ? fromEpsilonBox(w0, eps) : WeightBox::simplex(ds.dim()));
        EXPECT_EQ(parseLpString(toLpString(m)), m) << seed;
        auto path = (dir / ("model" + std::to_string(seed) + ".lp")).string();
        exportLpFile(m, path);
        EXPECT_EQ(parseLpFile(path), m) << seed;
    }
}

TEST(LpFormat, MalformedInputRejected) {
    EXPECT_ANY_THROW(parseLpString("Minimize\n obj: 0\nSubject To\n c: x + \nEnd\n"));
}
