/*
 * This Source Code Form is subject to the terms of the Mozilla Public
 * License, v. 2.0. If a copy of the MPL was not distributed with this
 * file, You can obtain one at https://mozilla.org/MPL/2.0/.
 */

#pragma once

// Shared instances, fixture writers and cross-solver drivers for the unit
// tests and the acceptance runner.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fairtopk/app.hpp"
#include "fairtopk/fairtopk.hpp"

namespace fairtopk::testing {

inline Rational q(long num, long den = 1) {
    Rational r(num, den);
    r.canonicalize();
    return r;
}

/// A = (1, 0) protected, B = (0, 1), C = (1/2, 1/2); all three dual lines meet at 1/2.
inline Dataset t1() { return Dataset::fromValues({{1, 0}, {0, 1}, {0.5, 0.5}}, {true, false, false}); }

/// T1 scaled up: n lines through (1/2, 1/2) with distinct slopes, protected
/// membership alternating, plus optional exact duplicates of the first lines.
inline Dataset pencil(int n, int duplicates = 0) {
    std::vector<std::vector<double>> rows;
    std::vector<bool> labels;
    for (int i = 0; i < n; ++i) {
        // p1 - p2 = slope, p1 + p2 = 1 keeps every score at 1/2 when w = (1/2, 1/2)
        // slopes in steps of 0.2 stay exact on the score grid for n <= 11
        double slope = (2 * i - (n - 1)) / 10.0;
        rows.push_back({(1 + slope) / 2, (1 - slope) / 2});
        labels.push_back(i % 2 == 0);
    }
    for (int j = 0; j < duplicates; ++j) {
        rows.push_back(rows[j % n]);
        labels.push_back(!labels[j % n]);
    }
    return Dataset::fromValues(rows, labels);
}

inline FairnessSpec randomSpec(std::mt19937_64& rng, int n, int maxK) {
    int k = std::uniform_int_distribution<int>(1, std::min(n, maxK))(rng);
    int lower = std::uniform_int_distribution<int>(0, k)(rng);
    int upper = std::uniform_int_distribution<int>(lower, k)(rng);
    return FairnessSpec(k, lower, upper);
}

/// Random eps-box around a grid point of the simplex.
inline std::pair<WeightVector, Rational> randomEpsBox(std::mt19937_64& rng, int d) {
    static const Rational choices[] = {q(0), q(1, 20), q(1, 10), q(1, 5), q(1, 2)};
    WeightVector w0 = randomSimplexWeight(rng, d, 20);
    Rational eps = choices[std::uniform_int_distribution<int>(0, 4)(rng)];
    return {w0, eps};
}

/// Points on the face x1 + ... + xd = 1: every k-subset is some top-k, so the
/// k-level search has C(n, k) states.
inline Dataset antiCorrelated(int n, int d, double pG1, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution label(pG1);
    std::vector<std::vector<double>> rows;
    std::vector<bool> labels;
    for (int i = 0; i < n; ++i) {
        WeightVector w = randomSimplexWeight(rng, d, 1000);
        std::vector<double> row;
        for (int j = 0; j < d; ++j) row.push_back(w[j].get_d());
        rows.push_back(std::move(row));
        labels.push_back(label(rng));
    }
    return Dataset::fromValues(rows, labels);
}

struct SolverRun {
    std::string solver;
    Verdict verdict = Verdict::Infeasible;
    bool witnessVerified = true;  // vacuous when not Found
};

struct CrossCheck {
    std::vector<SolverRun> runs;
    std::uint64_t simultaneousEvents = 0;

    bool agree() const {
        for (const auto& r : runs)
            if (r.verdict != runs.front().verdict) return false;
        return true;
    }
    bool verified() const {
        for (const auto& r : runs)
            if (!r.witnessVerified) return false;
        return true;
    }
    std::string describe() const {
        std::string out;
        for (const auto& r : runs)
            out += r.solver + "=" + std::string(toString(r.verdict)) + (r.witnessVerified ? "" : "(unverified)") + " ";
        return out;
    }
};

/// Runs sweep2d, klevel-hd, milp and bruteForce2D on one 2-D instance.
inline CrossCheck crossCheck2D(const Dataset& ds, const FairnessSpec& spec, const WeightBox& box, int workers = 1,
                               std::uint64_t seed = 0) {
    CrossCheck out;
    auto range = weightInterval2D(box, seed);
    auto record = [&](const std::string& name, Verdict v, const WeightVector& w, const std::vector<int>& subset) {
        bool ok = v != Verdict::Found || verifyFairSubset(ds, spec, box, w, subset);
        out.runs.push_back({name, v, ok});
    };
    if (range) {
        SweepOutcome s = findFair2D(ds, spec, range->first, range->second);
        record("sweep2d", s.verdict, s.w, s.subset);
        out.simultaneousEvents = s.counters.simultaneousEvents;
        OracleOutcome o = bruteForce2D(ds, spec, range->first, range->second);
        record("bruteForce2D", o.verdict, o.w, o.subset);
    } else {
        out.runs.push_back({"sweep2d", Verdict::Infeasible, true});
        out.runs.push_back({"bruteForce2D", Verdict::Infeasible, true});
    }
    HdOptions ho;
    ho.workers = workers;
    ho.seed = seed;
    HdOutcome h = findFairHD(ds, spec, box, ho);
    record("klevel-hd", h.verdict, h.w, h.subset);
    MilpModel m = buildModel(ds, spec, box);
    MilpOptions mo;
    mo.seed = seed;
    MilpOutcome mi = solveFeasibility(m, mo);
    record("milp", mi.verdict, mi.w, mi.selectedIds(m));
    return out;
}

/// Runs klevel-hd, milp and bruteForceHD on one instance of any dimension.
inline CrossCheck crossCheckHD(const Dataset& ds, const FairnessSpec& spec, const WeightBox& box, int workers = 1,
                               std::uint64_t seed = 0) {
    CrossCheck out;
    auto record = [&](const std::string& name, Verdict v, const WeightVector& w, const std::vector<int>& subset) {
        bool ok = v != Verdict::Found || verifyFairSubset(ds, spec, box, w, subset);
        out.runs.push_back({name, v, ok});
    };
    OracleOutcome o = bruteForceHD(ds, spec, box, seed);
    record("bruteForceHD", o.verdict, o.w, o.subset);
    HdOptions ho;
    ho.workers = workers;
    ho.seed = seed;
    HdOutcome h = findFairHD(ds, spec, box, ho);
    record("klevel-hd", h.verdict, h.w, h.subset);
    MilpModel m = buildModel(ds, spec, box);
    MilpOptions mo;
    mo.seed = seed;
    MilpOutcome mi = solveFeasibility(m, mo);
    record("milp", mi.verdict, mi.w, mi.selectedIds(m));
    return out;
}

struct RandomCase {
    Dataset ds;
    FairnessSpec spec;
    WeightBox box;
};

/// Seeded 2-D case: n <= 12 on the 0.05 grid, k <= 4, random eps-box.
inline RandomCase randomCase2D(std::uint64_t seed) {
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 1);
    int n = std::uniform_int_distribution<int>(1, 12)(rng);
    Dataset ds = genRandomInstance(seed, n, 2, q(1, 20), 0.5);
    FairnessSpec spec = randomSpec(rng, n, 4);
    auto [w0, eps] = randomEpsBox(rng, 2);
    return {std::move(ds), spec, fromEpsilonBox(w0, eps)};
}

/// Seeded d-dimensional case: d in {3, 4}, n <= 10, k <= 3, random eps-box.
inline RandomCase randomCaseHD(std::uint64_t seed) {
    std::mt19937_64 rng(seed * 0xbf58476d1ce4e5b9ULL + 3);
    int d = std::uniform_int_distribution<int>(3, 4)(rng);
    int n = std::uniform_int_distribution<int>(1, 10)(rng);
    Dataset ds = genRandomInstance(seed, n, d, q(1, 20), 0.5);
    FairnessSpec spec = randomSpec(rng, n, 3);
    auto [w0, eps] = randomEpsBox(rng, d);
    return {std::move(ds), spec, fromEpsilonBox(w0, eps)};
}

// ---------------------------------------------------------------------------
// CSV fixtures shaped like the public recidivism and entrance-exam datasets

inline std::string isoDate(int daysSinceEpoch, int seconds) {
    using namespace std::chrono;
    year_month_day ymd{sys_days{days{daysSinceEpoch}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d:%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), seconds / 3600,
                  (seconds / 60) % 60, seconds % 60);
    return buf;
}

/// 7,214 rows, 3,701 of them African-American; `droppable` extra rows with a
/// blank score cell are appended with the same label mix.
inline void writeCompasFixture(const std::filesystem::path& path, int droppable = 0, std::uint64_t seed = 11) {
    std::mt19937_64 rng(seed);
    const int rows = 7214;
    const int protectedRows = 3701;
    std::vector<std::string> races(rows);
    const char* others[] = {"Caucasian", "Hispanic", "Other", "Asian", "Native American"};
    std::vector<int> order(rows);
    for (int i = 0; i < rows; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (int i = 0; i < rows; ++i) races[order[i]] = i < protectedRows ? "African-American" : others[i % 5];

    std::ofstream out(path);
    out << "id,name,race,sex,age,juv_fel_count,priors_count,c_jail_in,c_jail_out,decile_score\n";
    std::poisson_distribution<int> priors(3.2);
    std::poisson_distribution<int> juvenile(0.1);
    std::uniform_int_distribution<int> age(18, 70), start(15700, 16400), stay(0, 60), clock(0, 86399), decile(1, 10);
    auto row = [&](int id, const std::string& race, bool blank) {
        int in = start(rng);
        out << id << ",\"Doe, J" << id << "\"," << race << "," << (id % 3 ? "Male" : "Female") << "," << age(rng)
            << "," << juvenile(rng) << "," << (blank ? std::string() : std::to_string(priors(rng))) << ","
            << isoDate(in, clock(rng)) << "," << isoDate(in + stay(rng), clock(rng)) << "," << decile(rng) << "\n";
    };
    for (int i = 0; i < rows; ++i) row(i + 1, races[i], false);
    for (int j = 0; j < droppable; ++j) row(rows + j + 1, j % 2 ? "African-American" : "Caucasian", true);
}

/// 4,000 rows, 1,020 of them Female.
inline void writeJeeFixture(const std::filesystem::path& path, std::uint64_t seed = 13) {
    std::mt19937_64 rng(seed);
    const int rows = 4000;
    const int female = 1020;
    std::vector<int> order(rows);
    for (int i = 0; i < rows; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<bool> isFemale(rows, false);
    for (int i = 0; i < female; ++i) isFemale[order[i]] = true;
    std::ofstream out(path);
    out << "roll,gender,category,math,physics,chemistry\n";
    std::normal_distribution<double> mark(35, 22);
    auto clampMark = [](double x) { return std::clamp(static_cast<int>(std::lround(x)), -35, 120); };
    const char* categories[] = {"GE", "OBC", "SC", "ST"};
    for (int i = 0; i < rows; ++i)
        out << 100000 + i << "," << (isFemale[i] ? "Female" : "Male") << "," << categories[i % 4] << ","
            << clampMark(mark(rng)) << "," << clampMark(mark(rng)) << "," << clampMark(mark(rng)) << "\n";
}

inline double protectedShare(const Dataset& ds) { return static_cast<double>(ds.protectedCount()) / ds.size(); }

inline std::filesystem::path scratchDir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("fairtopk-" + name);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace fairtopk::testing
