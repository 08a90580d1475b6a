/*
 * This Source Code Form is subject to the terms of the Mozilla Public
 * License, v. 2.0. If a copy of the MPL was not distributed with this
 * file, You can obtain one at https://mozilla.org/MPL/2.0/.
 */

#pragma once

// Audit, repair and bench drivers shared by the command line and the HTTP
// service, plus their JSON reports.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairtopk/control.hpp"
#include "fairtopk/klevel_hd.hpp"
#include "fairtopk/milp.hpp"
#include "fairtopk/model.hpp"
#include "fairtopk/oracle.hpp"
#include "fairtopk/seidel_lp.hpp"
#include "fairtopk/sweep2d.hpp"

namespace fairtopk {

using Json = nlohmann::json;

enum class Algorithm { Sweep2D, KLevelHD, Milp, Oracle };

inline std::string toString(Algorithm a) {
    switch (a) {
        case Algorithm::Sweep2D: return "sweep2d";
        case Algorithm::KLevelHD: return "klevel-hd";
        case Algorithm::Milp: return "milp";
        case Algorithm::Oracle: return "oracle";
    }
    return "unknown";
}

inline Algorithm parseAlgorithm(const std::string& name) {
    if (name == "sweep2d") return Algorithm::Sweep2D;
    if (name == "klevel-hd") return Algorithm::KLevelHD;
    if (name == "milp") return Algorithm::Milp;
    if (name == "oracle") return Algorithm::Oracle;
    throw ParameterError("unknown algorithm '" + name + "' (expected sweep2d, klevel-hd, milp or oracle)");
}

inline Json weightJson(const WeightVector& w) {
    Json out = Json::array();
    for (const auto& x : w.values()) out.push_back(x.get_d());
    return out;
}

inline Json weightExactJson(const WeightVector& w) {
    Json out = Json::array();
    for (const auto& x : w.values()) out.push_back(toFractionString(x));
    return out;
}

// ---------------------------------------------------------------------------
// audit

struct PreviewRow {
    int id = 0;
    double score = 0;
    std::string group;
};

/// Bounds that no selection can meet; reported as warnings, the solvers then answer Infeasible.
inline std::vector<std::string> boundWarnings(const Dataset& ds, const FairnessSpec& spec) {
    std::vector<std::string> out;
    const int g1 = ds.protectedCount();
    const int g2 = ds.size() - g1;
    if (spec.lower > g1)
        out.push_back("lower bound " + std::to_string(spec.lower) + " exceeds the " + std::to_string(g1) +
                      " protected candidates");
    if (spec.k - spec.upper > g2)
        out.push_back("upper bound " + std::to_string(spec.upper) + " needs more than the " + std::to_string(g2) +
                      " other candidates");
    return out;
}

struct AuditReport {
    TopKResult topk;
    ProtectedInterval interval;
    bool fair = false;
    std::vector<PreviewRow> preview;  // best first, at most 20 rows
    std::vector<std::string> warnings;
};

inline AuditReport runAudit(const Dataset& ds, const WeightVector& w, const FairnessSpec& spec) {
    spec.checkAgainst(ds);
    if (w.dim() != ds.dim()) throw ParameterError("weight vector has " + std::to_string(w.dim()) + " components, dataset has " + std::to_string(ds.dim()));
    AuditReport report;
    report.warnings = boundWarnings(ds, spec);
    report.topk = topK(ds, w, spec.k);
    report.interval = fairnessInterval(ds, report.topk);
    report.fair = isFair(spec, report.interval);

    std::vector<BigInt> scores = scaledScores(ds, w);
    std::vector<int> order(ds.size());
    for (int i = 0; i < ds.size(); ++i) order[i] = i;
    const int shown = std::min(20, ds.size());
    std::partial_sort(order.begin(), order.begin() + shown, order.end(), [&](int a, int b) {
        int c = cmp(scores[a], scores[b]);
        return c != 0 ? c > 0 : ds[a].id < ds[b].id;
    });
    for (int i = 0; i < shown; ++i) {
        const Candidate& c = ds[order[i]];
        report.preview.push_back({c.id, scoreOf(w, c), ds.groups()[c.group]});
    }
    return report;
}

inline Json toJson(const AuditReport& r) {
    Json preview = Json::array();
    for (const auto& row : r.preview) preview.push_back({{"id", row.id}, {"score", row.score}, {"group", row.group}});
    return Json{{"fair", r.fair},
                {"intervalMin", r.interval.minG1},
                {"intervalMax", r.interval.maxG1},
                {"strictlyIn", r.topk.strictlyIn.size()},
                {"tiedPool", r.topk.tiedPool.size()},
                {"slots", r.topk.slots},
                {"topkPreview", preview},
                {"warnings", r.warnings}};
}

// ---------------------------------------------------------------------------
// repair

struct RepairOptions {
    Algorithm algorithm = Algorithm::Sweep2D;
    int workers = 1;
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> budget;  // subsets for klevel-hd, nodes for milp
    std::optional<std::chrono::milliseconds> timeLimit;
    const std::atomic<bool>* cancel = nullptr;
};

struct RepairCounters {
    std::uint64_t events = 0;
    std::uint64_t lps = 0;
    std::uint64_t nodes = 0;
};

struct RepairReport {
    Algorithm algorithm = Algorithm::Sweep2D;
    Verdict verdict = Verdict::Infeasible;
    std::optional<WeightVector> weight;
    std::optional<Rational> t;  // sweep coordinate, 2-D only
    std::vector<int> subsetIds;
    RepairCounters counters;
    Json details = Json::object();
    double wallMillis = 0;
    bool verified = false;
    std::vector<std::string> transcript;
    std::vector<std::string> warnings;
};

/// w1 range of the box over the 2-D simplex, empty when the box misses it.
inline std::optional<std::pair<Rational, Rational>> weightInterval2D(const WeightBox& box, std::uint64_t seed = 0) {
    if (box.d != 2) throw UnsupportedDimensionError("weight interval needs d = 2");
    LinearProgram lp = simplexProgram(box);
    lp.objective = std::vector<Rational>{Rational(-1)};
    LpSolution lo = solve(lp, seed);
    if (!lo.feasible()) return std::nullopt;
    lp.objective = std::vector<Rational>{Rational(1)};
    LpSolution hi = solve(lp, seed);
    return std::make_pair(lo.x[0], hi.x[0]);
}

/// Independent re-check of a claimed fair witness; appends one line per check.
inline bool verifyWitness(const Dataset& ds, const FairnessSpec& spec, const WeightBox& box, const WeightVector& w,
                          const std::vector<int>& subset, std::vector<std::string>& transcript) {
    bool inBox = box.contains(w);
    transcript.push_back(std::string("weight inside the box and on the simplex: ") + (inBox ? "pass" : "FAIL"));
    TopKResult r = topK(ds, w, spec.k);
    bool valid = r.isValidSubset(subset, spec.k);
    transcript.push_back("subset of " + std::to_string(subset.size()) + " ids is a valid top-" +
                         std::to_string(spec.k) + " at the weight: " + (valid ? "pass" : "FAIL"));
    int g = valid ? protectedCount(ds, subset) : -1;
    bool fair = valid && g >= spec.lower && g <= spec.upper;
    transcript.push_back("protected count " + std::to_string(g) + " within [" + std::to_string(spec.lower) + ", " +
                         std::to_string(spec.upper) + "]: " + (fair ? "pass" : "FAIL"));
    return inBox && valid && fair;
}

inline RepairReport runRepair(const Dataset& ds, const WeightVector& w0, const Rational& eps, const FairnessSpec& spec,
                              const RepairOptions& options) {
    spec.checkAgainst(ds);
    if (w0.dim() != ds.dim()) throw ParameterError("w0 has " + std::to_string(w0.dim()) + " components, dataset has " + std::to_string(ds.dim()));
    if (options.algorithm == Algorithm::Sweep2D && ds.dim() != 2)
        throw UnsupportedDimensionError("sweep2d needs exactly two score columns");
    if (options.workers < 1) throw ParameterError("workers must be at least 1");

    const WeightBox box = fromEpsilonBox(w0, eps);
    SolveControl control;
    control.cancel = options.cancel;
    if (options.timeLimit) control.deadline = std::chrono::steady_clock::now() + *options.timeLimit;

    RepairReport report;
    report.algorithm = options.algorithm;
    report.warnings = boundWarnings(ds, spec);
    const auto started = std::chrono::steady_clock::now();
    std::optional<WeightVector> w;
    std::vector<int> subset;

    switch (options.algorithm) {
        case Algorithm::Sweep2D: {
            auto range = weightInterval2D(box, options.seed);
            if (!range) {
                report.verdict = Verdict::Infeasible;
                break;
            }
            SweepOptions so;
            so.control = control;
            SweepOutcome out = findFair2D(ds, spec, range->first, range->second, so);
            report.verdict = out.verdict;
            const SweepCounters& c = out.counters;
            report.counters.events = c.queueEvents + c.boundaryEvents;
            report.details = {{"lb", toDecimalString(range->first)},
                              {"ub", toDecimalString(range->second)},
                              {"iterations", c.iterations},
                              {"queueEvents", c.queueEvents},
                              {"boundaryEvents", c.boundaryEvents},
                              {"exchanges", c.exchanges},
                              {"simultaneousEvents", c.simultaneousEvents},
                              {"fairnessChecks", c.fairnessChecks}};
            if (out.found()) {
                w = out.w;
                subset = out.subset;
                report.t = out.t->toRational();
            }
            break;
        }
        case Algorithm::KLevelHD: {
            HdOptions ho;
            ho.workers = options.workers;
            ho.seed = options.seed;
            if (options.budget) ho.budget = *options.budget;
            ho.start = w0;
            ho.control = control;
            HdOutcome out = findFairHD(ds, spec, box, ho);
            report.verdict = out.verdict;
            report.counters.lps = out.counters.lps;
            report.counters.nodes = out.counters.expanded;
            report.details = {{"expanded", out.counters.expanded},
                              {"enqueued", out.counters.enqueued},
                              {"pruned", out.counters.pruned},
                              {"workers", options.workers}};
            if (out.found()) {
                w = out.w;
                subset = out.subset;
            }
            break;
        }
        case Algorithm::Milp: {
            MilpModel m = buildModel(ds, spec, box);
            MilpOptions mo;
            mo.seed = options.seed;
            if (options.budget) mo.nodeBudget = *options.budget;
            mo.control = control;
            MilpOutcome out = solveFeasibility(m, mo);
            report.verdict = out.verdict;
            report.counters.nodes = out.counters.nodes;
            report.counters.lps = out.counters.lps;
            report.details = {{"fixedByDominance", out.counters.fixedByDominance}};
            if (out.found()) {
                w = out.w;
                subset = out.selectedIds(m);
                report.details["lambda"] = toDecimalString(out.lambda);
            }
            break;
        }
        case Algorithm::Oracle: {
            OracleOutcome out;
            if (ds.dim() == 2) {
                auto range = weightInterval2D(box, options.seed);
                if (range) out = bruteForce2D(ds, spec, range->first, range->second);
            } else {
                out = bruteForceHD(ds, spec, box, options.seed);
            }
            report.verdict = out.verdict;
            if (out.found()) {
                w = out.w;
                subset = out.subset;
                report.t = out.t;
            }
            break;
        }
    }
    report.wallMillis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();

    if (report.verdict == Verdict::Found) {
        report.verified = verifyWitness(ds, spec, box, *w, subset, report.transcript);
        if (!report.verified) throw StateError(toString(options.algorithm) + " returned a witness that failed verification");
        report.weight = std::move(w);
        report.subsetIds = std::move(subset);
    } else {
        report.transcript.push_back("no witness to verify (" + std::string(toString(report.verdict)) + ")");
    }
    return report;
}

inline Json toJson(const RepairReport& r) {
    Json out{{"algorithm", toString(r.algorithm)},
             {"verdict", std::string(toString(r.verdict))},
             {"counters", {{"events", r.counters.events}, {"lps", r.counters.lps}, {"nodes", r.counters.nodes}}},
             {"details", r.details},
             {"wallMillis", r.wallMillis},
             {"verified", r.verified},
             {"transcript", r.transcript},
             {"warnings", r.warnings}};
    if (r.weight) {
        out["weight"] = weightJson(*r.weight);
        out["weightExact"] = weightExactJson(*r.weight);
    }
    if (r.t) out["t"] = toFractionString(*r.t);
    if (!r.subsetIds.empty()) out["subsetIds"] = r.subsetIds;
    return out;
}

// ---------------------------------------------------------------------------
// bench

struct BenchConfig {
    std::vector<int> ks{50};
    std::vector<Rational> epsilons{Rational(1, 10)};
    std::vector<Algorithm> algorithms{Algorithm::Sweep2D};
    std::vector<int> workers{1};
    int samples = 20;
    double lowerShare = 0.4;  // bounds are ceil(lowerShare * k) and floor(upperShare * k)
    double upperShare = 0.6;
    std::optional<std::pair<int, int>> fixedBounds;  // overrides the shares
    std::chrono::milliseconds timeLimit{10000};
    std::optional<std::uint64_t> budget;
    std::uint64_t seed = 1;
    int maxSampleAttempts = 100000;
};

struct BenchRow {
    Algorithm algorithm;
    int k;
    Rational eps;
    int workers;
    int sample;
    RepairReport report;
};

struct BenchSummary {
    Algorithm algorithm;
    int k;
    Rational eps;
    int workers;
    int runs = 0;
    int found = 0;
    int infeasible = 0;
    int timeouts = 0;
    double meanMillis = 0;
};

struct BenchResult {
    std::vector<std::pair<int, std::vector<WeightVector>>> samples;  // per k
    std::vector<BenchRow> rows;
    std::vector<BenchSummary> summaries;
    std::vector<std::string> warnings;
};

inline FairnessSpec benchSpec(const BenchConfig& config, int k) {
    if (config.fixedBounds) return FairnessSpec(k, config.fixedBounds->first, config.fixedBounds->second);
    int lower = static_cast<int>(std::ceil(config.lowerShare * k - 1e-9));
    int upper = static_cast<int>(std::floor(config.upperShare * k + 1e-9));
    return FairnessSpec(k, std::clamp(lower, 0, k), std::clamp(upper, 0, k));
}

/// Uniform samples from the simplex, kept only when the top-k is unfair.
inline std::vector<WeightVector> sampleUnfairWeights(const Dataset& ds, const FairnessSpec& spec, int count,
                                                     std::uint64_t seed, int maxAttempts) {
    std::mt19937_64 rng(seed);
    std::vector<WeightVector> out;
    for (int attempt = 0; attempt < maxAttempts && static_cast<int>(out.size()) < count; ++attempt) {
        WeightVector w = randomSimplexWeight(rng, ds.dim(), 1000000);
        if (!isFair(spec, fairnessInterval(ds, topK(ds, w, spec.k)))) out.push_back(std::move(w));
    }
    return out;
}

inline BenchResult runBench(const Dataset& ds, const BenchConfig& config) {
    if (config.samples < 1) throw ParameterError("sample count must be positive");
    if (config.ks.empty() || config.epsilons.empty() || config.algorithms.empty() || config.workers.empty())
        throw ParameterError("bench needs at least one k, eps, algorithm and worker count");
    BenchResult result;
    for (int k : config.ks) {
        FairnessSpec spec = benchSpec(config, k);
        spec.checkAgainst(ds);
        std::vector<WeightVector> samples = sampleUnfairWeights(ds, spec, config.samples, config.seed + k, config.maxSampleAttempts);
        if (static_cast<int>(samples.size()) < config.samples)
            result.warnings.push_back("k=" + std::to_string(k) + ": only " + std::to_string(samples.size()) +
                                      " unfair samples found");
        for (Algorithm algorithm : config.algorithms) {
            const bool parallel = algorithm == Algorithm::KLevelHD;
            std::vector<int> workerList = parallel ? config.workers : std::vector<int>{1};
            for (const Rational& eps : config.epsilons) {
                for (int workers : workerList) {
                    BenchSummary summary{algorithm, k, eps, workers};
                    double total = 0;
                    for (std::size_t i = 0; i < samples.size(); ++i) {
                        RepairOptions options;
                        options.algorithm = algorithm;
                        options.workers = workers;
                        options.seed = config.seed;
                        options.budget = config.budget;
                        options.timeLimit = config.timeLimit;
                        RepairReport report = runRepair(ds, samples[i], eps, spec, options);
                        ++summary.runs;
                        total += report.wallMillis;
                        if (report.verdict == Verdict::Found) ++summary.found;
                        else if (report.verdict == Verdict::Infeasible) ++summary.infeasible;
                        else if (report.verdict == Verdict::Timeout) ++summary.timeouts;
                        result.rows.push_back({algorithm, k, eps, workers, static_cast<int>(i), std::move(report)});
                    }
                    summary.meanMillis = summary.runs ? total / summary.runs : 0;
                    result.summaries.push_back(summary);
                }
            }
        }
        result.samples.emplace_back(k, std::move(samples));
    }
    return result;
}

inline Json toJson(const BenchResult& r) {
    Json samples = Json::array();
    for (const auto& [k, ws] : r.samples) {
        Json list = Json::array();
        for (const auto& w : ws) list.push_back(weightExactJson(w));
        samples.push_back({{"k", k}, {"weights", list}});
    }
    Json rows = Json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"algorithm", toString(row.algorithm)},
                        {"k", row.k},
                        {"eps", toDecimalString(row.eps)},
                        {"workers", row.workers},
                        {"sample", row.sample},
                        {"status", row.report.verdict == Verdict::Timeout ? "timeout" : "completed"},
                        {"verdict", std::string(toString(row.report.verdict))},
                        {"wallMillis", row.report.wallMillis},
                        {"verified", row.report.verified},
                        {"counters",
                         {{"events", row.report.counters.events},
                          {"lps", row.report.counters.lps},
                          {"nodes", row.report.counters.nodes}}}});
    }
    Json summaries = Json::array();
    for (const auto& s : r.summaries) {
        summaries.push_back({{"algorithm", toString(s.algorithm)},
                             {"k", s.k},
                             {"eps", toDecimalString(s.eps)},
                             {"workers", s.workers},
                             {"runs", s.runs},
                             {"found", s.found},
                             {"infeasible", s.infeasible},
                             {"timeouts", s.timeouts},
                             {"meanMillis", s.meanMillis}});
    }
    return Json{{"samples", samples}, {"rows", rows}, {"summary", summaries}, {"warnings", r.warnings}};
}

/// Two-group synthetic data where the protected group trails on the first
/// attribute, so weight vectors leaning on it tend to be unfair.
inline Dataset syntheticBiased(int n, int d, double protectedShare, std::uint64_t seed, int places = 6) {
    if (n < 1 || d < 1) throw ParameterError("need n >= 1 and d >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::bernoulli_distribution label(protectedShare);
    std::vector<std::vector<double>> rows;
    std::vector<bool> isProtected;
    rows.reserve(n);
    for (int i = 0; i < n; ++i) {
        bool p = label(rng);
        std::vector<double> row;
        for (int j = 0; j < d; ++j) {
            double u = unit(rng);
            row.push_back(p && j == 0 ? u * u : u);
        }
        rows.push_back(std::move(row));
        isProtected.push_back(p);
    }
    return Dataset::fromValues(rows, isProtected, places);
}

}  // namespace fairtopk
