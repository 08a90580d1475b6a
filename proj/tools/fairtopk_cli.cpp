/*
 * This Source Code Form is subject to the terms of the Mozilla Public
 * License, v. 2.0. If a copy of the MPL was not distributed with this
 * file, You can obtain one at https://mozilla.org/MPL/2.0/.
 */

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fairtopk/app.hpp"
#include "fairtopk/ingest.hpp"
#include "fairtopk/milp.hpp"

using namespace fairtopk;

namespace {

struct DataArgs {
    std::string data;
    std::vector<std::string> scoreCols;
    std::string groupCol;
    std::string protectedValue;
    std::vector<std::string> derived;
    int snap = 6;
    std::string delimiter = ",";
    std::string synthetic;  // "n" or "n,d" for a generated biased dataset
    double syntheticShare = 0.5;
    std::uint64_t syntheticSeed = 7;
};

struct FairArgs {
    int k = 0;
    std::optional<int> lower;
    std::optional<int> upper;
};

void addDataOptions(CLI::App* cmd, DataArgs& a, bool allowSynthetic) {
    cmd->add_option("--data", a.data, "CSV file with a header row");
    cmd->add_option("--score-cols", a.scoreCols, "score columns in order (higher is better)")->delimiter(',');
    cmd->add_option("--group-col", a.groupCol, "column holding the group label");
    cmd->add_option("--protected", a.protectedValue, "group label of the protected group");
    cmd->add_option("--derived", a.derived, "derived column name=expr, e.g. jail_days=c_jail_out-c_jail_in");
    cmd->add_option("--snap", a.snap, "decimal places of the score grid")->check(CLI::Range(0, 9));
    cmd->add_option("--delimiter", a.delimiter, "CSV delimiter");
    if (allowSynthetic) {
        cmd->add_option("--synthetic", a.synthetic, "generate a biased dataset with n[,d] rows instead of --data");
        cmd->add_option("--synthetic-share", a.syntheticShare, "protected share of the synthetic dataset");
        cmd->add_option("--synthetic-seed", a.syntheticSeed, "seed of the synthetic dataset");
    }
}

void addFairOptions(CLI::App* cmd, FairArgs& f) {
    cmd->add_option("--k", f.k, "size of the selection")->required();
    cmd->add_option("--lower", f.lower, "minimum protected members in the top-k (default 0)");
    cmd->add_option("--upper", f.upper, "maximum protected members in the top-k (default k)");
}

Dataset loadDataset(const DataArgs& a) {
    if (!a.synthetic.empty()) {
        std::vector<int> parts;
        std::stringstream ss(a.synthetic);
        for (std::string item; std::getline(ss, item, ',');) parts.push_back(std::stoi(item));
        int n = parts.at(0);
        int d = parts.size() > 1 ? parts[1] : 2;
        std::cerr << "generated synthetic dataset: n=" << n << " d=" << d << "\n";
        return syntheticBiased(n, d, a.syntheticShare, a.syntheticSeed);
    }
    if (a.data.empty()) throw ParameterError("--data is required");
    IngestionSpec spec;
    spec.path = a.data;
    spec.scoreColumns = a.scoreCols;
    spec.groupColumn = a.groupCol;
    spec.protectedValue = a.protectedValue;
    spec.derivedColumns = a.derived;
    spec.snapPlaces = a.snap;
    if (a.delimiter.size() != 1) throw ParameterError("delimiter must be a single character");
    spec.delimiter = a.delimiter[0];
    IngestionResult r = ingestCsv(spec);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    std::cerr << "loaded " << r.dataset.size() << " rows (" << r.rowsDropped << " dropped), protected share "
              << std::fixed << std::setprecision(4) << static_cast<double>(r.dataset.protectedCount()) / r.dataset.size()
              << "\n";
    return std::move(r.dataset);
}

FairnessSpec makeSpec(const Dataset& ds, const FairArgs& f) {
    FairnessSpec spec(f.k, f.lower.value_or(0), f.upper.value_or(f.k));
    spec.checkAgainst(ds);
    if (spec.lower > ds.protectedCount())
        std::cerr << "warning: lower bound " << spec.lower << " exceeds the " << ds.protectedCount()
                  << " protected candidates; no subset can be fair\n";
    return spec;
}

WeightVector parseWeights(const std::vector<std::string>& parts) {
    if (parts.empty()) throw ParameterError("a weight vector is required");
    return WeightVector::fromStrings(parts);
}

std::string formatWeight(const WeightVector& w) {
    std::string out = "(";
    for (int i = 0; i < w.dim(); ++i) out += (i ? ", " : "") + toDecimalString(w[i], 9);
    return out + ")";
}

void writeJson(const std::string& path, const Json& j) {
    if (path.empty()) return;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

std::vector<std::string> split(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fair top-k selection: audit a linear scoring function or find a fair one nearby"};
    app.require_subcommand(1);

    DataArgs data;
    FairArgs fair;
    std::vector<std::string> w0;
    std::string eps = "0.1";
    std::string algorithm = "sweep2d";
    int workers = 1;
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> budget;
    std::optional<std::int64_t> timeLimit;
    std::string out;

    auto* audit = app.add_subcommand("audit", "report the protected-count interval of the top-k at a weight vector");
    addDataOptions(audit, data, true);
    addFairOptions(audit, fair);
    audit->add_option("--w0,--w", w0, "weight vector, comma separated")->delimiter(',')->required();
    audit->add_option("--out", out, "JSON report path");

    auto* repair = app.add_subcommand("repair", "search the eps-box around w0 for a fair weight vector");
    addDataOptions(repair, data, true);
    addFairOptions(repair, fair);
    repair->add_option("--w0", w0, "starting weight vector, comma separated")->delimiter(',')->required();
    repair->add_option("--eps", eps, "max per-component change");
    repair->add_option("--algorithm", algorithm, "sweep2d | klevel-hd | milp | oracle");
    repair->add_option("--workers", workers, "worker threads for klevel-hd");
    repair->add_option("--seed", seed, "random seed");
    repair->add_option("--budget", budget, "subset budget (klevel-hd) or node budget (milp)");
    repair->add_option("--time-limit", timeLimit, "time limit in milliseconds");
    repair->add_option("--out", out, "JSON report path");

    std::string benchK = "50";
    std::string benchEps = "0.1";
    std::string benchAlgorithms = "sweep2d";
    std::string benchWorkers = "1";
    int samples = 20;
    double lowerShare = 0.4;
    double upperShare = 0.6;
    std::int64_t benchLimit = 10000;
    auto* bench = app.add_subcommand("bench", "time repairs over a fixed set of unfair weight samples");
    addDataOptions(bench, data, true);
    bench->add_option("--k", benchK, "comma separated list of k");
    bench->add_option("--lower", fair.lower, "fixed lower bound (otherwise from --lower-share)");
    bench->add_option("--upper", fair.upper, "fixed upper bound (otherwise from --upper-share)");
    bench->add_option("--lower-share", lowerShare, "lower bound as a share of k");
    bench->add_option("--upper-share", upperShare, "upper bound as a share of k");
    bench->add_option("--eps", benchEps, "comma separated list of eps");
    bench->add_option("--algorithm", benchAlgorithms, "comma separated list of algorithms");
    bench->add_option("--workers", benchWorkers, "comma separated worker counts (klevel-hd)");
    bench->add_option("--samples", samples, "unfair weight samples per k");
    bench->add_option("--seed", seed, "sampling seed");
    bench->add_option("--budget", budget, "subset or node budget");
    bench->add_option("--time-limit", benchLimit, "per-run time limit in milliseconds");
    bench->add_option("--out", out, "metrics JSON path");

    auto* exportMilp = app.add_subcommand("export-milp", "write the feasibility MILP in CPLEX-LP format");
    addDataOptions(exportMilp, data, false);
    addFairOptions(exportMilp, fair);
    exportMilp->add_option("--w0", w0, "centre of the eps-box (omit for the whole simplex)")->delimiter(',');
    exportMilp->add_option("--eps", eps, "box half-width");
    exportMilp->add_option("--out", out, "LP file path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        Dataset ds = loadDataset(data);

        if (audit->parsed()) {
            FairnessSpec spec = makeSpec(ds, fair);
            WeightVector w = parseWeights(w0);
            AuditReport r = runAudit(ds, w, spec);
            std::cout << "weight        " << formatWeight(w) << "\n"
                      << "top-" << spec.k << "         " << r.topk.strictlyIn.size() << " strictly in, "
                      << r.topk.slots << " of " << r.topk.tiedPool.size() << " tied\n"
                      << "protected     [" << r.interval.minG1 << ", " << r.interval.maxG1 << "] vs bounds ["
                      << spec.lower << ", " << spec.upper << "]\n"
                      << "verdict       " << (r.fair ? "fair" : "unfair") << "\n";
            for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
            writeJson(out, toJson(r));
        } else if (repair->parsed()) {
            FairnessSpec spec = makeSpec(ds, fair);
            RepairOptions options;
            options.algorithm = parseAlgorithm(algorithm);
            options.workers = workers;
            options.seed = seed;
            options.budget = budget;
            if (timeLimit) options.timeLimit = std::chrono::milliseconds(*timeLimit);
            RepairReport r = runRepair(ds, parseWeights(w0), parseDecimal(eps), spec, options);
            std::cout << "algorithm     " << toString(r.algorithm) << "\n"
                      << "verdict       " << toString(r.verdict) << "\n";
            if (r.weight) std::cout << "weight        " << formatWeight(*r.weight) << "\n";
            std::cout << "counters      events=" << r.counters.events << " lps=" << r.counters.lps
                      << " nodes=" << r.counters.nodes << "\n"
                      << "wall          " << std::fixed << std::setprecision(3) << r.wallMillis << " ms\n";
            for (const auto& line : r.transcript) std::cout << "  " << line << "\n";
            for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
            writeJson(out, toJson(r));
        } else if (bench->parsed()) {
            BenchConfig config;
            config.ks.clear();
            for (const auto& k : split(benchK)) config.ks.push_back(std::stoi(k));
            config.epsilons.clear();
            for (const auto& e : split(benchEps)) config.epsilons.push_back(parseDecimal(e));
            config.algorithms.clear();
            for (const auto& a : split(benchAlgorithms)) config.algorithms.push_back(parseAlgorithm(a));
            config.workers.clear();
            for (const auto& w : split(benchWorkers)) config.workers.push_back(std::stoi(w));
            config.samples = samples;
            config.lowerShare = lowerShare;
            config.upperShare = upperShare;
            if (fair.lower || fair.upper) config.fixedBounds = std::make_pair(fair.lower.value_or(0), fair.upper.value_or(1 << 30));
            config.timeLimit = std::chrono::milliseconds(benchLimit);
            config.budget = budget;
            config.seed = seed;
            BenchResult r = runBench(ds, config);
            for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
            std::cout << std::left << std::setw(11) << "algorithm" << std::setw(7) << "k" << std::setw(8) << "eps"
                      << std::setw(9) << "workers" << std::setw(6) << "runs" << std::setw(7) << "found"
                      << std::setw(9) << "timeout" << "mean ms\n";
            for (const auto& s : r.summaries)
                std::cout << std::left << std::setw(11) << toString(s.algorithm) << std::setw(7) << s.k << std::setw(8)
                          << toDecimalString(s.eps) << std::setw(9) << s.workers << std::setw(6) << s.runs
                          << std::setw(7) << s.found << std::setw(9) << s.timeouts << std::fixed
                          << std::setprecision(3) << s.meanMillis << "\n";
            writeJson(out, toJson(r));
        } else if (exportMilp->parsed()) {
            FairnessSpec spec = makeSpec(ds, fair);
            WeightBox box = w0.empty() ? WeightBox::simplex(ds.dim()) : fromEpsilonBox(parseWeights(w0), parseDecimal(eps));
            MilpModel m = buildModel(ds, spec, box);
            exportLpFile(m, out);
            std::cout << "wrote " << out << ": " << m.variableCount() << " variables, " << m.rows().size()
                      << " rows, " << m.n << " binaries\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
