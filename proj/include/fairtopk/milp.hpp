/*
 * This Source Code Form is subject to the terms of the Mozilla Public
 * License, v. 2.0. If a copy of the MPL was not distributed with this
 * file, You can obtain one at https://mozilla.org/MPL/2.0/.
 */

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fairtopk/control.hpp"
#include "fairtopk/errors.hpp"
#include "fairtopk/exact.hpp"
#include "fairtopk/geometry.hpp"
#include "fairtopk/model.hpp"
#include "fairtopk/seidel_lp.hpp"

namespace fairtopk {

enum class RowSense { LessEqual, GreaterEqual, Equal };

/// One linear row over the model variables (w1..wd, lam, d0..d{n-1}).
struct MilpRow {
    std::string name;
    std::vector<std::pair<int, Rational>> terms;  // (variable index, coefficient)
    RowSense sense = RowSense::LessEqual;
    Rational rhs;
};

/// Feasibility MILP over (w, lam, delta): candidate c is selected (delta_c = 1)
/// exactly when its score is above the cut-off lam, either way on a tie.
struct MilpModel {
    int d = 0;
    int n = 0;
    std::vector<int> ids;
    std::vector<std::vector<Rational>> scores;
    std::vector<bool> isProtected;
    int k = 0;
    int lower = 0;
    int upper = 0;
    std::vector<WeightInequality> box;

    int variableCount() const { return d + 1 + n; }
    int lambdaIndex() const { return d; }
    int deltaIndex(int c) const { return d + 1 + c; }

    std::string variableName(int v) const {
        if (v < d) return "w" + std::to_string(v + 1);
        if (v == d) return "lam";
        return "d" + std::to_string(v - d - 1);
    }

    std::vector<MilpRow> rows() const {
        std::vector<MilpRow> out;
        for (int c = 0; c < n; ++c) {
            std::vector<std::pair<int, Rational>> terms;
            for (int i = 0; i < d; ++i)
                if (sgn(scores[c][i]) != 0) terms.emplace_back(i, scores[c][i]);
            terms.emplace_back(lambdaIndex(), Rational(-1));
            terms.emplace_back(deltaIndex(c), Rational(-1));
            out.push_back({"win_lo_" + std::to_string(c), terms, RowSense::GreaterEqual, Rational(-1)});
            out.push_back({"win_hi_" + std::to_string(c), terms, RowSense::LessEqual, Rational(0)});
        }
        MilpRow card{"card", {}, RowSense::Equal, Rational(k)};
        for (int c = 0; c < n; ++c) card.terms.emplace_back(deltaIndex(c), Rational(1));
        out.push_back(std::move(card));
        std::vector<std::pair<int, Rational>> protectedTerms;
        for (int c = 0; c < n; ++c)
            if (isProtected[c]) protectedTerms.emplace_back(deltaIndex(c), Rational(1));
        out.push_back({"fair_lo", protectedTerms, RowSense::GreaterEqual, Rational(lower)});
        out.push_back({"fair_hi", protectedTerms, RowSense::LessEqual, Rational(upper)});
        MilpRow simplex{"simplex", {}, RowSense::Equal, Rational(1)};
        for (int i = 0; i < d; ++i) simplex.terms.emplace_back(i, Rational(1));
        out.push_back(std::move(simplex));
        for (std::size_t j = 0; j < box.size(); ++j) {
            MilpRow row{"box_" + std::to_string(j), {}, RowSense::LessEqual, box[j].b};
            for (int i = 0; i < d; ++i)
                if (sgn(box[j].a[i]) != 0) row.terms.emplace_back(i, box[j].a[i]);
            out.push_back(std::move(row));
        }
        return out;
    }

    int windowRowCount() const { return 2 * n; }
    int boxRowCount() const { return static_cast<int>(box.size()); }

    friend bool operator==(const MilpModel& a, const MilpModel& b) {
        if (a.d != b.d || a.n != b.n || a.ids != b.ids || a.scores != b.scores || a.isProtected != b.isProtected ||
            a.k != b.k || a.lower != b.lower || a.upper != b.upper || a.box.size() != b.box.size())
            return false;
        for (std::size_t j = 0; j < a.box.size(); ++j)
            if (a.box[j].a != b.box[j].a || a.box[j].b != b.box[j].b) return false;
        return true;
    }
};

inline MilpModel buildModel(const Dataset& ds, const FairnessSpec& spec, const WeightBox& box) {
    spec.checkAgainst(ds);
    if (box.d != ds.dim()) throw ParameterError("box dimension does not match dataset");
    MilpModel m;
    m.d = ds.dim();
    m.n = ds.size();
    m.k = spec.k;
    m.lower = spec.lower;
    m.upper = spec.upper;
    m.box = box.inequalities;
    for (const Candidate& c : ds.candidates()) {
        std::vector<Rational> p;
        for (int i = 0; i < c.dim(); ++i) {
            Rational v = c.exact(i);
            if (v < 0 || v > 1) throw ValidationError("scores must be normalized to [0,1]");
            p.push_back(std::move(v));
        }
        m.ids.push_back(c.id);
        m.scores.push_back(std::move(p));
        m.isProtected.push_back(ds.isProtected(c));
    }
    return m;
}

/// Whether delta agrees with the cut-off: below lam forces 0, above forces 1.
inline bool checkIndicatorSemantics(const Rational& score, const Rational& lambda, int delta) {
    if (delta != 0 && delta != 1) return false;
    if (score < lambda) return delta == 0;
    if (score > lambda) return delta == 1;
    return true;
}

inline bool checkIndicatorSemantics(const WeightVector& w, const Rational& lambda, const Candidate& c, int delta) {
    return checkIndicatorSemantics(exactScore(w, c), lambda, delta);
}

/// The window row pair -1 <= score - lam - delta <= 0 evaluated directly.
inline bool windowAdmits(const Rational& score, const Rational& lambda, const Rational& delta) {
    Rational slack = score - lambda - delta;
    return slack >= -1 && slack <= 0;
}

/// Exact check of an assignment against every row, the bounds and integrality.
inline bool verifyAssignment(const MilpModel& m, const std::vector<Rational>& values) {
    if (static_cast<int>(values.size()) != m.variableCount()) return false;
    for (int i = 0; i <= m.d; ++i)
        if (values[i] < 0 || values[i] > 1) return false;
    for (int c = 0; c < m.n; ++c) {
        const Rational& v = values[m.deltaIndex(c)];
        if (v != 0 && v != 1) return false;
    }
    for (const MilpRow& row : m.rows()) {
        Rational lhs = 0;
        for (const auto& [var, coeff] : row.terms) lhs += coeff * values[var];
        bool ok = row.sense == RowSense::LessEqual      ? lhs <= row.rhs
                  : row.sense == RowSense::GreaterEqual ? lhs >= row.rhs
                                                        : lhs == row.rhs;
        if (!ok) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// CPLEX-LP text format

namespace detail {

inline std::string lpNumber(const Rational& v) {
    if (!isTerminatingDecimal(v)) return toDecimalString(v, 40);
    return toDecimalString(v);
}

inline std::string lpExpression(const MilpModel& m, const std::vector<std::pair<int, Rational>>& terms) {
    if (terms.empty()) return "0 " + m.variableName(m.deltaIndex(0));
    std::string out;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const auto& [var, coeff] = terms[i];
        bool negative = coeff < 0;
        if (i == 0) out += negative ? "- " : "";
        else out += negative ? " - " : " + ";
        Rational magnitude = abs(coeff);
        if (magnitude != 1) out += lpNumber(magnitude) + " ";
        out += m.variableName(var);
    }
    return out;
}

inline const char* lpSense(RowSense s) {
    switch (s) {
        case RowSense::LessEqual: return "<=";
        case RowSense::GreaterEqual: return ">=";
        case RowSense::Equal: return "=";
    }
    return "=";
}

}  // namespace detail

inline std::string toLpString(const MilpModel& m) {
    std::ostringstream out;
    out << "\\ fair top-k feasibility model\n";
    out << "\\ ids:";
    for (int id : m.ids) out << ' ' << id;
    out << "\nMinimize\n obj: 0\nSubject To\n";
    for (const MilpRow& row : m.rows())
        out << ' ' << row.name << ": " << detail::lpExpression(m, row.terms) << ' ' << detail::lpSense(row.sense) << ' '
            << detail::lpNumber(row.rhs) << '\n';
    out << "Bounds\n";
    for (int i = 0; i <= m.d; ++i) out << " 0 <= " << m.variableName(i) << " <= 1\n";
    out << "Binaries\n";
    for (int c = 0; c < m.n; ++c) out << ' ' << m.variableName(m.deltaIndex(c));
    out << "\nEnd\n";
    return out.str();
}

inline void exportLpFile(const MilpModel& m, const std::string& path) {
    std::ofstream file(path);
    if (!file) throw std::runtime_error("cannot open " + path + " for writing");
    file << toLpString(m);
    if (!file) throw std::runtime_error("failed writing " + path);
}

/// Reads back a file produced by exportLpFile.
inline MilpModel parseLpString(const std::string& text) {
    struct ParsedRow {
        std::string name;
        std::vector<std::pair<std::string, Rational>> terms;
        std::string sense;
        Rational rhs;
    };
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::vector<int> ids;
    std::vector<ParsedRow> rows;
    std::vector<std::string> bounded;
    std::vector<std::string> binaries;
    while (std::getline(in, line)) {
        if (line.rfind("\\ ids:", 0) == 0) {
            std::istringstream ls(line.substr(6));
            int id;
            while (ls >> id) ids.push_back(id);
            continue;
        }
        if (line.empty() || line[0] == '\\') continue;
        if (line[0] != ' ') {
            section = line;
            continue;
        }
        std::istringstream ls(line);
        if (section == "Subject To") {
            ParsedRow row;
            ls >> row.name;
            if (row.name.empty() || row.name.back() != ':') throw ParameterError("malformed row: " + line);
            row.name.pop_back();
            std::vector<std::string> tokens;
            for (std::string tok; ls >> tok;) tokens.push_back(tok);
            if (tokens.size() < 3) throw ParameterError("malformed row: " + line);
            row.rhs = parseDecimal(tokens.back());
            row.sense = tokens[tokens.size() - 2];
            Rational sign = 1;
            std::optional<Rational> coeff;
            for (std::size_t i = 0; i + 2 < tokens.size(); ++i) {
                const std::string& tok = tokens[i];
                if (tok == "+") sign = 1;
                else if (tok == "-") sign = -1;
                else if (std::isdigit(static_cast<unsigned char>(tok[0])) || tok[0] == '.') coeff = parseDecimal(tok);
                else {
                    row.terms.emplace_back(tok, sign * coeff.value_or(Rational(1)));
                    sign = 1;
                    coeff.reset();
                }
            }
            rows.push_back(std::move(row));
        } else if (section == "Bounds") {
            std::string lo, op, name;
            ls >> lo >> op >> name;
            bounded.push_back(name);
        } else if (section == "Binaries") {
            for (std::string name; ls >> name;) binaries.push_back(name);
        }
    }

    MilpModel m;
    m.d = static_cast<int>(std::count_if(bounded.begin(), bounded.end(), [](const std::string& s) { return s[0] == 'w'; }));
    m.n = static_cast<int>(binaries.size());
    m.ids = ids.empty() ? std::vector<int>(m.n) : ids;
    if (static_cast<int>(m.ids.size()) != m.n) throw ParameterError("id list does not match binaries");
    m.scores.assign(m.n, std::vector<Rational>(m.d, Rational(0)));
    m.isProtected.assign(m.n, false);
    auto wIndex = [&](const std::string& name) {
        if (name.size() < 2 || name[0] != 'w') return -1;
        return std::stoi(name.substr(1)) - 1;
    };
    auto dIndex = [&](const std::string& name) {
        if (name.size() < 2 || name[0] != 'd') return -1;
        return std::stoi(name.substr(1));
    };
    for (const ParsedRow& row : rows) {
        if (row.name.rfind("win_hi_", 0) == 0) {
            int c = std::stoi(row.name.substr(7));
            for (const auto& [name, coeff] : row.terms)
                if (int i = wIndex(name); i >= 0) m.scores.at(c).at(i) = coeff;
        } else if (row.name == "card") {
            m.k = static_cast<int>(row.rhs.get_d());
        } else if (row.name == "fair_lo" || row.name == "fair_hi") {
            (row.name == "fair_lo" ? m.lower : m.upper) = static_cast<int>(row.rhs.get_d());
            for (const auto& [name, coeff] : row.terms)
                if (int c = dIndex(name); c >= 0 && sgn(coeff) != 0) m.isProtected.at(c) = true;
        } else if (row.name.rfind("box_", 0) == 0) {
            WeightInequality h{std::vector<Rational>(m.d, Rational(0)), row.rhs};
            for (const auto& [name, coeff] : row.terms)
                if (int i = wIndex(name); i >= 0) h.a.at(i) = coeff;
            m.box.push_back(std::move(h));
        }
    }
    return m;
}

inline MilpModel parseLpFile(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw std::runtime_error("cannot open " + path);
    std::stringstream buffer;
    buffer << file.rdbuf();
    return parseLpString(buffer.str());
}

// ---------------------------------------------------------------------------
// Branch and bound

struct MilpCounters {
    std::uint64_t nodes = 0;
    std::uint64_t lps = 0;
    std::uint64_t fixedByDominance = 0;
};

struct MilpOutcome {
    Verdict verdict = Verdict::Infeasible;
    WeightVector w;
    Rational lambda;
    std::vector<int> delta;
    MilpCounters counters;

    bool found() const { return verdict == Verdict::Found; }
    std::vector<int> selectedIds(const MilpModel& m) const {
        std::vector<int> out;
        if (!found()) return out;
        for (int c = 0; c < m.n; ++c)
            if (delta[c] == 1) out.push_back(m.ids[c]);
        std::sort(out.begin(), out.end());
        return out;
    }
};

struct MilpOptions {
    std::uint64_t seed = 0;
    std::uint64_t nodeBudget = 1'000'000;
    SolveControl control;
};

namespace detail {

class BranchAndBound {
public:
    BranchAndBound(const MilpModel& m, const MilpOptions& options) : m_(m), options_(options) {
        for (int c = 0; c < m.n; ++c) {
            // score in reduced weights: sum_i (p_i - p_d) w_i + p_d
            auto [coeffs, constant] = reduceLinearForm(m.scores[c]);
            reduced_.push_back(std::move(coeffs));
            constants_.push_back(std::move(constant));
        }
        dominates_.assign(m.n, std::vector<bool>(m.n, false));
        for (int a = 0; a < m.n; ++a)
            for (int b = 0; b < m.n; ++b) {
                if (a == b) continue;
                bool strict = true;
                for (int i = 0; i < m.d && strict; ++i) strict = m.scores[a][i] > m.scores[b][i];
                dominates_[a][b] = strict;
            }
        box_.d = m.d;
        box_.inequalities = m.box;
        for (int c = 0; c < m.n; ++c) groupSize_[m.isProtected[c] ? 0 : 1]++;
    }

    MilpOutcome run() {
        std::vector<signed char> root(m_.n, -1);
        for (int c = 0; c < m_.n; ++c) {
            int dominatedBy = 0;
            int dominating = 0;
            for (int o = 0; o < m_.n; ++o) {
                dominatedBy += dominates_[o][c];
                dominating += dominates_[c][o];
            }
            if (dominatedBy >= m_.k) root[c] = 0;
            else if (dominating >= m_.n - m_.k) root[c] = 1;
            if (root[c] >= 0) ++counters_.fixedByDominance;
        }

        std::vector<std::vector<signed char>> stack{std::move(root)};
        while (!stack.empty()) {
            if (auto reason = options_.control.stopReason()) return finish(*reason);
            if (counters_.nodes >= options_.nodeBudget) return finish(Verdict::BudgetExhausted);
            ++counters_.nodes;
            std::vector<signed char> fix = std::move(stack.back());
            stack.pop_back();
            if (!propagate(fix)) continue;

            std::optional<std::vector<Rational>> x = relax(fix);
            if (!x) continue;
            WeightVector w = liftSimplex(std::span<const Rational>(*x).first(m_.d - 1), m_.d);
            if (heuristic(fix, w)) return finish(Verdict::Found);

            int branch = pickBranch(fix, w);
            if (branch < 0) continue;  // fully fixed, yet no consistent subset at w
            std::vector<signed char> zero = fix;
            zero[branch] = 0;
            fix[branch] = 1;
            stack.push_back(std::move(zero));
            stack.push_back(std::move(fix));  // delta = 1 explored first
        }
        return finish(Verdict::Infeasible);
    }

private:
    // Counting and dominance implications; false when the node is infeasible.
    bool propagate(std::vector<signed char>& fix) const {
        for (bool changed = true; changed;) {
            changed = false;
            int ones[2] = {0, 0};
            int zeros[2] = {0, 0};
            for (int c = 0; c < m_.n; ++c) {
                int g = m_.isProtected[c] ? 0 : 1;
                if (fix[c] == 1) ++ones[g];
                if (fix[c] == 0) ++zeros[g];
            }
            const int totalOnes = ones[0] + ones[1];
            const int totalOpen = m_.n - zeros[0] - zeros[1];
            if (totalOnes > m_.k || totalOpen < m_.k) return false;
            // protected picks in [lower, upper]; the rest in [k - upper, k - lower]
            const int lo[2] = {m_.lower, m_.k - m_.upper};
            const int hi[2] = {m_.upper, m_.k - m_.lower};
            for (int g = 0; g < 2; ++g)
                if (ones[g] > hi[g] || groupSize_[g] - zeros[g] < lo[g]) return false;

            auto setFree = [&](auto pred, signed char value) {
                for (int c = 0; c < m_.n; ++c)
                    if (fix[c] < 0 && pred(c)) {
                        fix[c] = value;
                        changed = true;
                    }
            };
            auto any = [](int) { return true; };
            if (totalOnes == m_.k) setFree(any, 0);
            else if (totalOpen == m_.k) setFree(any, 1);
            for (int g = 0; g < 2; ++g) {
                auto inGroup = [&, g](int c) { return (m_.isProtected[c] ? 0 : 1) == g; };
                if (ones[g] == hi[g]) setFree(inGroup, 0);
                else if (groupSize_[g] - zeros[g] == lo[g]) setFree(inGroup, 1);
            }
            // strictly better than a selected candidate is selected; strictly
            // worse than a rejected one is rejected
            for (int a = 0; a < m_.n; ++a) {
                if (fix[a] < 0) continue;
                for (int b = 0; b < m_.n; ++b) {
                    if (fix[a] == 1 && dominates_[b][a]) {
                        if (fix[b] == 0) return false;
                        if (fix[b] < 0) fix[b] = 1, changed = true;
                    }
                    if (fix[a] == 0 && dominates_[a][b]) {
                        if (fix[b] == 1) return false;
                        if (fix[b] < 0) fix[b] = 0, changed = true;
                    }
                }
            }
        }
        return true;
    }

    // LP relaxation projected onto (reduced w, lam): the window rows bind only
    // for fixed indicators, every other row is implied by the variable ranges.
    std::optional<std::vector<Rational>> relax(const std::vector<signed char>& fix) {
        const int dim = m_.d;  // d - 1 reduced weights plus lam
        LinearProgram lp = simplexProgram(box_, 1);
        {
            std::vector<Rational> a(dim, Rational(0));
            a[dim - 1] = 1;
            lp.addLessEqual(a, 1);
            a[dim - 1] = -1;
            lp.addLessEqual(a, 0);
        }
        for (int c = 0; c < m_.n; ++c) {
            if (fix[c] < 0) continue;
            std::vector<Rational> a = reduced_[c];
            a.push_back(Rational(-1));
            if (fix[c] == 1) lp.addGreaterEqual(std::move(a), -constants_[c]);
            else lp.addLessEqual(std::move(a), -constants_[c]);
        }
        ++counters_.lps;
        LpSolution s = solve(lp, options_.seed + counters_.nodes);
        if (!s.feasible()) return std::nullopt;
        return s.x;
    }

    // Tries to complete the node at w with an exact top-k consistent with the fixings.
    bool heuristic(const std::vector<signed char>& fix, const WeightVector& w) {
        std::vector<Rational> score(m_.n);
        for (int c = 0; c < m_.n; ++c) {
            Rational s = 0;
            for (int i = 0; i < m_.d; ++i) s += m_.scores[c][i] * w[i];
            score[c] = std::move(s);
        }
        std::vector<Rational> sorted = score;
        std::nth_element(sorted.begin(), sorted.begin() + (m_.k - 1), sorted.end(), std::greater<>());
        const Rational kth = sorted[m_.k - 1];

        std::vector<int> delta(m_.n, 0);
        int slots = m_.k;
        int forcedProtected = 0;
        std::vector<int> freeTied[2];
        for (int c = 0; c < m_.n; ++c) {
            if (score[c] > kth) {
                if (fix[c] == 0) return false;
                delta[c] = 1;
                --slots;
                forcedProtected += m_.isProtected[c];
            }
        }
        for (int c = 0; c < m_.n; ++c) {
            if (score[c] != kth) {
                if (score[c] < kth && fix[c] == 1) return false;
                continue;
            }
            if (fix[c] == 1) {
                delta[c] = 1;
                --slots;
                forcedProtected += m_.isProtected[c];
            } else if (fix[c] < 0) {
                freeTied[m_.isProtected[c] ? 0 : 1].push_back(c);
            }
        }
        const int freeP = static_cast<int>(freeTied[0].size());
        const int freeO = static_cast<int>(freeTied[1].size());
        if (slots < 0 || slots > freeP + freeO) return false;
        int minP = forcedProtected + std::max(0, slots - freeO);
        int maxP = forcedProtected + std::min(slots, freeP);
        int target = std::max(minP, m_.lower);
        if (target > std::min(maxP, m_.upper)) return false;
        int takeP = target - forcedProtected;
        int takeO = slots - takeP;
        for (int i = 0; i < takeP; ++i) delta[freeTied[0][i]] = 1;
        for (int i = 0; i < takeO; ++i) delta[freeTied[1][i]] = 1;

        std::vector<Rational> values(w.values());
        values.push_back(kth);
        for (int c = 0; c < m_.n; ++c) values.push_back(Rational(delta[c]));
        if (!verifyAssignment(m_, values)) throw StateError("branch-and-bound produced an invalid assignment");
        result_ = MilpOutcome{Verdict::Found, w, kth, std::move(delta), {}};
        return true;
    }

    // Free indicator whose candidate sits closest to the cut-off at w.
    int pickBranch(const std::vector<signed char>& fix, const WeightVector& w) const {
        std::vector<Rational> score(m_.n);
        for (int c = 0; c < m_.n; ++c)
            for (int i = 0; i < m_.d; ++i) score[c] += m_.scores[c][i] * w[i];
        std::vector<Rational> sorted = score;
        std::nth_element(sorted.begin(), sorted.begin() + (m_.k - 1), sorted.end(), std::greater<>());
        const Rational& kth = sorted[m_.k - 1];
        int best = -1;
        Rational bestGap;
        for (int c = 0; c < m_.n; ++c) {
            if (fix[c] >= 0) continue;
            Rational gap = abs(score[c] - kth);
            if (best < 0 || gap < bestGap) {
                best = c;
                bestGap = gap;
            }
        }
        return best;
    }

    MilpOutcome finish(Verdict v) {
        MilpOutcome out = v == Verdict::Found ? std::move(*result_) : MilpOutcome{};
        out.verdict = v;
        out.counters = counters_;
        return out;
    }

    const MilpModel& m_;
    MilpOptions options_;
    std::vector<std::vector<Rational>> reduced_;
    std::vector<Rational> constants_;
    std::vector<std::vector<bool>> dominates_;
    WeightBox box_;
    int groupSize_[2] = {0, 0};
    MilpCounters counters_;
    std::optional<MilpOutcome> result_;
};

}  // namespace detail

inline MilpOutcome solveFeasibility(const MilpModel& m, const MilpOptions& options = {}) {
    if (m.n < 1) throw ValidationError("model needs at least one candidate");
    if (m.d < 1 || m.d > kMaxLpDimension) throw UnsupportedDimensionError("unsupported weight dimension");
    if (m.k < 1 || m.k > m.n) throw ParameterError("k out of range");
    detail::BranchAndBound bb(m, options);
    return bb.run();
}

}  // namespace fairtopk
