/*
 * This Source Code Form is subject to the terms of the Mozilla Public
 * License, v. 2.0. If a copy of the MPL was not distributed with this
 * file, You can obtain one at https://mozilla.org/MPL/2.0/.
 */

#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fairtopk/errors.hpp"
#include "fairtopk/model.hpp"

namespace fairtopk {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw IngestionError("missing column '" + name + "'");
        return static_cast<int>(it - header.begin());
    }
};

/// RFC 4180 style reader: quoted fields may hold delimiters, quotes ("") and newlines.
inline CsvTable readCsv(std::istream& in, char delimiter = ',') {
    CsvTable table;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool any = false;
    auto endRecord = [&] {
        record.push_back(std::move(field));
        field.clear();
        if (table.header.empty()) {
            table.header = std::move(record);
            if (!table.header.empty() && table.header[0].rfind("\xEF\xBB\xBF", 0) == 0) table.header[0].erase(0, 3);
        } else if (!(record.size() == 1 && record[0].empty())) {
            table.rows.push_back(std::move(record));
        }
        record.clear();
        any = false;
    };
    char ch;
    while (in.get(ch)) {
        if (quoted) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    in.get(ch);
                    field += '"';
                } else {
                    quoted = false;
                }
            } else {
                field += ch;
            }
            continue;
        }
        if (ch == '"' && field.empty()) {
            quoted = true;
            any = true;
        } else if (ch == delimiter) {
            record.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (ch == '\n') {
            endRecord();
        } else if (ch != '\r') {
            field += ch;
            any = true;
        }
    }
    if (quoted) throw IngestionError("unterminated quoted field");
    if (any || !field.empty()) endRecord();
    if (table.header.empty()) throw IngestionError("CSV input has no header row");
    return table;
}

inline CsvTable readCsvFile(const std::string& path, char delimiter = ',') {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IngestionError("cannot open " + path);
    return readCsv(file, delimiter);
}

/// Parses a plain number, or a date "YYYY-MM-DD[ HH:MM[:SS]]" as days since 1970-01-01.
inline std::optional<double> parseCell(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (text.empty()) return std::nullopt;
    double value = 0;
    const char* first = text.data();
    if (text.front() == '+') ++first;
    auto [end, ec] = std::from_chars(first, text.data() + text.size(), value);
    if (ec == std::errc() && end == text.data() + text.size()) {
        if (!std::isfinite(value)) return std::nullopt;
        return value;
    }
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    std::string copy(text);
    int got = std::sscanf(copy.c_str(), "%4d-%2d-%2d%*[ T]%2d:%2d:%2d", &y, &mo, &d, &h, &mi, &s);
    if (got < 3) return std::nullopt;
    using namespace std::chrono;
    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    double days = static_cast<double>(sys_days{ymd}.time_since_epoch().count());
    return days + (h * 3600.0 + mi * 60.0 + s) / 86400.0;
}

/// name=expr where expr adds and subtracts columns and numbers,
/// e.g. "jail_days=c_jail_out-c_jail_in" or "neg_priors=-priors_count".
struct DerivedColumn {
    std::string name;
    std::vector<std::pair<int, std::string>> terms;  // (+1 / -1, column name or number)

    static DerivedColumn parse(const std::string& definition) {
        auto eq = definition.find('=');
        if (eq == std::string::npos || eq == 0) throw ParameterError("derived column needs name=expression: " + definition);
        DerivedColumn out;
        out.name = definition.substr(0, eq);
        std::string expr = definition.substr(eq + 1);
        auto trim = [](std::string t) {
            t.erase(0, t.find_first_not_of(' '));
            t.erase(t.find_last_not_of(' ') + 1);
            return t;
        };
        int sign = 1;
        std::string token;
        for (char c : expr) {
            // keep the sign of an exponent such as 1e-3 inside the token
            bool exponent = token.size() >= 2 && (token.back() == 'e' || token.back() == 'E') &&
                            std::isdigit(static_cast<unsigned char>(token[token.size() - 2]));
            if ((c == '+' || c == '-') && !exponent) {
                std::string t = trim(token);
                if (t.empty()) {
                    if (c == '-') sign = -sign;
                } else {
                    out.terms.emplace_back(sign, t);
                    sign = c == '-' ? -1 : 1;
                }
                token.clear();
                continue;
            }
            token += c;
        }
        std::string last = trim(token);
        if (last.empty()) throw ParameterError("derived column ends with an operator: " + definition);
        out.terms.emplace_back(sign, last);
        return out;
    }
};

struct IngestionSpec {
    std::string path;
    std::vector<std::string> scoreColumns;
    std::string groupColumn;
    std::string protectedValue;
    std::vector<std::string> derivedColumns;
    int snapPlaces = 6;
    char delimiter = ',';

    void validate() const {
        if (scoreColumns.empty()) throw ParameterError("at least one score column is required");
        if (groupColumn.empty()) throw ParameterError("group column is required");
        if (std::find(scoreColumns.begin(), scoreColumns.end(), groupColumn) != scoreColumns.end())
            throw ParameterError("group column cannot also be a score column");
    }
};

struct IngestionResult {
    Dataset dataset;
    int rowsRead = 0;
    int rowsDropped = 0;
    std::vector<std::string> warnings;
};

inline IngestionResult ingestTable(const CsvTable& table, const IngestionSpec& spec) {
    spec.validate();
    const Grid grid = Grid::withPlaces(spec.snapPlaces);
    std::vector<DerivedColumn> derived;
    for (const auto& def : spec.derivedColumns) derived.push_back(DerivedColumn::parse(def));

    const int groupCol = table.column(spec.groupColumn);
    std::unordered_map<std::string, int> derivedIndex;
    for (std::size_t i = 0; i < derived.size(); ++i) derivedIndex[derived[i].name] = static_cast<int>(i);

    // each score column is either a raw column or a derived one
    struct Source {
        int column = -1;
        int derived = -1;
    };
    std::vector<Source> sources;
    for (const auto& name : spec.scoreColumns) {
        auto it = derivedIndex.find(name);
        if (it != derivedIndex.end()) sources.push_back({-1, it->second});
        else sources.push_back({table.column(name), -1});
    }
    struct Term {
        int sign;
        int column;
        double constant;
    };
    std::vector<std::vector<Term>> compiled;
    for (const auto& dc : derived) {
        std::vector<Term> terms;
        for (const auto& [sign, token] : dc.terms) {
            auto hit = std::find(table.header.begin(), table.header.end(), token);
            if (hit != table.header.end()) {
                terms.push_back({sign, static_cast<int>(hit - table.header.begin()), 0});
            } else if (auto number = parseCell(token)) {
                terms.push_back({sign, -1, *number});
            } else {
                throw IngestionError("derived column '" + dc.name + "' refers to missing column '" + token + "'");
            }
        }
        compiled.push_back(std::move(terms));
    }

    int rowsRead = 0;
    int rowsDropped = 0;
    std::vector<std::string> warnings;
    std::vector<std::vector<double>> raw;
    std::vector<bool> isProtected;
    std::vector<int> ids;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        ++rowsRead;
        auto cell = [&](int col) -> std::optional<double> {
            if (col >= static_cast<int>(row.size())) return std::nullopt;
            return parseCell(row[col]);
        };
        std::vector<double> values;
        bool ok = true;
        for (const Source& s : sources) {
            std::optional<double> v;
            if (s.column >= 0) {
                v = cell(s.column);
            } else {
                double acc = 0;
                for (const Term& t : compiled[s.derived]) {
                    std::optional<double> part = t.column >= 0 ? cell(t.column) : std::optional<double>(t.constant);
                    if (!part) {
                        acc = NAN;
                        break;
                    }
                    acc += t.sign * *part;
                }
                if (std::isfinite(acc)) v = acc;
            }
            if (!v) {
                ok = false;
                break;
            }
            values.push_back(*v);
        }
        if (!ok) {
            ++rowsDropped;
            continue;
        }
        std::string group = groupCol < static_cast<int>(row.size()) ? row[groupCol] : std::string();
        isProtected.push_back(group == spec.protectedValue);
        raw.push_back(std::move(values));
        ids.push_back(static_cast<int>(r));
    }
    if (raw.empty()) throw IngestionError("no usable rows in input");
    if (rowsDropped > 0)
        warnings.push_back("dropped " + std::to_string(rowsDropped) +
                                  " rows with missing or non-numeric scores");

    const int d = static_cast<int>(sources.size());
    std::vector<Candidate> cs(raw.size());
    for (int j = 0; j < d; ++j) {
        double lo = raw[0][j], hi = raw[0][j];
        for (const auto& v : raw) {
            lo = std::min(lo, v[j]);
            hi = std::max(hi, v[j]);
        }
        if (hi == lo)
            warnings.push_back("column '" + spec.scoreColumns[j] + "' is constant; normalized to 0");
        for (std::size_t i = 0; i < raw.size(); ++i) {
            double normalized = hi == lo ? 0.0 : (raw[i][j] - lo) / (hi - lo);
            cs[i].ticks.push_back(std::clamp<std::int64_t>(grid.snap(normalized), 0, grid.scale));
        }
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
        cs[i].id = ids[i];
        cs[i].scale = grid.scale;
        cs[i].group = isProtected[i] ? 0 : 1;
    }
    Dataset ds(std::move(cs), {spec.protectedValue, "other"}, 0, grid, spec.scoreColumns);
    return IngestionResult{std::move(ds), rowsRead, rowsDropped, std::move(warnings)};
}

inline IngestionResult ingestCsv(const IngestionSpec& spec) {
    spec.validate();
    return ingestTable(readCsvFile(spec.path, spec.delimiter), spec);
}

}  // namespace fairtopk
