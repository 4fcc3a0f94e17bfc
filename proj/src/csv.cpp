#include "causalmatch/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace causalmatch {

std::string format_double(double value) {
    char buf[40];
    for (int precision = 1; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
        double back = 0.0;
        const auto result = std::from_chars(buf, buf + std::char_traits<char>::length(buf), back);
        if (result.ec == std::errc() && back == value) break;
    }
    return buf;
}

double parse_double(const std::string& text) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto result = std::from_chars(begin, end, value);
    if (result.ec != std::errc() || result.ptr != end || text.empty()) {
        throw SchemaError("not a number: '" + text + "'");
    }
    return value;
}

long parse_long(const std::string& text) {
    long value = 0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto result = std::from_chars(begin, end, value);
    if (result.ec != std::errc() || result.ptr != end || text.empty()) {
        throw SchemaError("not an integer: '" + text + "'");
    }
    return value;
}

int Table::column(const std::string& name) const {
    const auto pos = std::find(header.begin(), header.end(), name);
    if (pos == header.end()) throw SchemaError("missing column '" + name + "'");
    return static_cast<int>(pos - header.begin());
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

std::string join(const std::vector<std::string>& fields) {
    std::string line;
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) line += ',';
        line += fields[i];
    }
    return line;
}

}  // namespace

void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << join(header) << '\n';
    for (const auto& row : rows) {
        if (row.size() != header.size()) {
            throw DataError("row width does not match the header in '" + path + "'");
        }
        out << join(row) << '\n';
    }
    if (!out.flush()) throw IoError("failed writing '" + path + "'");
}

Table read_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");

    Table table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (first) {
            table.header = split_line(line);
            first = false;
            continue;
        }
        if (line.empty()) continue;
        auto fields = split_line(line);
        if (fields.size() != table.header.size()) {
            throw SchemaError("row width does not match the header in '" + path + "'");
        }
        table.rows.push_back(std::move(fields));
    }
    if (first) throw SchemaError("'" + path + "' is empty");
    return table;
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
    validate_dataset(data);
    std::vector<std::string> header{"y", "w"};
    for (int j = 0; j < data.p(); ++j) header.push_back("x" + std::to_string(j + 1));

    std::vector<std::vector<std::string>> rows;
    rows.reserve(static_cast<size_t>(data.n()));
    for (int i = 0; i < data.n(); ++i) {
        std::vector<std::string> row;
        row.reserve(header.size());
        row.push_back(format_double(data.Y[i]));
        row.push_back(std::to_string(data.W[static_cast<size_t>(i)]));
        for (int j = 0; j < data.p(); ++j) row.push_back(format_double(data.X(i, j)));
        rows.push_back(std::move(row));
    }
    write_table(path, header, rows);
}

Dataset read_dataset_csv(const std::string& path) {
    const Table table = read_table(path);
    if (table.header.size() < 3 || table.header[0] != "y" || table.header[1] != "w") {
        throw SchemaError("expected header y,w,x1,... in '" + path + "'");
    }
    const int p = static_cast<int>(table.header.size()) - 2;
    for (int j = 0; j < p; ++j) {
        if (table.header[static_cast<size_t>(j) + 2] != "x" + std::to_string(j + 1)) {
            throw SchemaError("expected column x" + std::to_string(j + 1) + " in '" + path + "'");
        }
    }
    if (table.rows.empty()) throw SchemaError("'" + path + "' has no data rows");

    Dataset data;
    const int n = static_cast<int>(table.rows.size());
    data.X.resize(n, p);
    data.W.resize(static_cast<size_t>(n));
    data.Y.resize(n);
    for (int i = 0; i < n; ++i) {
        const auto& row = table.rows[static_cast<size_t>(i)];
        data.Y[i] = parse_double(row[0]);
        const double w = parse_double(row[1]);
        if (w != 0.0 && w != 1.0) {
            throw SchemaError("w must be 0 or 1, found '" + row[1] + "'");
        }
        data.W[static_cast<size_t>(i)] = static_cast<int>(w);
        for (int j = 0; j < p; ++j) {
            data.X(i, j) = parse_double(row[static_cast<size_t>(j) + 2]);
        }
    }
    validate_dataset(data);
    return data;
}

void write_match_csv(const std::string& path, const MatchResult& match,
                     const std::vector<int>& W) {
    const int n = static_cast<int>(match.weights.size());
    if (W.size() != match.weights.size()) {
        throw DimensionMismatch("treatment vector does not match the weight vector");
    }

    std::vector<int> pair_id(static_cast<size_t>(n), -1);
    for (size_t k = 0; k < match.pairs.size(); ++k) {
        pair_id[static_cast<size_t>(match.pairs[k].first)] = static_cast<int>(k);
        pair_id[static_cast<size_t>(match.pairs[k].second)] = static_cast<int>(k);
    }

    std::vector<std::string> stratum_of(static_cast<size_t>(n));
    for (const auto& stratum : match.strata) {
        std::string key;
        for (size_t d = 0; d < stratum.key.size(); ++d) {
            if (d) key += '|';
            key += std::to_string(stratum.key[d]);
        }
        for (int i : stratum.members) stratum_of[static_cast<size_t>(i)] = key;
    }

    std::vector<std::vector<std::string>> rows;
    rows.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double w = match.weights[static_cast<size_t>(i)];
        const char* role = w <= 0.0 ? "pruned" : (W[static_cast<size_t>(i)] == 1 ? "treated" : "control");
        rows.push_back({std::to_string(i), role, std::to_string(pair_id[static_cast<size_t>(i)]),
                        stratum_of[static_cast<size_t>(i)], format_double(w)});
    }
    write_table(path, {"unit_index", "role", "pair_id", "stratum", "weight"}, rows);
}

MatchResult read_match_csv(const std::string& path, const Dataset& data) {
    validate_dataset(data);
    const Table table = read_table(path);
    const int col_unit = table.column("unit_index");
    const int col_role = table.column("role");
    const int col_pair = table.column("pair_id");
    const int col_stratum = table.column("stratum");
    const int col_weight = table.column("weight");

    const int n = data.n();
    if (static_cast<int>(table.rows.size()) != n) {
        throw SchemaError("match file has " + std::to_string(table.rows.size()) +
                          " rows but the dataset has " + std::to_string(n));
    }

    MatchResult match;
    match.weights.assign(static_cast<size_t>(n), -1.0);
    match.m_treated = data.treated_count();
    match.m_control = n - match.m_treated;

    std::map<int, std::pair<int, int>> pair_sides;  // pair_id -> (treated, control)
    bool any_stratum = false;
    for (const auto& row : table.rows) {
        const long unit = parse_long(row[static_cast<size_t>(col_unit)]);
        if (unit < 0 || unit >= n) throw SchemaError("unit_index out of range");
        if (match.weights[static_cast<size_t>(unit)] >= 0.0) {
            throw SchemaError("duplicate unit_index " + std::to_string(unit));
        }
        const double weight = parse_double(row[static_cast<size_t>(col_weight)]);
        if (weight < 0.0) throw SchemaError("negative weight");
        const std::string& role = row[static_cast<size_t>(col_role)];
        const int w = data.W[static_cast<size_t>(unit)];
        const bool role_ok = (role == "pruned" && weight == 0.0) ||
                             (role == "treated" && weight > 0.0 && w == 1) ||
                             (role == "control" && weight > 0.0 && w == 0);
        if (!role_ok) {
            throw SchemaError("role '" + role + "' conflicts with unit " + std::to_string(unit));
        }
        match.weights[static_cast<size_t>(unit)] = weight;
        if (weight > 0.0) {
            ++(w == 1 ? match.matched_treated : match.matched_control);
        }

        const long pair = parse_long(row[static_cast<size_t>(col_pair)]);
        if (pair >= 0) {
            auto& sides = pair_sides.try_emplace(static_cast<int>(pair), -1, -1).first->second;
            int& side = w == 1 ? sides.first : sides.second;
            if (side != -1) throw SchemaError("pair " + std::to_string(pair) + " has two " +
                                              (w == 1 ? "treated" : "control") + " units");
            side = static_cast<int>(unit);
        }
        any_stratum |= !row[static_cast<size_t>(col_stratum)].empty();
    }

    for (const auto& [id, sides] : pair_sides) {
        if (sides.first == -1 || sides.second == -1) {
            throw SchemaError("pair " + std::to_string(id) + " is incomplete");
        }
        match.pairs.emplace_back(sides.first, sides.second);
    }

    if (any_stratum) {
        match.design_label =
            match.pairs.empty() ? DesignLabel::kCemWeights : DesignLabel::kCemOneToOne;
    } else if (!match.pairs.empty()) {
        match.design_label = DesignLabel::kPsm;
    } else {
        match.design_label = DesignLabel::kUnmatched;
    }
    if (match.matched_treated + match.matched_control > 0) {
        match.treated_share_delta =
            static_cast<double>(match.matched_treated) /
            static_cast<double>(match.matched_treated + match.matched_control);
    }
    return match;
}

}  // namespace causalmatch
