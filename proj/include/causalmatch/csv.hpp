#pragma once

#include "causalmatch/types.hpp"

#include <string>
#include <vector>

namespace causalmatch {

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double value);

/// Strict full-string numeric parses; throw SchemaError on anything else.
double parse_double(const std::string& text);
long parse_long(const std::string& text);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;  // SchemaError when absent
};

/// Comma-separated, LF line endings, header row first. Fields must not
/// contain commas; none of the values written here do.
void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows);

Table read_table(const std::string& path);

/// Dataset files use the header y,w,x1..xp.
void write_dataset_csv(const std::string& path, const Dataset& data);
Dataset read_dataset_csv(const std::string& path);

/// Match files use the header unit_index,role,pair_id,stratum,weight with
/// role in {treated, control, pruned}, pair_id -1 for unpaired units, and
/// stratum a |-joined bin key (empty outside CEM).
void write_match_csv(const std::string& path, const MatchResult& match,
                     const std::vector<int>& W);

/// Rebuilds weights, pairs, and counts against the dataset the match was
/// made from. Strata are not reconstructed beyond the design label.
MatchResult read_match_csv(const std::string& path, const Dataset& data);

}  // namespace causalmatch
