#include "causalmatch/simulate.hpp"

#include "causalmatch/cem.hpp"
#include "causalmatch/csv.hpp"
#include "causalmatch/psm.hpp"

#include <filesystem>

namespace causalmatch {

namespace {

void append_report_rows(std::vector<std::vector<std::string>>& rows, const std::string& design,
                        const BalanceReport& report, const MatchResult& match) {
    for (Eigen::Index j = 0; j < report.smd.size(); ++j) {
        rows.push_back({design, "smd", "x" + std::to_string(j + 1), format_double(report.smd[j])});
    }
    if (report.has_i1) rows.push_back({design, "i1", "", format_double(report.i1)});
    rows.push_back({design, "i2", "", format_double(report.i2)});
    rows.push_back({design, "i3", "", format_double(report.i3)});
    rows.push_back({design, "i4", "", format_double(report.i4)});
    rows.push_back({design, "matched_treated", "", std::to_string(match.matched_treated)});
    rows.push_back({design, "matched_control", "", std::to_string(match.matched_control)});
}

}  // namespace

std::vector<std::string> match_user_data(const std::string& csv_path,
                                         const UserMatchOptions& options,
                                         const std::string& output_dir) {
    if (options.designs.empty()) throw ConfigInvalid("no designs requested");
    for (const auto& model : options.models) {
        if (model != "mw" && model != "mwx") {
            throw ConfigInvalid("user-data estimation supports models mw and mwx only");
        }
    }

    const Dataset data = read_dataset_csv(csv_path);

    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(output_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + output_dir + "'");
    const auto out_path = [&](const std::string& name) {
        return (fs::path(output_dir) / name).string();
    };

    std::vector<std::string> written;

    // Pre-match balance over the raw sample.
    {
        const MatchResult pre = unmatched_design(data);
        const BalanceReport report = balance_report(data, pre);
        std::vector<std::vector<std::string>> rows;
        append_report_rows(rows, "unmatched", report, pre);
        const std::string path = out_path("balance_pre.csv");
        write_table(path, {"design", "metric", "covariate", "value"}, rows);
        written.push_back(path);
    }

    std::vector<std::vector<std::string>> estimate_rows;
    for (const auto& design : options.designs) {
        MatchResult match;
        switch (design.kind) {
            case DesignSpec::Kind::kUnmatched:
                match = unmatched_design(data);
                break;
            case DesignSpec::Kind::kPsm: {
                const PropensityResult propensity =
                    estimate_propensity(data, FormulaSpec::linear(data.p()));
                const double caliper =
                    caliper_width(propensity.logits, options.caliper_multiplier);
                match = psm_match(propensity.logits, data.W, caliper);
                break;
            }
            case DesignSpec::Kind::kCem: {
                const CoarsenedData coarse = coarsen(data, design.coarsening);
                match = cem_match(data, coarse, design.mode);
                break;
            }
        }

        const std::string match_path = out_path("match_" + design.name + ".csv");
        write_match_csv(match_path, match, data.W);
        written.push_back(match_path);

        const BalanceReport report = balance_report(data, match);
        std::vector<std::vector<std::string>> rows;
        append_report_rows(rows, design.name, report, match);
        const std::string balance_path = out_path("balance_" + design.name + ".csv");
        write_table(balance_path, {"design", "metric", "covariate", "value"}, rows);
        written.push_back(balance_path);

        for (const auto& model : options.models) {
            const ModelSpec spec =
                model == "mw" ? ModelSpec::unadjusted() : ModelSpec::linear_adjusted(data.p());
            const EstimateRecord record = estimate(match, data, spec);
            estimate_rows.push_back({design.name, spec.label,
                                     format_double(record.point_estimate),
                                     std::to_string(match.matched_treated),
                                     std::to_string(match.matched_control)});
        }
    }

    if (!estimate_rows.empty()) {
        const std::string path = out_path("estimates.csv");
        write_table(path, {"design", "model", "estimate", "matched_treated", "matched_control"},
                    estimate_rows);
        written.push_back(path);
    }
    return written;
}

}  // namespace causalmatch
