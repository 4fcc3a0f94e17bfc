#include "causalmatch/simulate.hpp"

#include "causalmatch/csv.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

namespace causalmatch {

Figure parse_figure(const std::string& name) {
    if (name == "fig1") return Figure::kFig1;
    if (name == "fig2") return Figure::kFig2;
    if (name == "fig3") return Figure::kFig3;
    if (name == "imbalance_vs_n") return Figure::kImbalanceVsN;
    throw ConfigInvalid("unknown figure '" + name + "'");
}

namespace {

struct LoadedRun {
    RunManifest manifest;
    std::string dir;
};

std::vector<LoadedRun> scan_runs(const std::string& run_root) {
    namespace fs = std::filesystem;
    if (!fs::exists(run_root)) throw MissingRun("'" + run_root + "' does not exist");

    std::vector<std::string> candidates;
    if (fs::exists(fs::path(run_root) / "manifest.txt")) candidates.push_back(run_root);
    if (fs::is_directory(run_root)) {
        for (const auto& entry : fs::directory_iterator(run_root)) {
            if (entry.is_directory() && fs::exists(entry.path() / "manifest.txt")) {
                candidates.push_back(entry.path().string());
            }
        }
    }
    std::sort(candidates.begin(), candidates.end());

    std::vector<LoadedRun> runs;
    for (const auto& dir : candidates) {
        runs.push_back({read_manifest((std::filesystem::path(dir) / "manifest.txt").string()), dir});
    }
    if (runs.empty()) {
        throw MissingRun("no run directories with manifest.txt under '" + run_root + "'");
    }
    return runs;
}

using Rows = std::vector<std::vector<std::string>>;

const std::vector<std::string> kFigureHeader{"figure", "panel",  "scenario", "design",
                                             "metric", "x",      "y",        "annotation"};

std::string table_value(const Table& table, const std::vector<std::string>& row,
                        const std::string& column) {
    return row[static_cast<size_t>(table.column(column))];
}

// Sweep-run panels: one point per coefficient pair, x = sine distance.
void append_pair_panel(Rows& rows, const LoadedRun& run, const std::string& figure,
                       const std::string& panel, const std::string& model,
                       const std::string& metric, bool include_unmatched) {
    const Table pairs = read_table((std::filesystem::path(run.dir) / "pairs.csv").string());
    std::set<std::pair<std::string, std::string>> seen;  // (pair, design) for balance metrics
    for (const auto& row : pairs.rows) {
        const std::string design = table_value(pairs, row, "design");
        if (!include_unmatched && design == "unmatched") continue;
        const std::string x = table_value(pairs, row, "sine_distance");
        if (metric == "i5" || metric == "matched_size") {
            if (!seen.insert({table_value(pairs, row, "pair"), design}).second) continue;
            std::string y;
            if (metric == "i5") {
                y = table_value(pairs, row, "i5");
            } else {
                const double size = parse_double(table_value(pairs, row, "matched_treated_mean")) +
                                    parse_double(table_value(pairs, row, "matched_control_mean"));
                y = format_double(size);
            }
            rows.push_back({figure, panel, run.manifest.scenario_id, design, metric, x, y, ""});
        } else {
            if (table_value(pairs, row, "model") != model) continue;
            rows.push_back({figure, panel, run.manifest.scenario_id, design, metric, x,
                            table_value(pairs, row, metric), ""});
        }
    }
}

const LoadedRun* find_sweep(const std::vector<LoadedRun>& runs, bool nonlinear) {
    for (const auto& run : runs) {
        if (run.manifest.coefficient_pairs > 0 && run.manifest.nonlinear == nonlinear) {
            return &run;
        }
    }
    return nullptr;
}

double balance_metric(const Table& balance, const std::string& design,
                      const std::string& metric) {
    for (const auto& row : balance.rows) {
        if (table_value(balance, row, "design") == design &&
            table_value(balance, row, "metric") == metric) {
            return parse_double(table_value(balance, row, "value"));
        }
    }
    throw MissingRun("balance metric '" + metric + "' missing for design '" + design + "'");
}

void append_imbalance_vs_n(Rows& rows, const std::vector<LoadedRun>& runs,
                           const std::string& figure, const std::string& panel) {
    bool any = false;
    for (const auto& run : runs) {
        if (run.manifest.coefficient_pairs > 0 || run.manifest.nonlinear) continue;
        any = true;
        const Table balance =
            read_table((std::filesystem::path(run.dir) / "balance.csv").string());
        for (const auto& design : run.manifest.designs) {
            if (design == "unmatched") continue;
            const double size = balance_metric(balance, design, "matched_treated_mean") +
                                balance_metric(balance, design, "matched_control_mean");
            const std::string x = std::to_string(run.manifest.n);
            rows.push_back({figure, panel, run.manifest.scenario_id, design, "i5", x,
                            format_double(balance_metric(balance, design, "i5")),
                            format_double(size)});
            rows.push_back({figure, panel, run.manifest.scenario_id, design, "i2_mean", x,
                            format_double(balance_metric(balance, design, "i2_mean")),
                            format_double(size)});
        }
    }
    if (!any) {
        throw MissingRun("no fixed-coefficient linear runs found for the sample-size panel");
    }
}

struct AggregateCell {
    double bias = 0.0;
    double sd = 0.0;
    double mse = 0.0;
    bool found = false;
};

AggregateCell aggregate_cell(const Table& aggregate, const std::string& design,
                             const std::string& model) {
    AggregateCell cell;
    for (const auto& row : aggregate.rows) {
        if (table_value(aggregate, row, "design") != design ||
            table_value(aggregate, row, "model") != model) {
            continue;
        }
        cell.bias = parse_double(table_value(aggregate, row, "bias"));
        cell.sd = parse_double(table_value(aggregate, row, "sd"));
        cell.mse = parse_double(table_value(aggregate, row, "mse"));
        cell.found = true;
        break;
    }
    return cell;
}

void append_fig3_panel(Rows& rows, const LoadedRun& run, const std::string& panel,
                       const std::vector<std::string>& designs) {
    const Table aggregate =
        read_table((std::filesystem::path(run.dir) / "aggregate.csv").string());
    for (const auto& design : designs) {
        const AggregateCell cell = aggregate_cell(aggregate, design, "M(W+X)");
        if (!cell.found) {
            throw MissingRun("run '" + run.manifest.scenario_id + "' lacks design '" + design +
                             "' with the adjusted model");
        }
        const auto emit = [&](const char* metric, double value) {
            rows.push_back({"fig3", panel, run.manifest.scenario_id, design, metric, "",
                            format_double(value), ""});
        };
        emit("abs_bias", std::abs(cell.bias));
        emit("variance", cell.sd * cell.sd);
        emit("mse", cell.mse);
    }
}

std::string write_figure(const std::string& out_dir, const std::string& name, const Rows& rows) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + out_dir + "'");
    const std::string path = (fs::path(out_dir) / (name + ".csv")).string();
    write_table(path, kFigureHeader, rows);
    return path;
}

}  // namespace

std::vector<std::string> emit_figure_data(const std::string& run_root, Figure figure,
                                          const std::string& out_dir) {
    const std::vector<LoadedRun> runs = scan_runs(run_root);
    std::vector<std::string> written;

    switch (figure) {
        case Figure::kFig1: {
            const LoadedRun* sweep = find_sweep(runs, false);
            if (!sweep) throw MissingRun("fig1 needs a linear coefficient-pair sweep run");
            Rows rows;
            append_pair_panel(rows, *sweep, "fig1", "a", "M(W)", "abs_bias", false);
            append_pair_panel(rows, *sweep, "fig1", "b", "", "i5", false);
            append_pair_panel(rows, *sweep, "fig1", "c", "", "matched_size", false);
            append_imbalance_vs_n(rows, runs, "fig1", "d");
            written.push_back(write_figure(out_dir, "fig1", rows));
            break;
        }
        case Figure::kFig2: {
            const LoadedRun* linear = find_sweep(runs, false);
            const LoadedRun* nonlinear = find_sweep(runs, true);
            if (!linear || !nonlinear) {
                throw MissingRun("fig2 needs linear and nonlinear coefficient-pair sweep runs");
            }
            Rows rows;
            append_pair_panel(rows, *linear, "fig2", "a", "M(W+X)", "abs_bias", false);
            append_pair_panel(rows, *nonlinear, "fig2", "b", "M(W+X)", "abs_bias", false);
            for (const LoadedRun* run : {linear, nonlinear}) {
                const Table pairs =
                    read_table((std::filesystem::path(run->dir) / "pairs.csv").string());
                for (const auto& row : pairs.rows) {
                    if (table_value(pairs, row, "design") != "unmatched") continue;
                    const std::string model = table_value(pairs, row, "model");
                    if (model != "M(W)" && model != "M(W+X)") continue;
                    rows.push_back({"fig2", "c", run->manifest.scenario_id, "unmatched:" + model,
                                    "abs_bias", table_value(pairs, row, "sine_distance"),
                                    table_value(pairs, row, "abs_bias"), ""});
                }
            }
            written.push_back(write_figure(out_dir, "fig2", rows));
            break;
        }
        case Figure::kFig3: {
            const LoadedRun* linear7 = nullptr;
            const LoadedRun* nonlinear7 = nullptr;
            for (const auto& run : runs) {
                if (run.manifest.p != 7 || run.manifest.coefficient_pairs > 0) continue;
                (run.manifest.nonlinear ? nonlinear7 : linear7) = &run;
            }
            if (!linear7 || !nonlinear7) {
                throw MissingRun("fig3 needs 7-covariate linear and nonlinear runs");
            }
            Rows rows;
            append_fig3_panel(rows, *linear7, "a_c", {"psm", "cem-auto"});
            append_fig3_panel(rows, *linear7, "d_f", {"psm", "cem-g3"});
            append_fig3_panel(rows, *nonlinear7, "g_i", {"psm", "cem-g3"});
            written.push_back(write_figure(out_dir, "fig3", rows));
            break;
        }
        case Figure::kImbalanceVsN: {
            Rows rows;
            append_imbalance_vs_n(rows, runs, "imbalance_vs_n", "d");
            written.push_back(write_figure(out_dir, "imbalance_vs_n", rows));
            break;
        }
    }
    return written;
}

}  // namespace causalmatch
