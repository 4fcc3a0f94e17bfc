#include "causalmatch/csv.hpp"
#include "causalmatch/rng.hpp"
#include "causalmatch/simulate.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace causalmatch;

int cmd_simulate(const std::string& config_path, std::string out_dir, int workers, bool full) {
    if (out_dir.empty()) {
        const SimulationConfig config = load_config(config_path);
        out_dir = "runs/" + config.scenario.scenario_id;
    }
    const RunManifest manifest = run_scenario(config_path, out_dir, workers, full);
    std::printf("run %s: %d replications, %zu designs -> %s (%.1fs)\n",
                manifest.scenario_id.c_str(), manifest.replication_count,
                manifest.designs.size(), out_dir.c_str(), manifest.wall_seconds);
    return 0;
}

int cmd_figures(const std::string& run_root, const std::string& which,
                const std::string& out_dir) {
    const auto written = emit_figure_data(run_root, parse_figure(which), out_dir);
    for (const auto& path : written) std::printf("wrote %s\n", path.c_str());
    return 0;
}

int cmd_match(const std::string& csv_path, bool psm, const std::string& cem,
              const std::string& mode, double caliper, const std::string& models_arg,
              const std::string& out_dir) {
    UserMatchOptions options;
    options.caliper_multiplier = caliper;
    if (psm) options.designs.push_back(parse_design("psm"));
    if (!cem.empty()) {
        std::string token = "cem-" + cem;
        if (mode == "one_to_one") token += "-1to1";
        DesignSpec spec = parse_design(token);
        options.designs.push_back(spec);
    }
    if (options.designs.empty()) {
        throw ConfigInvalid("select at least one design (--psm and/or --cem)");
    }
    if (!models_arg.empty()) {
        std::string token;
        std::istringstream stream(models_arg);
        while (std::getline(stream, token, ',')) {
            if (!token.empty()) options.models.push_back(token);
        }
    }
    const auto written = match_user_data(csv_path, options, out_dir);
    for (const auto& path : written) std::printf("wrote %s\n", path.c_str());
    return 0;
}

int cmd_balance(const std::string& csv_path, const std::string& match_path) {
    const Dataset data = read_dataset_csv(csv_path);
    const MatchResult pre = unmatched_design(data);
    const MatchResult post = read_match_csv(match_path, data);

    const auto print_report = [&](const char* title, const MatchResult& match) {
        const BalanceReport report = balance_report(data, match);
        std::printf("%s (treated %d, control %d)\n", title, match.matched_treated,
                    match.matched_control);
        for (Eigen::Index j = 0; j < report.smd.size(); ++j) {
            std::printf("  smd x%-3d % .6f\n", static_cast<int>(j) + 1, report.smd[j]);
        }
        if (report.has_i1) std::printf("  i1      % .6f\n", report.i1);
        std::printf("  i2      % .6f\n  i3      % .6f\n  i4      % .6f\n", report.i2,
                    report.i3, report.i4);
    };
    print_report("before matching", pre);
    print_report("after matching", post);
    return 0;
}

int cmd_prop1(const std::string& config_path, int n, int reps, int subset_count,
              double caliper_multiplier, int workers, const std::string& out_path) {
    const SimulationConfig config = load_config(config_path);
    const ScenarioConfig& scenario = config.scenario;
    if (n <= 0) n = scenario.n;
    if (reps <= 0) reps = scenario.replications;

    // Empty set and full set first, then distinct random subsets.
    std::vector<std::vector<int>> subsets;
    subsets.push_back({});
    std::vector<int> full(static_cast<size_t>(scenario.p));
    for (int j = 0; j < scenario.p; ++j) full[static_cast<size_t>(j)] = j;
    if (subset_count > 1) subsets.push_back(full);
    std::set<std::vector<int>> seen(subsets.begin(), subsets.end());
    RngStream rng(scenario.seed, stream_tag::kModelSubsets);
    int guard = 0;
    while (static_cast<int>(subsets.size()) < subset_count && guard++ < 10000) {
        std::vector<int> subset;
        for (int j = 0; j < scenario.p; ++j) {
            if (rng.bernoulli(0.5)) subset.push_back(j);
        }
        if (seen.insert(subset).second) subsets.push_back(subset);
    }

    const auto results = verify_proposition1(scenario, subsets, n, reps, caliper_multiplier,
                                             config.run.oracle_draws, workers);

    std::printf("%-24s %12s %12s %12s %12s\n", "subset", "mean", "bias", "sd", "rmse");
    std::vector<std::vector<std::string>> rows;
    for (const auto& [subset, metrics] : results) {
        std::string name = "{";
        for (size_t i = 0; i < subset.size(); ++i) {
            if (i) name += " ";
            name += "x" + std::to_string(subset[i] + 1);
        }
        name += "}";
        std::printf("%-24s %12.5f %12.5f %12.5f %12.5f\n", name.c_str(),
                    metrics.mean_estimate, metrics.bias, metrics.sd, metrics.rmse);
        rows.push_back({name, format_double(metrics.mean_estimate), format_double(metrics.bias),
                        format_double(metrics.sd), format_double(metrics.rmse),
                        format_double(metrics.true_value),
                        std::to_string(metrics.replication_count),
                        std::to_string(metrics.failure_count)});
    }
    if (!out_path.empty()) {
        write_table(out_path,
                    {"subset", "mean_estimate", "bias", "sd", "rmse", "true_value",
                     "replications", "failures"},
                    rows);
        std::printf("wrote %s\n", out_path.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Matching designs and Monte-Carlo evaluation for treatment-effect estimation"};
    app.require_subcommand(1);

    auto* simulate = app.add_subcommand("simulate", "Run a simulation scenario from a config");
    std::string sim_config, sim_out;
    int sim_workers = 1;
    bool sim_full = false;
    simulate->add_option("config", sim_config, "config file")->required();
    simulate->add_option("--workers", sim_workers, "worker threads")->check(CLI::PositiveNumber);
    simulate->add_flag("--full", sim_full, "full-scale replication and oracle settings");
    simulate->add_option("--out", sim_out, "output directory (default runs/<scenario_id>)");

    auto* figures = app.add_subcommand("figures", "Emit plot-ready series from finished runs");
    std::string fig_root, fig_which, fig_out = "figures";
    figures->add_option("run-dir", fig_root, "directory containing run outputs")->required();
    figures->add_option("--which", fig_which, "fig1|fig2|fig3|imbalance_vs_n")->required();
    figures->add_option("--out", fig_out, "output directory");

    auto* match = app.add_subcommand("match", "Match a user dataset CSV");
    std::string match_csv, match_cem, match_mode = "weights", match_models, match_out = "match_out";
    bool match_psm = false;
    double match_caliper = 0.2;
    match->add_option("csv", match_csv, "dataset CSV with header y,w,x1..xp")->required();
    match->add_flag("--psm", match_psm, "propensity-score matching");
    match->add_option("--caliper", match_caliper, "caliper multiplier for --psm");
    match->add_option("--cem", match_cem, "coarsening: auto | g3 | k<K>");
    match->add_option("--mode", match_mode, "cem mode: weights | one_to_one")
        ->check(CLI::IsMember({"weights", "one_to_one"}));
    match->add_option("--models", match_models, "comma list of mw,mwx");
    match->add_option("--out", match_out, "output directory");

    auto* balance = app.add_subcommand("balance", "Audit balance for a stored match");
    std::string bal_csv, bal_match;
    balance->add_option("csv", bal_csv, "dataset CSV")->required();
    balance->add_option("match", bal_match, "match CSV produced by the match command")->required();

    auto* prop1 = app.add_subcommand("prop1", "Check misspecified-model consistency on PSM");
    std::string p1_config, p1_out;
    int p1_n = 0, p1_reps = 0, p1_subsets = 8, p1_workers = 1;
    double p1_caliper = 0.05;
    prop1->add_option("config", p1_config, "config file")->required();
    prop1->add_option("--n", p1_n, "sample size override");
    prop1->add_option("--reps", p1_reps, "replication override");
    prop1->add_option("--subsets", p1_subsets, "number of covariate subsets")
        ->check(CLI::PositiveNumber);
    prop1->add_option("--caliper", p1_caliper, "caliper multiplier");
    prop1->add_option("--workers", p1_workers, "worker threads")->check(CLI::PositiveNumber);
    prop1->add_option("--out", p1_out, "write per-subset CSV here");

    try {
        app.parse(argc, argv);
        if (simulate->parsed()) return cmd_simulate(sim_config, sim_out, sim_workers, sim_full);
        if (figures->parsed()) return cmd_figures(fig_root, fig_which, fig_out);
        if (match->parsed()) {
            return cmd_match(match_csv, match_psm, match_cem, match_mode, match_caliper,
                             match_models, match_out);
        }
        if (balance->parsed()) return cmd_balance(bal_csv, bal_match);
        if (prop1->parsed()) {
            return cmd_prop1(p1_config, p1_n, p1_reps, p1_subsets, p1_caliper, p1_workers, p1_out);
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
}
