#include "causalmatch/simulate.hpp"

#include "causalmatch/cem.hpp"
#include "causalmatch/csv.hpp"
#include "causalmatch/parallel.hpp"
#include "causalmatch/psm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace causalmatch {

const char* const kVersion = "0.1.0";

namespace {

ModelSpec model_for_token(const std::string& token, const ScenarioConfig& scenario) {
    if (token == "mw") return ModelSpec::unadjusted();
    if (token == "mwx") return ModelSpec::linear_adjusted(scenario.p);
    if (token == "interaction") {
        std::vector<int> all(static_cast<size_t>(scenario.p));
        for (int j = 0; j < scenario.p; ++j) all[static_cast<size_t>(j)] = j;
        return ModelSpec::interaction(scenario.interaction_subset, all);
    }
    if (token == "interaction-omit") {
        return ModelSpec::interaction(scenario.interaction_subset, scenario.interaction_subset);
    }
    throw ConfigInvalid("unknown model '" + token + "'");
}

bool is_interaction_token(const std::string& token) {
    return token == "interaction" || token == "interaction-omit";
}

MatchResult run_design(const DesignSpec& design, const Dataset& data,
                       const ScenarioConfig& scenario, double caliper_multiplier) {
    switch (design.kind) {
        case DesignSpec::Kind::kUnmatched:
            return unmatched_design(data);
        case DesignSpec::Kind::kPsm: {
            const PropensityResult propensity =
                estimate_propensity(data, FormulaSpec::for_scenario(scenario));
            const double caliper = caliper_width(propensity.logits, caliper_multiplier);
            return psm_match(propensity.logits, data.W, caliper);
        }
        case DesignSpec::Kind::kCem: {
            const CoarsenedData coarse = coarsen(data, design.coarsening);
            return cem_match(data, coarse, design.mode);
        }
    }
    throw ConfigInvalid("unknown design kind");
}

}  // namespace

std::vector<std::string> estimator_labels_for(const RunSettings& run) {
    std::vector<std::string> labels;
    for (const auto& token : run.models) {
        if (token == "mw") {
            labels.push_back("M(W)");
        } else if (token == "mwx") {
            labels.push_back("M(W+X)");
        } else if (is_interaction_token(token)) {
            labels.push_back("Formula(5)");
            labels.push_back("Formula(6)");
        } else {
            throw ConfigInvalid("unknown model '" + token + "'");
        }
    }
    return labels;
}

CrossReplicationBalance ScenarioRunResult::cross_replication(int design) const {
    const auto& rows = outcomes[static_cast<size_t>(design)];
    Eigen::Index width = 0;
    int ok_count = 0;
    for (const auto& outcome : rows) {
        if (!outcome.ok) continue;
        ++ok_count;
        width = outcome.smd.size();
    }
    if (ok_count == 0) throw TooFewRecords("every replication of this design failed");

    Matrix smds(ok_count, width);
    int r = 0;
    for (const auto& outcome : rows) {
        if (!outcome.ok) continue;
        smds.row(r++) = outcome.smd.transpose();
    }
    return i5_cross_replication(smds);
}

std::vector<EstimateRecord> ScenarioRunResult::records(int design, int estimator) const {
    const auto& rows = outcomes[static_cast<size_t>(design)];
    std::vector<EstimateRecord> out;
    out.reserve(rows.size());
    for (const auto& outcome : rows) {
        out.push_back(outcome.estimates[static_cast<size_t>(estimator)]);
    }
    return out;
}

ScenarioRunResult run_replications(const ScenarioConfig& scenario, const RunSettings& run,
                                   int workers, long index_offset, long oracle_draws) {
    validate_config(scenario);
    if (run.designs.empty()) throw ConfigInvalid("no designs requested");

    ScenarioRunResult result;
    for (const auto& design : run.designs) result.design_names.push_back(design.name);
    result.estimator_labels = estimator_labels_for(run);

    const OracleResult oracle =
        true_patt_oracle(scenario, oracle_draws > 0 ? oracle_draws : run.oracle_draws);
    result.true_value = oracle.value;
    result.oracle_se = oracle.std_error;

    std::vector<ModelSpec> models;
    std::vector<std::string> tokens;
    for (const auto& token : run.models) {
        models.push_back(model_for_token(token, scenario));
        tokens.push_back(token);
    }

    const int reps = scenario.replications;
    result.outcomes.assign(run.designs.size(),
                           std::vector<DesignOutcome>(static_cast<size_t>(reps)));
    result.treated_fraction.assign(static_cast<size_t>(reps), 0.0);

    const size_t label_count = result.estimator_labels.size();

    parallel_for(reps, workers, [&](int r) {
        const int index = static_cast<int>(index_offset + r);

        Dataset data;
        std::string generation_failure;
        try {
            data = generate_dataset(scenario, index);
        } catch (const Error& e) {
            generation_failure = e.what();
        }
        if (generation_failure.empty()) {
            result.treated_fraction[static_cast<size_t>(r)] =
                static_cast<double>(data.treated_count()) / static_cast<double>(data.n());
        }

        for (size_t d = 0; d < run.designs.size(); ++d) {
            DesignOutcome& outcome = result.outcomes[d][static_cast<size_t>(r)];
            outcome.estimates.assign(label_count, EstimateRecord{});
            for (auto& record : outcome.estimates) {
                record.ok = false;
                record.replication_index = index;
            }

            if (!generation_failure.empty()) {
                outcome.failure = generation_failure;
                for (auto& record : outcome.estimates) record.failure = generation_failure;
                continue;
            }

            try {
                const MatchResult match =
                    run_design(run.designs[d], data, scenario, run.caliper_multiplier);
                const BalanceReport report = balance_report(data, match);
                outcome.matched_treated = match.matched_treated;
                outcome.matched_control = match.matched_control;
                outcome.smd = report.smd;
                outcome.i1 = report.i1;
                outcome.has_i1 = report.has_i1;
                outcome.i2 = report.i2;
                outcome.i3 = report.i3;
                outcome.i4 = report.i4;
                outcome.ok = true;

                size_t slot = 0;
                for (size_t m = 0; m < models.size(); ++m) {
                    if (is_interaction_token(tokens[m])) {
                        try {
                            EstimateRecord fit = estimate(match, data, models[m], index);
                            EstimateRecord f5 = fit;
                            f5.estimator_label = "Formula(5)";
                            f5.point_estimate = patt_from_interaction(
                                fit, TreatedMeanSource::kMatchedTreated, data, match);
                            EstimateRecord f6 = fit;
                            f6.estimator_label = "Formula(6)";
                            f6.point_estimate = patt_from_interaction(
                                fit, TreatedMeanSource::kUnmatchedTreated, data, match);
                            outcome.estimates[slot] = f5;
                            outcome.estimates[slot + 1] = f6;
                        } catch (const Error& e) {
                            outcome.estimates[slot].failure = e.what();
                            outcome.estimates[slot + 1].failure = e.what();
                        }
                        slot += 2;
                    } else {
                        try {
                            outcome.estimates[slot] = estimate(match, data, models[m], index);
                        } catch (const Error& e) {
                            outcome.estimates[slot].failure = e.what();
                        }
                        ++slot;
                    }
                }
            } catch (const Error& e) {
                outcome.ok = false;
                outcome.failure = e.what();
                for (auto& record : outcome.estimates) {
                    if (record.failure.empty()) record.failure = e.what();
                }
            }
        }
    });

    return result;
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");

    const auto join = [](const std::vector<std::string>& items, char sep) {
        std::string text;
        for (size_t i = 0; i < items.size(); ++i) {
            if (i) text += sep;
            text += items[i];
        }
        return text;
    };

    out << "scenario_id = " << manifest.scenario_id << "\n";
    out << "config_hash = " << manifest.config_hash << "\n";
    out << "seed = " << manifest.seed << "\n";
    out << "replications = " << manifest.replication_count << "\n";
    out << "designs = " << join(manifest.designs, ',') << "\n";
    out << "estimators = " << join(manifest.estimators, ';') << "\n";
    out << "outputs = " << join(manifest.output_files, ';') << "\n";
    out << "wall_seconds = " << format_double(manifest.wall_seconds) << "\n";
    out << "version = " << manifest.version << "\n";
    out << "n = " << manifest.n << "\n";
    out << "p = " << manifest.p << "\n";
    out << "coefficient_pairs = " << manifest.coefficient_pairs << "\n";
    out << "nonlinear = " << (manifest.nonlinear ? "true" : "false") << "\n";
    out << "true_value = " << format_double(manifest.true_value) << "\n";
    if (!out.flush()) throw IoError("failed writing '" + path + "'");
}

RunManifest read_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");

    std::map<std::string, std::string> entries;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw SchemaError("manifest line is not key = value");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        while (!key.empty() && key.back() == ' ') key.pop_back();
        while (!value.empty() && value.front() == ' ') value.erase(value.begin());
        entries[key] = value;
    }

    const auto split_on = [](const std::string& text, char sep) {
        std::vector<std::string> items;
        std::string item;
        std::istringstream stream(text);
        while (std::getline(stream, item, sep)) items.push_back(item);
        return items;
    };

    RunManifest manifest;
    try {
        manifest.scenario_id = entries.at("scenario_id");
        manifest.config_hash = static_cast<std::uint64_t>(
            std::stoull(entries.at("config_hash")));
        manifest.seed = static_cast<std::uint64_t>(std::stoull(entries.at("seed")));
        manifest.replication_count = static_cast<int>(parse_long(entries.at("replications")));
        manifest.designs = split_on(entries.at("designs"), ',');
        manifest.estimators = split_on(entries.at("estimators"), ';');
        manifest.output_files = split_on(entries.at("outputs"), ';');
        manifest.wall_seconds = parse_double(entries.at("wall_seconds"));
        manifest.version = entries.at("version");
        manifest.n = static_cast<int>(parse_long(entries.at("n")));
        manifest.p = static_cast<int>(parse_long(entries.at("p")));
        manifest.coefficient_pairs = static_cast<int>(parse_long(entries.at("coefficient_pairs")));
        manifest.nonlinear = entries.at("nonlinear") == "true";
        manifest.true_value = parse_double(entries.at("true_value"));
    } catch (const std::out_of_range&) {
        throw SchemaError("manifest '" + path + "' is missing required keys");
    } catch (const std::invalid_argument&) {
        throw SchemaError("manifest '" + path + "' has malformed values");
    }
    return manifest;
}

namespace {

struct CellStats {
    AggregateMetrics metrics;
    bool ok = false;
};

CellStats cell_aggregate(const std::vector<EstimateRecord>& records, double truth) {
    CellStats stats;
    try {
        stats.metrics = aggregate(records, truth);
        stats.ok = true;
    } catch (const TooFewRecords&) {
        stats.metrics.true_value = truth;
        stats.metrics.failure_count = static_cast<int>(records.size());
    }
    return stats;
}

std::string num(double v) { return format_double(v); }

double mean_over(const std::vector<double>& values) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

// Pulls one named per-design summary out of a finished replication sweep.
struct DesignSummary {
    double i1_mean = std::numeric_limits<double>::quiet_NaN();
    double i2_mean = std::numeric_limits<double>::quiet_NaN();
    double i3_mean = std::numeric_limits<double>::quiet_NaN();
    double i4_mean = std::numeric_limits<double>::quiet_NaN();
    double matched_treated_mean = std::numeric_limits<double>::quiet_NaN();
    double matched_control_mean = std::numeric_limits<double>::quiet_NaN();
    int failures = 0;
};

DesignSummary summarize_design(const std::vector<DesignOutcome>& rows) {
    DesignSummary s;
    std::vector<double> i1, i2, i3, i4, mt, mc;
    for (const auto& outcome : rows) {
        if (!outcome.ok) {
            ++s.failures;
            continue;
        }
        if (outcome.has_i1) i1.push_back(outcome.i1);
        i2.push_back(outcome.i2);
        i3.push_back(outcome.i3);
        i4.push_back(outcome.i4);
        mt.push_back(outcome.matched_treated);
        mc.push_back(outcome.matched_control);
    }
    s.i1_mean = mean_over(i1);
    s.i2_mean = mean_over(i2);
    s.i3_mean = mean_over(i3);
    s.i4_mean = mean_over(i4);
    s.matched_treated_mean = mean_over(mt);
    s.matched_control_mean = mean_over(mc);
    return s;
}

}  // namespace

RunManifest run_scenario(const std::string& config_path, const std::string& output_dir,
                         int workers, bool full_scale) {
    const auto start = std::chrono::steady_clock::now();

    SimulationConfig config = load_config(config_path);
    ScenarioConfig& scenario = config.scenario;
    const RunSettings& run = config.run;
    if (full_scale) scenario.replications = run.replications_full;
    const long oracle_draws = full_scale ? run.oracle_draws_full : run.oracle_draws;

    std::error_code ec;
    std::filesystem::create_directories(output_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + output_dir + "'");
    const auto out_path = [&](const char* name) {
        return (std::filesystem::path(output_dir) / name).string();
    };

    // One sweep per coefficient setting; a single setting is a 1-pair sweep.
    std::vector<CoefficientPair> pairs;
    if (run.coefficient_pairs > 0) {
        pairs = generate_coefficient_pairs(scenario.p, run.coefficient_pairs, run.pair_k,
                                           scenario.seed);
    } else {
        CoefficientPair single;
        single.alpha1 = scenario.alpha1;
        single.beta2 = scenario.beta2;
        // An all-zero coefficient vector has no direction; report zero angle.
        single.sine_distance =
            scenario.alpha1.norm() > 0.0 && scenario.beta2.norm() > 0.0
                ? sine_distance(scenario.alpha1, scenario.beta2)
                : 0.0;
        pairs.push_back(std::move(single));
    }

    const int reps = scenario.replications;
    std::vector<ScenarioRunResult> per_pair;
    per_pair.reserve(pairs.size());
    for (size_t q = 0; q < pairs.size(); ++q) {
        ScenarioConfig setting = scenario;
        setting.alpha1 = pairs[q].alpha1;
        setting.beta2 = pairs[q].beta2;
        per_pair.push_back(run_replications(setting, run, workers,
                                            static_cast<long>(q) * reps, oracle_draws));
    }

    const auto& labels = per_pair.front().estimator_labels;
    const auto& design_names = per_pair.front().design_names;
    const double truth = per_pair.front().true_value;

    std::vector<std::string> outputs;

    // aggregate.csv: one row per (design, estimator), pooled over pairs.
    {
        std::vector<std::vector<std::string>> rows;
        std::vector<double> shares;
        for (const auto& result : per_pair) {
            for (double fraction : result.treated_fraction) {
                if (fraction > 0.0) shares.push_back(fraction);
            }
        }
        const double share = mean_over(shares);
        for (size_t d = 0; d < design_names.size(); ++d) {
            for (size_t e = 0; e < labels.size(); ++e) {
                std::vector<EstimateRecord> pooled;
                pooled.reserve(pairs.size() * static_cast<size_t>(reps));
                for (const auto& result : per_pair) {
                    const auto cell = result.records(static_cast<int>(d), static_cast<int>(e));
                    pooled.insert(pooled.end(), cell.begin(), cell.end());
                }
                const CellStats stats = cell_aggregate(pooled, truth);
                const auto& m = stats.metrics;
                rows.push_back({scenario.scenario_id, design_names[d], labels[e], num(share),
                                num(m.mean_estimate), num(m.bias), num(m.sd), num(m.rmse),
                                num(m.mse), num(m.true_value),
                                std::to_string(m.replication_count),
                                std::to_string(m.failure_count)});
            }
        }
        write_table(out_path("aggregate.csv"),
                    {"scenario", "design", "model", "treated_share", "mean_estimate", "bias",
                     "sd", "rmse", "mse", "true_value", "replications", "failures"},
                    rows);
        outputs.push_back("aggregate.csv");
    }

    // balance.csv: per-design summary metrics, pooled over pairs.
    {
        std::vector<std::vector<std::string>> rows;
        for (size_t d = 0; d < design_names.size(); ++d) {
            std::vector<double> i5s;
            Vector smd_mean;
            DesignSummary total;
            std::vector<double> i1s, i2s, i3s, i4s, mts, mcs;
            for (const auto& result : per_pair) {
                const DesignSummary s =
                    summarize_design(result.outcomes[static_cast<size_t>(d)]);
                total.failures += s.failures;
                if (!std::isnan(s.i1_mean)) i1s.push_back(s.i1_mean);
                i2s.push_back(s.i2_mean);
                i3s.push_back(s.i3_mean);
                i4s.push_back(s.i4_mean);
                mts.push_back(s.matched_treated_mean);
                mcs.push_back(s.matched_control_mean);
                try {
                    const CrossReplicationBalance cross =
                        result.cross_replication(static_cast<int>(d));
                    i5s.push_back(cross.i5);
                    if (smd_mean.size() == 0) {
                        smd_mean = cross.mean_smd_per_covariate;
                    } else {
                        smd_mean += cross.mean_smd_per_covariate;
                    }
                } catch (const TooFewRecords&) {
                }
            }
            const auto scalar = [&](const char* metric, double value) {
                rows.push_back({design_names[d], metric, "", num(value)});
            };
            scalar("i5", mean_over(i5s));
            if (smd_mean.size() > 0) {
                smd_mean /= static_cast<double>(i5s.size());
                for (Eigen::Index j = 0; j < smd_mean.size(); ++j) {
                    rows.push_back({design_names[d], "smd_mean",
                                    "x" + std::to_string(j + 1), num(smd_mean[j])});
                }
            }
            scalar("i1_mean", mean_over(i1s));
            scalar("i2_mean", mean_over(i2s));
            scalar("i3_mean", mean_over(i3s));
            scalar("i4_mean", mean_over(i4s));
            scalar("matched_treated_mean", mean_over(mts));
            scalar("matched_control_mean", mean_over(mcs));
            scalar("failures", total.failures);
        }
        write_table(out_path("balance.csv"), {"design", "metric", "covariate", "value"}, rows);
        outputs.push_back("balance.csv");
    }

    // replications.csv: every point estimate.
    {
        std::vector<std::vector<std::string>> rows;
        for (size_t q = 0; q < per_pair.size(); ++q) {
            const auto& result = per_pair[q];
            for (size_t d = 0; d < design_names.size(); ++d) {
                for (size_t e = 0; e < labels.size(); ++e) {
                    const auto& outcomes = result.outcomes[d];
                    for (size_t r = 0; r < outcomes.size(); ++r) {
                        const auto& record = outcomes[r].estimates[e];
                        rows.push_back({std::to_string(q), std::to_string(r), design_names[d],
                                        labels[e],
                                        record.ok ? num(record.point_estimate) : "nan",
                                        record.ok ? "1" : "0"});
                    }
                }
            }
        }
        write_table(out_path("replications.csv"),
                    {"pair", "replication", "design", "model", "estimate", "ok"}, rows);
        outputs.push_back("replications.csv");
    }

    // balance_replications.csv: per-replication scalar imbalance metrics.
    {
        std::vector<std::vector<std::string>> rows;
        for (size_t q = 0; q < per_pair.size(); ++q) {
            const auto& result = per_pair[q];
            for (size_t d = 0; d < design_names.size(); ++d) {
                const auto& outcomes = result.outcomes[d];
                for (size_t r = 0; r < outcomes.size(); ++r) {
                    const auto& outcome = outcomes[r];
                    if (!outcome.ok) continue;
                    const auto emit = [&](const char* metric, double value) {
                        rows.push_back({std::to_string(q), std::to_string(r), design_names[d],
                                        metric, num(value)});
                    };
                    if (outcome.has_i1) emit("i1", outcome.i1);
                    emit("i2", outcome.i2);
                    emit("i3", outcome.i3);
                    emit("i4", outcome.i4);
                }
            }
        }
        write_table(out_path("balance_replications.csv"),
                    {"pair", "replication", "design", "metric", "value"}, rows);
        outputs.push_back("balance_replications.csv");
    }

    // pairs.csv: per-(pair, design, model) summaries for the figure emitter.
    if (run.coefficient_pairs > 0) {
        std::vector<std::vector<std::string>> rows;
        for (size_t q = 0; q < per_pair.size(); ++q) {
            const auto& result = per_pair[q];
            for (size_t d = 0; d < design_names.size(); ++d) {
                double i5 = std::numeric_limits<double>::quiet_NaN();
                try {
                    i5 = result.cross_replication(static_cast<int>(d)).i5;
                } catch (const TooFewRecords&) {
                }
                const DesignSummary s = summarize_design(result.outcomes[d]);
                for (size_t e = 0; e < labels.size(); ++e) {
                    const CellStats stats = cell_aggregate(
                        result.records(static_cast<int>(d), static_cast<int>(e)), truth);
                    rows.push_back({std::to_string(q), num(pairs[q].sine_distance),
                                    design_names[d], labels[e], num(stats.metrics.bias),
                                    num(std::abs(stats.metrics.bias)), num(i5),
                                    num(s.matched_treated_mean), num(s.matched_control_mean),
                                    std::to_string(stats.metrics.failure_count)});
                }
            }
        }
        write_table(out_path("pairs.csv"),
                    {"pair", "sine_distance", "design", "model", "bias", "abs_bias", "i5",
                     "matched_treated_mean", "matched_control_mean", "failures"},
                    rows);
        outputs.push_back("pairs.csv");
    }

    RunManifest manifest;
    manifest.scenario_id = scenario.scenario_id;
    manifest.config_hash = config_hash(config);
    manifest.seed = scenario.seed;
    manifest.replication_count = reps;
    manifest.designs = design_names;
    manifest.estimators = labels;
    manifest.output_files = outputs;
    manifest.version = kVersion;
    manifest.n = scenario.n;
    manifest.p = scenario.p;
    manifest.coefficient_pairs = run.coefficient_pairs;
    manifest.nonlinear = scenario.nonlinear_treatment || scenario.nonlinear_outcome;
    manifest.true_value = truth;
    manifest.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(out_path("manifest.txt"), manifest);
    return manifest;
}

}  // namespace causalmatch
