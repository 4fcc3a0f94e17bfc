#pragma once

#include "causalmatch/balance.hpp"
#include "causalmatch/config.hpp"
#include "causalmatch/estimators.hpp"
#include "causalmatch/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace causalmatch {

/// Everything measured for one design in one replication.
struct DesignOutcome {
    bool ok = false;
    std::string failure;
    int matched_treated = 0;
    int matched_control = 0;
    Vector smd;  // per covariate, on the matched sample
    double i1 = 0.0;
    bool has_i1 = false;
    double i2 = 0.0;
    double i3 = 0.0;
    double i4 = 0.0;
    std::vector<EstimateRecord> estimates;  // one per output estimator row
};

/// In-memory results of a replication sweep for one coefficient setting.
struct ScenarioRunResult {
    std::vector<std::string> design_names;
    std::vector<std::string> estimator_labels;  // e.g. M(W), M(W,X), Formula(5)
    // outcomes[d][r]: design d, replication r
    std::vector<std::vector<DesignOutcome>> outcomes;
    std::vector<double> treated_fraction;  // per replication, source data
    double true_value = 0.0;
    double oracle_se = 0.0;

    /// Sign-preserving per-covariate SMD means and their absolute sum over
    /// successful replications of one design.
    CrossReplicationBalance cross_replication(int design) const;

    /// Estimates of one (design, estimator) cell across replications;
    /// failures carry ok = false.
    std::vector<EstimateRecord> records(int design, int estimator) const;
};

/// Expands model tokens to output estimator labels: interaction models
/// contribute the two analytic-formula rows instead of a raw-coefficient row.
std::vector<std::string> estimator_labels_for(const RunSettings& run);

/// Runs the replication loop for one fixed coefficient setting.
/// Deterministic in (scenario.seed, replication index): worker count only
/// changes the schedule. `index_offset` shifts the replication RNG index so
/// coefficient-pair sweeps draw disjoint streams per pair.
ScenarioRunResult run_replications(const ScenarioConfig& scenario, const RunSettings& run,
                                   int workers, long index_offset = 0, long oracle_draws = 0);

struct RunManifest {
    std::string scenario_id;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    int replication_count = 0;
    std::vector<std::string> designs;
    std::vector<std::string> estimators;
    std::vector<std::string> output_files;
    double wall_seconds = 0.0;
    std::string version;
    // Scenario echoes used by the figure emitter.
    int n = 0;
    int p = 0;
    int coefficient_pairs = 0;
    bool nonlinear = false;
    double true_value = 0.0;
};

void write_manifest(const std::string& path, const RunManifest& manifest);
RunManifest read_manifest(const std::string& path);

/// Executes a config end to end and writes manifest.txt, aggregate.csv,
/// balance.csv, replications.csv, balance_replications.csv, and (for
/// coefficient-pair sweeps) pairs.csv into output_dir.
RunManifest run_scenario(const std::string& config_path, const std::string& output_dir,
                         int workers, bool full_scale = false);

enum class Figure { kFig1, kFig2, kFig3, kImbalanceVsN };

Figure parse_figure(const std::string& name);

/// Scans run_root for completed runs (directories holding manifest.txt) and
/// writes plot-ready long-format CSVs for the requested figure into out_dir.
/// Throws MissingRun when the needed runs are not present.
std::vector<std::string> emit_figure_data(const std::string& run_root, Figure figure,
                                          const std::string& out_dir);

struct UserMatchOptions {
    std::vector<DesignSpec> designs;
    double caliper_multiplier = 0.2;
    std::vector<std::string> models;  // subset of {mw, mwx}
};

/// Matches a user-supplied dataset CSV with each requested design; writes
/// match_<design>.csv, balance_<design>.csv, estimates.csv, and
/// balance_pre.csv into output_dir. Returns the written paths.
std::vector<std::string> match_user_data(const std::string& csv_path,
                                         const UserMatchOptions& options,
                                         const std::string& output_dir);

extern const char* const kVersion;

}  // namespace causalmatch
