#pragma once

#include "causalmatch/cem.hpp"
#include "causalmatch/datagen.hpp"
#include "causalmatch/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace causalmatch {

/// One matching design requested by a run.
struct DesignSpec {
    enum class Kind { kUnmatched, kPsm, kCem };

    std::string name;  // config token, also the CSV design label
    Kind kind = Kind::kPsm;
    CoarseningSpec coarsening = CoarseningSpec::auto_sturges();
    CemMode mode = CemMode::kWeights;
};

/// Tokens: unmatched | psm | cem-auto | cem-g3 | cem-k<K>, with an optional
/// -1to1 suffix on the cem forms (default is the weighting scheme).
DesignSpec parse_design(const std::string& token);

/// Run-level options that sit outside the data-generating process.
struct RunSettings {
    std::vector<DesignSpec> designs;
    std::vector<std::string> models;  // mw | mwx | interaction | interaction-omit
    double caliper_multiplier = 0.2;
    int coefficient_pairs = 0;  // > 0 sweeps generated pairs instead of alpha1/beta2
    double pair_k = 1.2;
    long oracle_draws = 1000000;
    long oracle_draws_full = 100000000;
    int replications_full = 2000;
};

struct SimulationConfig {
    ScenarioConfig scenario;
    RunSettings run;
};

/// Flat key=value text, '#' comments, whitespace-insensitive. Unknown keys
/// are rejected. Vector values are comma-separated; interaction_subset is
/// 1-based in the file.
SimulationConfig parse_config(const std::string& text);
SimulationConfig load_config(const std::string& path);

/// Canonical serialization (fixed key order, round-trip number formatting).
std::string serialize_config(const SimulationConfig& config);

/// FNV-1a over the canonical serialization.
std::uint64_t config_hash(const SimulationConfig& config);

}  // namespace causalmatch
