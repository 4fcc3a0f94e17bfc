#pragma once

#include "causalmatch/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace causalmatch {

/// Full description of one simulated scenario.
///
/// Treatment assignment: W ~ Bernoulli(expit(alpha0 + phi(X))) where phi is
/// linear in X or, when nonlinear_treatment is set, adds curvature and
/// adjacent-pair interaction terms on top of the same coefficients.
/// Outcome: Y = beta0 + beta1*W + W*(X_subset . theta) + g(X) + eps,
/// with g linear (or nonlinear, mirroring phi) in beta2.
struct ScenarioConfig {
    std::string scenario_id = "scenario";
    int p = 5;
    int n = 5000;
    double alpha0 = -0.9;
    Vector alpha1;
    double beta0 = 0.0;
    double beta1 = 6.0;
    Vector beta2;
    Vector theta;                         // empty: homogeneous effect
    std::vector<int> interaction_subset;  // 0-based columns, same length as theta
    double covariate_scale = 1.0;
    bool nonlinear_treatment = false;
    bool nonlinear_outcome = false;
    double error_sd = 1.0;
    int replications = 500;
    std::uint64_t seed = 0;
};

/// Throws ConfigInvalid on contradictory or out-of-range settings.
void validate_config(const ScenarioConfig& config);

/// One (treatment-coefficient, outcome-coefficient) direction pair with its
/// angular separation.
struct CoefficientPair {
    Vector alpha1;
    Vector beta2;
    double sine_distance = 0.0;
};

/// sin of the angle between u and v: sqrt(1 - cos^2), in [0, 1].
/// Throws ZeroVector when either input has zero norm.
double sine_distance(const Vector& u, const Vector& v);

/// Builds a pair from raw directions: both are normalized to unit length and
/// the outcome side is rescaled to norm k.
CoefficientPair make_coefficient_pair(const Vector& alpha_direction,
                                      const Vector& beta_direction, double k);

/// Draws `count` coefficient pairs whose sine distances are stratified across
/// ten equal-width bins of [0, 1] (quotas differing by at most one). Entries
/// of each raw direction are uniform integers 1..9 with random signs, then
/// normalized. Throws Unsatisfiable if the quotas cannot be filled within the
/// draw budget; the message reports the achieved histogram.
std::vector<CoefficientPair> generate_coefficient_pairs(int p, int count, double k,
                                                        std::uint64_t seed);

/// Treatment-model index alpha0 + phi(x) for one unit.
double treatment_index(const ScenarioConfig& config, const Eigen::Ref<const Vector>& x);

/// Outcome mean beta0 + beta1*w + w*(x_subset . theta) + g(x) for one unit.
double outcome_mean(const ScenarioConfig& config, const Eigen::Ref<const Vector>& x, int w);

/// Simulates one dataset for the given replication index. Samples with an
/// all-treated or all-control draw are rejected and redrawn (fresh stream, up
/// to 100 attempts) before DegenerateSample is thrown. Deterministic in
/// (config.seed, replication_index) regardless of caller threading.
Dataset generate_dataset(const ScenarioConfig& config, int replication_index);

struct OracleResult {
    double value = 0.0;
    double std_error = 0.0;
    long draws = 0;  // simulated observations (treated and control)
};

/// Population average treatment effect on the treated, by Monte Carlo over
/// fresh draws of (X, W). Homogeneous scenarios (empty theta) return beta1
/// exactly with zero standard error.
OracleResult true_patt_oracle(const ScenarioConfig& config, long draws);

}  // namespace causalmatch
