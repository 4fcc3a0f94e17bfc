#pragma once

#include "causalmatch/datagen.hpp"
#include "causalmatch/numerics.hpp"
#include "causalmatch/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace causalmatch {

/// One covariate term of an outcome model. The intercept and the treatment
/// indicator are always included and are not listed as terms.
struct ModelTerm {
    enum class Kind { kLinear, kSquare, kCube, kInteraction, kTreatInteraction };
    Kind kind = Kind::kLinear;
    int i = 0;
    int j = 0;  // second column for pairwise interactions
};

struct ModelSpec {
    std::string label;
    std::vector<ModelTerm> terms;

    /// M(W): outcome on treatment alone.
    static ModelSpec unadjusted();
    /// M(W+X): linear terms for all p covariates.
    static ModelSpec linear_adjusted(int p);
    /// Linear terms for the listed covariates only.
    static ModelSpec linear_subset(const std::vector<int>& columns);
    /// Interaction model: W * x_i for each index in `interaction_columns`,
    /// plus linear terms for `linear_columns`.
    static ModelSpec interaction(const std::vector<int>& interaction_columns,
                                 const std::vector<int>& linear_columns);
};

struct EstimateRecord {
    std::string estimator_label;
    DesignLabel design_label = DesignLabel::kPsm;
    double point_estimate = 0.0;  // coefficient on W
    double beta1_hat = 0.0;
    Vector theta_hat;                // treatment-interaction coefficients
    std::vector<int> theta_columns;  // covariate index per theta component
    int replication_index = 0;
    bool ok = true;
    std::string failure;
};

/// Weighted least squares of Y on [1, W, model terms] over units with
/// positive match weight. Throws EmptyMatch when no unit is retained and
/// RankDeficient when the post-matching design is collinear.
EstimateRecord estimate(const MatchResult& match, const Dataset& data, const ModelSpec& model,
                        int replication_index = 0);

enum class TreatedMeanSource { kMatchedTreated, kUnmatchedTreated };

/// Treatment effect on the treated implied by an interaction-model fit:
/// beta1_hat + theta_hat . mean(x over treated units), where the mean is
/// taken over matched treated units or over all treated units in the source
/// data. Throws NoTreatedUnits when the requested group is empty.
double patt_from_interaction(const EstimateRecord& record, TreatedMeanSource source,
                             const Dataset& data, const MatchResult& match);

struct CherryPickDiagnostic {
    double variance = 0.0;  // sample variance across model estimates
    double max_estimate = 0.0;
};

/// Spread and maximum of one replication's estimates across a model space.
/// Throws TooFewModels below two estimates.
CherryPickDiagnostic cherry_pick_diagnostic(const std::vector<double>& estimates);

/// Every subset of the term pool {x_j, x_j^2, x_j^3 for each covariate}
/// + {adjacent pairwise products} + {W * x_j}, always keeping intercept and
/// W. Two covariates give 9 optional terms, hence 512 specifications.
/// Guarded to p <= 3 (the space doubles with every added term).
std::vector<ModelSpec> enumerate_model_space(int p);

struct EfficiencyInputs {
    double sigma_eps2 = 1.0;
    Vector beta2;
    Vector alpha1;
    Matrix covariance_matched;  // covariate covariance in the matched sample
    long n_psm_pairs = 0;
    long m_cov_pairs = 0;
};

/// Predicted sampling-variance ratio Var(covariate-matched M(W)) over
/// Var(score-matched M(W)):
///   sigma_eps^2 / (sigma_nu^2 + sigma_eps^2) * n / m,
/// where sigma_nu^2 = sin^2(angle(alpha1, beta2)) * beta2' Cov beta2,
/// n is the score-design pair count and m the covariate-design pair count.
double relative_efficiency(const EfficiencyInputs& inputs);

struct AggregateMetrics {
    double mean_estimate = 0.0;
    double bias = 0.0;
    double sd = 0.0;    // sample SD (K-1) over successful replications
    double mse = 0.0;   // bias^2 + sd^2
    double rmse = 0.0;  // sqrt(mse)
    double true_value = 0.0;
    int replication_count = 0;  // successful replications
    int failure_count = 0;
};

/// Monte-Carlo summary of point estimates against a known truth. Failed
/// records are counted, not imputed. Throws TooFewRecords below two
/// successes.
AggregateMetrics aggregate(const std::vector<EstimateRecord>& records, double true_value);

/// Consistency check for misspecified linear models on tightly matched
/// score data: for each covariate subset (empty set meaning M(W)), fits
/// Y ~ [1, X_subset, W] on pairs matched with the given caliper multiplier
/// and aggregates the W coefficient against the scenario's true effect on
/// the treated.
std::vector<std::pair<std::vector<int>, AggregateMetrics>> verify_proposition1(
    const ScenarioConfig& config, const std::vector<std::vector<int>>& subsets, int n,
    int replications, double caliper_multiplier = 0.05, long oracle_draws = 1000000,
    int workers = 1);

}  // namespace causalmatch
