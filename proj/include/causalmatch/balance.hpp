#pragma once

#include "causalmatch/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace causalmatch {

/// Signed standardized mean difference with the pooled-variance denominator
/// sqrt((S1^2 + S0^2) / 2). Throws ZeroVariance when both group variances
/// vanish and the means differ (identical constant groups return 0).
double smd(const Vector& treated_values, const Vector& control_values);

/// Weighted variant; reliability-weights convention for the variances.
double smd_weighted(const Vector& treated_values, const Vector& treated_weights,
                    const Vector& control_values, const Vector& control_weights);

/// Mean Mahalanobis distance between matched units, under the supplied
/// covariance. Throws SingularCovariance when the covariance cannot be
/// inverted and EmptyMatch when there are no pairs.
double i1_average_pairwise_mahalanobis(const Dataset& data,
                                       const std::vector<std::pair<int, int>>& pairs,
                                       const Matrix& covariance);

/// Mahalanobis distance between the (weighted) group mean vectors.
double i2_between_group_mahalanobis(const Dataset& data, const std::vector<double>& weights,
                                    const Matrix& covariance);

/// Sum over covariates of the absolute (weighted) group mean difference.
double i3_absolute_mean_difference(const Dataset& data, const std::vector<double>& weights);

/// L1 distance between the groups' weighted relative frequencies over the
/// multivariate cells induced by `bins`; ranges over [0, 2].
double i4_l1_histogram(const Dataset& data, const std::vector<double>& weights,
                       const CoarseningSpec& bins);

struct BalanceReport {
    Vector smd;  // per covariate, weighted by match weights
    double i1 = 0.0;
    bool has_i1 = false;  // needs 1:1 pairs
    double i2 = 0.0;
    double i3 = 0.0;
    double i4 = 0.0;
    std::string i4_bins;
    Matrix covariance_used;
};

enum class CovarianceSource { kFullSample, kMatchedSample };

/// Balance diagnostics for one matched (or unmatched) design on one dataset.
BalanceReport balance_report(const Dataset& data, const MatchResult& match,
                             CovarianceSource source = CovarianceSource::kFullSample,
                             const CoarseningSpec& i4_bins = CoarseningSpec::auto_sturges());

struct CrossReplicationBalance {
    Vector mean_smd_per_covariate;  // sign-preserving average over replications
    double i5 = 0.0;
    int replication_count = 0;
};

/// Cross-replication imbalance: per-covariate SMDs averaged with sign over
/// the K replications (rows), then summed in absolute value. Systematic
/// imbalance survives this; chance imbalance cancels.
CrossReplicationBalance i5_cross_replication(const Matrix& per_replication_smds);

}  // namespace causalmatch
