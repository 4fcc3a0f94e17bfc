#include "causalmatch/balance.hpp"

#include "causalmatch/cem.hpp"
#include "causalmatch/numerics.hpp"

#include <cmath>
#include <map>

namespace causalmatch {

namespace {

// Reliability-weights variance: unbiased under weights that encode
// precision rather than multiplicity.
double reliability_variance(const Vector& values, const Vector& weights) {
    const double sw = weights.sum();
    const double sw2 = weights.cwiseProduct(weights).sum();
    const double denom = sw - sw2 / sw;
    if (!(denom > 0.0)) {
        throw DataError("weighted variance needs more than one effective unit");
    }
    const double mean = weighted_mean(values, weights);
    const Vector centered = values.array() - mean;
    return centered.cwiseProduct(centered).dot(weights) / denom;
}

double smd_from_moments(double mean_t, double var_t, double mean_c, double var_c) {
    const double pooled = 0.5 * (var_t + var_c);
    if (pooled <= 0.0) {
        if (mean_t == mean_c) return 0.0;
        throw ZeroVariance("group variances are zero but the means differ");
    }
    return (mean_t - mean_c) / std::sqrt(pooled);
}

Eigen::LDLT<Matrix> invertible_ldlt(const Matrix& covariance) {
    if (covariance.rows() != covariance.cols()) {
        throw DimensionMismatch("covariance matrix is not square");
    }
    Eigen::LDLT<Matrix> ldlt(covariance);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() < 1e-12 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
        throw SingularCovariance("covariance matrix is singular or indefinite");
    }
    return ldlt;
}

struct GroupMeans {
    Vector treated;
    Vector control;
};

// Weighted per-group covariate means over units with positive weight.
GroupMeans weighted_group_means(const Dataset& data, const std::vector<double>& weights) {
    if (weights.size() != static_cast<size_t>(data.n())) {
        throw DimensionMismatch("weights length does not match the dataset");
    }
    Vector mean_t = Vector::Zero(data.p());
    Vector mean_c = Vector::Zero(data.p());
    double wt = 0.0, wc = 0.0;
    for (int i = 0; i < data.n(); ++i) {
        const double w = weights[static_cast<size_t>(i)];
        if (w < 0.0) throw DataError("match weights must be nonnegative");
        if (w == 0.0) continue;
        if (data.W[static_cast<size_t>(i)] == 1) {
            mean_t += w * data.X.row(i).transpose();
            wt += w;
        } else {
            mean_c += w * data.X.row(i).transpose();
            wc += w;
        }
    }
    if (wt <= 0.0 || wc <= 0.0) {
        throw DataError("both groups need positive total weight");
    }
    return GroupMeans{mean_t / wt, mean_c / wc};
}

}  // namespace

double smd(const Vector& treated_values, const Vector& control_values) {
    if (treated_values.size() < 2 || control_values.size() < 2) {
        throw TooFewUnits("standardized mean difference needs two units per group");
    }
    const auto moments = [](const Vector& v) {
        const double mean = v.mean();
        const double var = (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
        return std::pair<double, double>{mean, var};
    };
    const auto [mt, vt] = moments(treated_values);
    const auto [mc, vc] = moments(control_values);
    return smd_from_moments(mt, vt, mc, vc);
}

double smd_weighted(const Vector& treated_values, const Vector& treated_weights,
                    const Vector& control_values, const Vector& control_weights) {
    return smd_from_moments(weighted_mean(treated_values, treated_weights),
                            reliability_variance(treated_values, treated_weights),
                            weighted_mean(control_values, control_weights),
                            reliability_variance(control_values, control_weights));
}

double i1_average_pairwise_mahalanobis(const Dataset& data,
                                       const std::vector<std::pair<int, int>>& pairs,
                                       const Matrix& covariance) {
    if (pairs.empty()) throw EmptyMatch("no pairs to average over");
    const auto ldlt = invertible_ldlt(covariance);
    double total = 0.0;
    for (const auto& [t, c] : pairs) {
        const Vector diff = (data.X.row(t) - data.X.row(c)).transpose();
        total += std::sqrt(std::max(0.0, diff.dot(ldlt.solve(diff))));
    }
    return total / static_cast<double>(pairs.size());
}

double i2_between_group_mahalanobis(const Dataset& data, const std::vector<double>& weights,
                                    const Matrix& covariance) {
    const auto ldlt = invertible_ldlt(covariance);
    const auto means = weighted_group_means(data, weights);
    const Vector diff = means.treated - means.control;
    return std::sqrt(std::max(0.0, diff.dot(ldlt.solve(diff))));
}

double i3_absolute_mean_difference(const Dataset& data, const std::vector<double>& weights) {
    const auto means = weighted_group_means(data, weights);
    return (means.treated - means.control).cwiseAbs().sum();
}

double i4_l1_histogram(const Dataset& data, const std::vector<double>& weights,
                       const CoarseningSpec& bins) {
    if (weights.size() != static_cast<size_t>(data.n())) {
        throw DimensionMismatch("weights length does not match the dataset");
    }

    // Cells come from coarsening the retained units only, so the bin ranges
    // reflect the sample actually being compared.
    std::vector<int> kept;
    for (int i = 0; i < data.n(); ++i) {
        if (weights[static_cast<size_t>(i)] > 0.0) kept.push_back(i);
    }
    if (kept.empty()) throw DataError("no unit has positive weight");

    Dataset sub;
    sub.X.resize(static_cast<Eigen::Index>(kept.size()), data.p());
    sub.W.resize(kept.size());
    sub.Y.resize(static_cast<Eigen::Index>(kept.size()));
    for (size_t r = 0; r < kept.size(); ++r) {
        sub.X.row(static_cast<Eigen::Index>(r)) = data.X.row(kept[r]);
        sub.W[r] = data.W[static_cast<size_t>(kept[r])];
        sub.Y[static_cast<Eigen::Index>(r)] = data.Y[kept[r]];
    }
    const CoarsenedData coarse = coarsen(sub, bins);

    std::map<std::vector<int>, std::pair<double, double>> cells;  // treated, control mass
    double wt = 0.0, wc = 0.0;
    for (size_t r = 0; r < kept.size(); ++r) {
        const double w = weights[static_cast<size_t>(kept[r])];
        auto& cell = cells[coarse.stratum_key(static_cast<int>(r))];
        if (sub.W[r] == 1) {
            cell.first += w;
            wt += w;
        } else {
            cell.second += w;
            wc += w;
        }
    }
    if (wt <= 0.0 || wc <= 0.0) {
        throw DataError("both groups need positive total weight");
    }

    double l1 = 0.0;
    for (const auto& [key, mass] : cells) {
        l1 += std::abs(mass.first / wt - mass.second / wc);
    }
    return l1;
}

BalanceReport balance_report(const Dataset& data, const MatchResult& match,
                             CovarianceSource source, const CoarseningSpec& i4_bins) {
    validate_dataset(data);
    if (match.weights.size() != static_cast<size_t>(data.n())) {
        throw DimensionMismatch("match result does not correspond to this dataset");
    }

    BalanceReport report;
    if (source == CovarianceSource::kFullSample) {
        report.covariance_used = sample_covariance(data.X);
    } else {
        std::vector<int> kept;
        for (int i = 0; i < data.n(); ++i) {
            if (match.weights[static_cast<size_t>(i)] > 0.0) kept.push_back(i);
        }
        Matrix kept_x(static_cast<Eigen::Index>(kept.size()), data.p());
        for (size_t r = 0; r < kept.size(); ++r) {
            kept_x.row(static_cast<Eigen::Index>(r)) = data.X.row(kept[r]);
        }
        report.covariance_used = sample_covariance(kept_x);
    }

    report.smd.resize(data.p());
    for (int j = 0; j < data.p(); ++j) {
        std::vector<double> vt, wt, vc, wc;
        for (int i = 0; i < data.n(); ++i) {
            const double w = match.weights[static_cast<size_t>(i)];
            if (w <= 0.0) continue;
            if (data.W[static_cast<size_t>(i)] == 1) {
                vt.push_back(data.X(i, j));
                wt.push_back(w);
            } else {
                vc.push_back(data.X(i, j));
                wc.push_back(w);
            }
        }
        report.smd[j] = smd_weighted(
            Eigen::Map<const Vector>(vt.data(), static_cast<Eigen::Index>(vt.size())),
            Eigen::Map<const Vector>(wt.data(), static_cast<Eigen::Index>(wt.size())),
            Eigen::Map<const Vector>(vc.data(), static_cast<Eigen::Index>(vc.size())),
            Eigen::Map<const Vector>(wc.data(), static_cast<Eigen::Index>(wc.size())));
    }

    if (!match.pairs.empty()) {
        report.i1 = i1_average_pairwise_mahalanobis(data, match.pairs, report.covariance_used);
        report.has_i1 = true;
    }
    report.i2 = i2_between_group_mahalanobis(data, match.weights, report.covariance_used);
    report.i3 = i3_absolute_mean_difference(data, match.weights);
    report.i4 = i4_l1_histogram(data, match.weights, i4_bins);
    report.i4_bins = i4_bins.describe();
    return report;
}

CrossReplicationBalance i5_cross_replication(const Matrix& per_replication_smds) {
    if (per_replication_smds.rows() < 1) {
        throw TooFewRecords("cross-replication balance needs at least one row");
    }
    CrossReplicationBalance out;
    out.replication_count = static_cast<int>(per_replication_smds.rows());
    out.mean_smd_per_covariate = per_replication_smds.colwise().mean();
    out.i5 = out.mean_smd_per_covariate.cwiseAbs().sum();
    return out;
}

}  // namespace causalmatch
