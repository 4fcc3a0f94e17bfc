#pragma once

#include "causalmatch/types.hpp"

#include <string>
#include <vector>

namespace causalmatch {

/// Design matrix with human-readable column labels (used in failure messages
/// and exported model summaries).
struct DesignMatrix {
    Matrix values;
    std::vector<std::string> column_labels;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
};

/// Validates shape agreement and finiteness of all entries.
DesignMatrix make_design(Matrix values, std::vector<std::string> column_labels);

struct FitResult {
    Vector coefficients;
    double residual_variance = 0.0;  // OLS only; 0 when rows == columns
    bool converged = true;
    int iterations = 0;
};

/// Least squares via rank-revealing QR. Throws RankDeficient when the design
/// has numerical rank below its column count, TooFewRows when rows < columns.
FitResult fit_ols(const DesignMatrix& design, const Vector& y);

/// Logistic regression by iteratively reweighted least squares with
/// step-halving. Convergence criterion is the max absolute score component.
/// Throws NoVariation when w is constant and Separation when any coefficient
/// walks past +-30 on the logit scale.
FitResult fit_logistic(const DesignMatrix& design, const std::vector<int>& w,
                       double tol = 1e-8, int max_iter = 50);

/// Unbiased (n-1 denominator) covariance of the rows of X.
/// Throws TooFewRows when X has fewer than two rows.
Matrix sample_covariance(const Matrix& X);

/// Weighted mean; weights must be nonnegative with positive total.
double weighted_mean(const Vector& values, const Vector& weights);

/// Frequency-weighted sample variance with (sum_w - 1) denominator.
double weighted_variance(const Vector& values, const Vector& weights);

double expit(double x);
double logit(double p);

}  // namespace causalmatch
