#include "causalmatch/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace causalmatch {

namespace {

constexpr double kQrRankThreshold = 1e-10;
constexpr double kSeparationBound = 30.0;
constexpr double kMinWorkingWeight = 1e-10;
constexpr int kMaxHalvings = 30;
constexpr double kDegenerateProb = 1e-6;
constexpr double kLikelihoodSlack = 1e-10;

std::string shape_message(const char* what, Eigen::Index a, Eigen::Index b) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s: %lld vs %lld", what, static_cast<long long>(a),
                  static_cast<long long>(b));
    return buf;
}

// log(1 + exp(x)) without overflow.
double softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double log_likelihood(const Vector& eta, const std::vector<int>& w) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        ll += w[static_cast<size_t>(i)] * eta[i] - softplus(eta[i]);
    }
    return ll;
}

// An entire class fitted at probability 0 or 1 means the likelihood has no
// finite maximiser; the score vanishes along the separating direction while
// the coefficients keep growing.
bool class_fitted_degenerate(const Vector& prob, const std::vector<int>& w) {
    bool treated_at_one = true;
    bool control_at_zero = true;
    for (Eigen::Index i = 0; i < prob.size(); ++i) {
        if (w[static_cast<size_t>(i)] == 1) {
            treated_at_one = treated_at_one && prob[i] >= 1.0 - kDegenerateProb;
        } else {
            control_at_zero = control_at_zero && prob[i] <= kDegenerateProb;
        }
    }
    return treated_at_one || control_at_zero;
}

}  // namespace

double expit(double x) {
    const double p = 1.0 / (1.0 + std::exp(-x));
    return std::clamp(p, 1e-12, 1.0 - 1e-12);
}

double logit(double p) {
    return std::log(p / (1.0 - p));
}

DesignMatrix make_design(Matrix values, std::vector<std::string> column_labels) {
    if (static_cast<size_t>(values.cols()) != column_labels.size()) {
        throw DimensionMismatch(shape_message("design columns vs labels", values.cols(),
                                              static_cast<Eigen::Index>(column_labels.size())));
    }
    if (!values.allFinite()) {
        throw DataError("design matrix contains non-finite entries");
    }
    return DesignMatrix{std::move(values), std::move(column_labels)};
}

FitResult fit_ols(const DesignMatrix& design, const Vector& y) {
    if (design.rows() != y.size()) {
        throw DimensionMismatch(shape_message("design rows vs outcome length", design.rows(), y.size()));
    }
    if (design.rows() < design.cols()) {
        throw TooFewRows(shape_message("fewer rows than columns", design.rows(), design.cols()));
    }

    Eigen::ColPivHouseholderQR<Matrix> qr(design.values);
    qr.setThreshold(kQrRankThreshold);
    if (qr.rank() < design.cols()) {
        std::string msg = "rank-deficient design (rank " + std::to_string(qr.rank()) + " of " +
                          std::to_string(design.cols()) + "); columns:";
        for (const auto& label : design.column_labels) msg += " " + label;
        throw RankDeficient(msg);
    }

    FitResult fit;
    fit.coefficients = qr.solve(y);
    const double rss = (y - design.values * fit.coefficients).squaredNorm();
    const Eigen::Index dof = design.rows() - design.cols();
    fit.residual_variance = dof > 0 ? rss / static_cast<double>(dof) : 0.0;
    fit.converged = true;
    fit.iterations = 1;
    return fit;
}

FitResult fit_logistic(const DesignMatrix& design, const std::vector<int>& w, double tol,
                       int max_iter) {
    const Eigen::Index n = design.rows();
    const Eigen::Index q = design.cols();
    if (static_cast<size_t>(n) != w.size()) {
        throw DimensionMismatch(
            shape_message("design rows vs treatment length", n, static_cast<Eigen::Index>(w.size())));
    }
    if (n < q) {
        throw TooFewRows(shape_message("fewer rows than columns", n, q));
    }
    int ones = 0;
    for (int wi : w) {
        if (wi != 0 && wi != 1) throw DataError("treatment indicator must be 0 or 1");
        ones += wi;
    }
    if (ones == 0 || ones == static_cast<int>(w.size())) {
        throw NoVariation("treatment indicator is constant");
    }

    Vector wd(n);
    for (Eigen::Index i = 0; i < n; ++i) wd[i] = w[static_cast<size_t>(i)];

    Vector beta = Vector::Zero(q);
    Vector eta = Vector::Zero(n);
    double ll = log_likelihood(eta, w);

    FitResult fit;
    fit.converged = false;
    for (int iter = 1; iter <= max_iter; ++iter) {
        Vector prob(n), weight(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            prob[i] = expit(eta[i]);
            weight[i] = std::max(prob[i] * (1.0 - prob[i]), kMinWorkingWeight);
        }
        const Vector score = design.values.transpose() * (wd - prob);
        fit.iterations = iter - 1;
        if (score.cwiseAbs().maxCoeff() <= tol) {
            if (class_fitted_degenerate(prob, w)) {
                throw Separation("fitted probabilities reached 0/1 for an entire class");
            }
            fit.converged = true;
            break;
        }

        // Newton step via QR of the square-root-weighted design.
        const Vector sqrt_w = weight.cwiseSqrt();
        Eigen::ColPivHouseholderQR<Matrix> qr(sqrt_w.asDiagonal() * design.values);
        qr.setThreshold(kQrRankThreshold);
        if (qr.rank() < q) {
            throw RankDeficient("working design is rank-deficient in IRLS");
        }
        const Vector z = sqrt_w.asDiagonal() * eta + (wd - prob).cwiseQuotient(sqrt_w);
        Vector step = qr.solve(z) - beta;

        // Accept anything within rounding slack of the current likelihood;
        // near the optimum the true gain of a full step drops below the
        // noise of summing n terms, and rejecting it would stall the fit.
        const double slack = kLikelihoodSlack * (std::abs(ll) + 1.0);
        double scale = 1.0;
        Vector candidate = beta + step;
        Vector cand_eta = design.values * candidate;
        double cand_ll = log_likelihood(cand_eta, w);
        for (int h = 0; h < kMaxHalvings && !(cand_ll >= ll - slack); ++h) {
            scale *= 0.5;
            candidate = beta + scale * step;
            cand_eta = design.values * candidate;
            cand_ll = log_likelihood(cand_eta, w);
        }
        beta = candidate;
        eta = cand_eta;
        ll = cand_ll;

        if (beta.cwiseAbs().maxCoeff() > kSeparationBound) {
            throw Separation("coefficients diverged; classes are (quasi-)separated");
        }
        fit.iterations = iter;
    }

    if (!fit.converged) {
        Vector prob(n);
        for (Eigen::Index i = 0; i < n; ++i) prob[i] = expit(eta[i]);
        if (class_fitted_degenerate(prob, w)) {
            throw Separation("fitted probabilities reached 0/1 for an entire class");
        }
    }

    fit.coefficients = beta;
    fit.residual_variance = 0.0;
    return fit;
}

Matrix sample_covariance(const Matrix& X) {
    if (X.rows() < 2) {
        throw TooFewRows("sample covariance needs at least two rows");
    }
    const Vector mean = X.colwise().mean();
    const Matrix centered = X.rowwise() - mean.transpose();
    Matrix cov = centered.transpose() * centered;
    cov = 0.5 * (cov + cov.transpose());
    cov /= static_cast<double>(X.rows() - 1);
    return cov;
}

double weighted_mean(const Vector& values, const Vector& weights) {
    if (values.size() != weights.size()) {
        throw DimensionMismatch(shape_message("values vs weights", values.size(), weights.size()));
    }
    const double total = weights.sum();
    if (!(total > 0.0)) {
        throw DataError("weighted mean needs positive total weight");
    }
    return values.dot(weights) / total;
}

double weighted_variance(const Vector& values, const Vector& weights) {
    const double total = weights.sum();
    const double mean = weighted_mean(values, weights);
    if (!(total > 1.0)) {
        throw DataError("weighted variance needs total weight above one");
    }
    const Vector centered = values.array() - mean;
    return centered.cwiseProduct(centered).dot(weights) / (total - 1.0);
}

}  // namespace causalmatch
