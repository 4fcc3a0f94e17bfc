#include "causalmatch/datagen.hpp"

#include "causalmatch/numerics.hpp"
#include "causalmatch/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

namespace causalmatch {

namespace {

constexpr int kSineBins = 10;
constexpr int kMaxRedraws = 100;
constexpr double kSquareTermScale = 0.5;
constexpr double kCrossTermScale = 0.3;

// Curvature and adjacent-pair interaction added on top of a linear index.
// The square terms are centered at their expectation so the nonlinear index
// keeps mean zero, and both extras are damped by the covariate scale so their
// spread stays comparable to the linear part.
double nonlinear_extra(const Vector& coef, const Eigen::Ref<const Vector>& x, double scale) {
    const double var = scale * scale;
    double extra = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        extra += kSquareTermScale * coef[j] * (x[j] * x[j] - var) / scale;
    }
    for (Eigen::Index j = 0; j + 1 < x.size(); ++j) {
        extra += kCrossTermScale * coef[j] * x[j] * x[j + 1] / scale;
    }
    return extra;
}

Vector draw_direction(int p, RngStream& rng) {
    Vector v(p);
    for (int j = 0; j < p; ++j) {
        const double magnitude = rng.uniform_int(1, 9);
        v[j] = rng.bernoulli(0.5) ? magnitude : -magnitude;
    }
    return v / v.norm();
}

}  // namespace

void validate_config(const ScenarioConfig& config) {
    if (config.p < 1) throw ConfigInvalid("p must be at least 1");
    if (config.n < 4) throw ConfigInvalid("n must be at least 4");
    if (config.alpha1.size() != config.p) {
        throw ConfigInvalid("alpha1 length " + std::to_string(config.alpha1.size()) +
                            " does not match p = " + std::to_string(config.p));
    }
    if (config.beta2.size() != config.p) {
        throw ConfigInvalid("beta2 length " + std::to_string(config.beta2.size()) +
                            " does not match p = " + std::to_string(config.p));
    }
    if (config.theta.size() != static_cast<Eigen::Index>(config.interaction_subset.size())) {
        throw ConfigInvalid("theta and interaction_subset lengths differ");
    }
    for (int idx : config.interaction_subset) {
        if (idx < 0 || idx >= config.p) {
            throw ConfigInvalid("interaction_subset index " + std::to_string(idx) +
                                " out of range for p = " + std::to_string(config.p));
        }
    }
    if (!(config.covariate_scale > 0.0)) throw ConfigInvalid("covariate_scale must be positive");
    if (!(config.error_sd >= 0.0)) throw ConfigInvalid("error_sd must be nonnegative");
    if (config.replications < 1) throw ConfigInvalid("replications must be at least 1");
    if (!config.alpha1.allFinite() || !config.beta2.allFinite() || !config.theta.allFinite()) {
        throw ConfigInvalid("coefficients must be finite");
    }
}

double sine_distance(const Vector& u, const Vector& v) {
    if (u.size() != v.size()) throw DimensionMismatch("sine_distance inputs differ in length");
    const double nu = u.norm();
    const double nv = v.norm();
    if (nu == 0.0 || nv == 0.0) throw ZeroVector("sine_distance needs nonzero vectors");
    const double c = std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
    return std::sqrt(1.0 - c * c);
}

CoefficientPair make_coefficient_pair(const Vector& alpha_direction, const Vector& beta_direction,
                                      double k) {
    const double na = alpha_direction.norm();
    const double nb = beta_direction.norm();
    if (na == 0.0 || nb == 0.0) throw ZeroVector("coefficient direction has zero norm");
    CoefficientPair pair;
    pair.alpha1 = alpha_direction / na;
    pair.beta2 = k * beta_direction / nb;
    pair.sine_distance = sine_distance(alpha_direction, beta_direction);
    return pair;
}

std::vector<CoefficientPair> generate_coefficient_pairs(int p, int count, double k,
                                                        std::uint64_t seed) {
    if (p < 1) throw ConfigInvalid("p must be at least 1");
    if (count < 1) throw ConfigInvalid("count must be at least 1");
    if (!(k > 0.0)) throw ConfigInvalid("k must be positive");

    // Quotas over the ten sine-distance bins, as even as count allows.
    int quota[kSineBins];
    const int base = count / kSineBins;
    const int rem = count % kSineBins;
    for (int b = 0; b < kSineBins; ++b) quota[b] = base + (b < rem ? 1 : 0);

    int filled[kSineBins] = {0};
    std::vector<CoefficientPair> pairs;
    pairs.reserve(static_cast<size_t>(count));

    RngStream rng(seed, stream_tag::kCoefficientPairs);
    const long max_draws = std::max(200000L, 20000L * count);
    for (long draw = 0; draw < max_draws && static_cast<int>(pairs.size()) < count; ++draw) {
        const Vector a = draw_direction(p, rng);
        const Vector b = draw_direction(p, rng);
        const double s = sine_distance(a, b);
        const int bin = std::min(kSineBins - 1, static_cast<int>(s * kSineBins));
        if (filled[bin] >= quota[bin]) continue;
        ++filled[bin];
        pairs.push_back(make_coefficient_pair(a, b, k));
    }

    if (static_cast<int>(pairs.size()) < count) {
        std::string msg = "could not fill sine-distance quotas within " +
                          std::to_string(max_draws) + " draws; achieved/target per bin:";
        for (int b = 0; b < kSineBins; ++b) {
            char part[48];
            std::snprintf(part, sizeof(part), " [%.1f,%.1f) %d/%d", b / 10.0, (b + 1) / 10.0,
                          filled[b], quota[b]);
            msg += part;
        }
        throw Unsatisfiable(msg);
    }
    return pairs;
}

double treatment_index(const ScenarioConfig& config, const Eigen::Ref<const Vector>& x) {
    double index = config.alpha0 + config.alpha1.dot(x);
    if (config.nonlinear_treatment) {
        index += nonlinear_extra(config.alpha1, x, config.covariate_scale);
    }
    return index;
}

double outcome_mean(const ScenarioConfig& config, const Eigen::Ref<const Vector>& x, int w) {
    double mean = config.beta0 + config.beta2.dot(x);
    if (config.nonlinear_outcome) {
        mean += nonlinear_extra(config.beta2, x, config.covariate_scale);
    }
    if (w != 0) {
        mean += config.beta1;
        for (size_t t = 0; t < config.interaction_subset.size(); ++t) {
            mean += config.theta[static_cast<Eigen::Index>(t)] * x[config.interaction_subset[t]];
        }
    }
    return mean;
}

Dataset generate_dataset(const ScenarioConfig& config, int replication_index) {
    validate_config(config);

    for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
        RngStream rng(config.seed, stream_tag::kReplication,
                      static_cast<std::uint64_t>(replication_index),
                      static_cast<std::uint64_t>(attempt));

        Dataset data;
        data.X.resize(config.n, config.p);
        for (int i = 0; i < config.n; ++i) {
            for (int j = 0; j < config.p; ++j) {
                data.X(i, j) = config.covariate_scale * rng.normal();
            }
        }

        data.W.resize(static_cast<size_t>(config.n));
        int treated = 0;
        for (int i = 0; i < config.n; ++i) {
            const int w = rng.bernoulli(expit(treatment_index(config, data.X.row(i)))) ? 1 : 0;
            data.W[static_cast<size_t>(i)] = w;
            treated += w;
        }
        if (treated == 0 || treated == config.n) continue;

        data.Y.resize(config.n);
        for (int i = 0; i < config.n; ++i) {
            data.Y[i] = outcome_mean(config, data.X.row(i), data.W[static_cast<size_t>(i)]) +
                        config.error_sd * rng.normal();
        }
        return data;
    }
    throw DegenerateSample("treatment was constant in " + std::to_string(kMaxRedraws) +
                           " consecutive redraws of replication " +
                           std::to_string(replication_index));
}

OracleResult true_patt_oracle(const ScenarioConfig& config, long draws) {
    validate_config(config);
    if (draws < 1) throw ConfigInvalid("oracle draws must be at least 1");

    if (config.theta.size() == 0) {
        return OracleResult{config.beta1, 0.0, 0};
    }

    RngStream rng(config.seed, stream_tag::kOracle);
    Vector x(config.p);
    double sum = 0.0;
    double sum_sq = 0.0;
    long treated = 0;
    for (long d = 0; d < draws; ++d) {
        for (int j = 0; j < config.p; ++j) x[j] = config.covariate_scale * rng.normal();
        if (!rng.bernoulli(expit(treatment_index(config, x)))) continue;
        double effect = config.beta1;
        for (size_t t = 0; t < config.interaction_subset.size(); ++t) {
            effect += config.theta[static_cast<Eigen::Index>(t)] * x[config.interaction_subset[t]];
        }
        sum += effect;
        sum_sq += effect * effect;
        ++treated;
    }
    if (treated < 2) {
        throw DegenerateSample("oracle saw fewer than two treated draws");
    }
    const double mean = sum / static_cast<double>(treated);
    const double var = (sum_sq - static_cast<double>(treated) * mean * mean) /
                       static_cast<double>(treated - 1);
    return OracleResult{mean, std::sqrt(std::max(var, 0.0) / static_cast<double>(treated)), draws};
}

}  // namespace causalmatch
