#include "causalmatch/estimators.hpp"

#include "causalmatch/psm.hpp"

#include "causalmatch/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace causalmatch {

namespace {

std::string covariate_name(int j) { return "x" + std::to_string(j + 1); }

}  // namespace

ModelSpec ModelSpec::unadjusted() {
    return ModelSpec{"M(W)", {}};
}

// Labels join terms with '+' so they can sit unquoted in CSV fields.
ModelSpec ModelSpec::linear_adjusted(int p) {
    ModelSpec spec;
    spec.label = "M(W+X)";
    for (int j = 0; j < p; ++j) {
        spec.terms.push_back({ModelTerm::Kind::kLinear, j, 0});
    }
    return spec;
}

ModelSpec ModelSpec::linear_subset(const std::vector<int>& columns) {
    ModelSpec spec;
    spec.label = "M(W";
    for (int j : columns) {
        spec.terms.push_back({ModelTerm::Kind::kLinear, j, 0});
        spec.label += "+" + covariate_name(j);
    }
    spec.label += ")";
    return spec;
}

ModelSpec ModelSpec::interaction(const std::vector<int>& interaction_columns,
                                 const std::vector<int>& linear_columns) {
    ModelSpec spec;
    spec.label = "M(W";
    for (int j : interaction_columns) {
        spec.terms.push_back({ModelTerm::Kind::kTreatInteraction, j, 0});
        spec.label += "+W*" + covariate_name(j);
    }
    for (int j : linear_columns) {
        spec.terms.push_back({ModelTerm::Kind::kLinear, j, 0});
        spec.label += "+" + covariate_name(j);
    }
    spec.label += ")";
    return spec;
}

EstimateRecord estimate(const MatchResult& match, const Dataset& data, const ModelSpec& model,
                        int replication_index) {
    validate_dataset(data);
    if (match.weights.size() != static_cast<size_t>(data.n())) {
        throw DimensionMismatch("match result does not correspond to this dataset");
    }

    std::vector<int> kept;
    for (int i = 0; i < data.n(); ++i) {
        if (match.weights[static_cast<size_t>(i)] > 0.0) kept.push_back(i);
    }
    if (kept.empty()) throw EmptyMatch("no unit carries positive match weight");

    const Eigen::Index m = static_cast<Eigen::Index>(kept.size());
    Matrix design(m, 2 + static_cast<Eigen::Index>(model.terms.size()));
    std::vector<std::string> labels{"(intercept)", "w"};
    Vector y(m);
    Vector sqrt_w(m);

    for (Eigen::Index r = 0; r < m; ++r) {
        const int i = kept[static_cast<size_t>(r)];
        design(r, 0) = 1.0;
        design(r, 1) = data.W[static_cast<size_t>(i)];
        y[r] = data.Y[i];
        sqrt_w[r] = std::sqrt(match.weights[static_cast<size_t>(i)]);
    }

    std::vector<int> theta_columns;
    Eigen::Index col = 2;
    for (const auto& term : model.terms) {
        if (term.i < 0 || term.i >= data.p() || term.j < 0 || term.j >= data.p()) {
            throw DimensionMismatch("model term references a missing covariate column");
        }
        for (Eigen::Index r = 0; r < m; ++r) {
            const int i = kept[static_cast<size_t>(r)];
            const double xi = data.X(i, term.i);
            switch (term.kind) {
                case ModelTerm::Kind::kLinear:
                    design(r, col) = xi;
                    break;
                case ModelTerm::Kind::kSquare:
                    design(r, col) = xi * xi;
                    break;
                case ModelTerm::Kind::kCube:
                    design(r, col) = xi * xi * xi;
                    break;
                case ModelTerm::Kind::kInteraction:
                    design(r, col) = xi * data.X(i, term.j);
                    break;
                case ModelTerm::Kind::kTreatInteraction:
                    design(r, col) = data.W[static_cast<size_t>(i)] * xi;
                    break;
            }
        }
        switch (term.kind) {
            case ModelTerm::Kind::kLinear:
                labels.push_back(covariate_name(term.i));
                break;
            case ModelTerm::Kind::kSquare:
                labels.push_back(covariate_name(term.i) + "^2");
                break;
            case ModelTerm::Kind::kCube:
                labels.push_back(covariate_name(term.i) + "^3");
                break;
            case ModelTerm::Kind::kInteraction:
                labels.push_back(covariate_name(term.i) + "*" + covariate_name(term.j));
                break;
            case ModelTerm::Kind::kTreatInteraction:
                labels.push_back("w*" + covariate_name(term.i));
                theta_columns.push_back(term.i);
                break;
        }
        ++col;
    }

    const DesignMatrix weighted =
        make_design(sqrt_w.asDiagonal() * design, std::move(labels));
    const FitResult fit = fit_ols(weighted, sqrt_w.cwiseProduct(y));

    EstimateRecord record;
    record.estimator_label = model.label;
    record.design_label = match.design_label;
    record.beta1_hat = fit.coefficients[1];
    record.point_estimate = record.beta1_hat;
    record.replication_index = replication_index;
    record.theta_columns = theta_columns;
    record.theta_hat.resize(static_cast<Eigen::Index>(theta_columns.size()));
    Eigen::Index t = 0;
    col = 2;
    for (const auto& term : model.terms) {
        if (term.kind == ModelTerm::Kind::kTreatInteraction) {
            record.theta_hat[t++] = fit.coefficients[col];
        }
        ++col;
    }
    return record;
}

double patt_from_interaction(const EstimateRecord& record, TreatedMeanSource source,
                             const Dataset& data, const MatchResult& match) {
    if (record.theta_hat.size() == 0) return record.beta1_hat;

    double effect = record.beta1_hat;
    for (Eigen::Index t = 0; t < record.theta_hat.size(); ++t) {
        const int j = record.theta_columns[static_cast<size_t>(t)];
        double sum = 0.0;
        long count = 0;
        for (int i = 0; i < data.n(); ++i) {
            if (data.W[static_cast<size_t>(i)] != 1) continue;
            if (source == TreatedMeanSource::kMatchedTreated &&
                match.weights[static_cast<size_t>(i)] <= 0.0) {
                continue;
            }
            sum += data.X(i, j);
            ++count;
        }
        if (count == 0) throw NoTreatedUnits("no treated unit available for the covariate mean");
        effect += record.theta_hat[t] * sum / static_cast<double>(count);
    }
    return effect;
}

CherryPickDiagnostic cherry_pick_diagnostic(const std::vector<double>& estimates) {
    if (estimates.size() < 2) {
        throw TooFewModels("model-dependence diagnostic needs at least two estimates");
    }
    const double mean =
        std::accumulate(estimates.begin(), estimates.end(), 0.0) /
        static_cast<double>(estimates.size());
    double sq = 0.0;
    for (double e : estimates) sq += (e - mean) * (e - mean);
    CherryPickDiagnostic diag;
    diag.variance = sq / static_cast<double>(estimates.size() - 1);
    diag.max_estimate = *std::max_element(estimates.begin(), estimates.end());
    return diag;
}

std::vector<ModelSpec> enumerate_model_space(int p) {
    if (p < 1) throw ConfigInvalid("model space needs at least one covariate");
    if (p > 3) throw ConfigInvalid("model space enumeration is limited to p <= 3");

    std::vector<ModelTerm> pool;
    for (int j = 0; j < p; ++j) {
        pool.push_back({ModelTerm::Kind::kLinear, j, 0});
        pool.push_back({ModelTerm::Kind::kSquare, j, 0});
        pool.push_back({ModelTerm::Kind::kCube, j, 0});
    }
    for (int j = 0; j + 1 < p; ++j) {
        pool.push_back({ModelTerm::Kind::kInteraction, j, j + 1});
    }
    for (int j = 0; j < p; ++j) {
        pool.push_back({ModelTerm::Kind::kTreatInteraction, j, 0});
    }

    const size_t count = static_cast<size_t>(1) << pool.size();
    std::vector<ModelSpec> specs;
    specs.reserve(count);
    for (size_t mask = 0; mask < count; ++mask) {
        ModelSpec spec;
        spec.label = "model" + std::to_string(mask);
        for (size_t b = 0; b < pool.size(); ++b) {
            if (mask & (static_cast<size_t>(1) << b)) spec.terms.push_back(pool[b]);
        }
        specs.push_back(std::move(spec));
    }
    return specs;
}

double relative_efficiency(const EfficiencyInputs& inputs) {
    if (inputs.m_cov_pairs < 1) throw DataError("covariate-design pair count must be positive");
    if (!(inputs.sigma_eps2 > 0.0)) throw ConfigInvalid("error variance must be positive");
    const double s = sine_distance(inputs.alpha1, inputs.beta2);
    const double sigma_nu2 =
        s * s * inputs.beta2.dot(inputs.covariance_matched * inputs.beta2);
    return inputs.sigma_eps2 / (sigma_nu2 + inputs.sigma_eps2) *
           static_cast<double>(inputs.n_psm_pairs) / static_cast<double>(inputs.m_cov_pairs);
}

AggregateMetrics aggregate(const std::vector<EstimateRecord>& records, double true_value) {
    AggregateMetrics metrics;
    metrics.true_value = true_value;

    double sum = 0.0;
    long k = 0;
    for (const auto& record : records) {
        if (!record.ok || !std::isfinite(record.point_estimate)) {
            ++metrics.failure_count;
            continue;
        }
        sum += record.point_estimate;
        ++k;
    }
    if (k < 2) throw TooFewRecords("aggregation needs at least two successful records");

    metrics.replication_count = static_cast<int>(k);
    metrics.mean_estimate = sum / static_cast<double>(k);
    metrics.bias = metrics.mean_estimate - true_value;

    double sq = 0.0;
    for (const auto& record : records) {
        if (!record.ok || !std::isfinite(record.point_estimate)) continue;
        const double d = record.point_estimate - metrics.mean_estimate;
        sq += d * d;
    }
    metrics.sd = std::sqrt(sq / static_cast<double>(k - 1));
    metrics.mse = metrics.bias * metrics.bias + metrics.sd * metrics.sd;
    metrics.rmse = std::sqrt(metrics.mse);
    return metrics;
}

std::vector<std::pair<std::vector<int>, AggregateMetrics>> verify_proposition1(
    const ScenarioConfig& config, const std::vector<std::vector<int>>& subsets, int n,
    int replications, double caliper_multiplier, long oracle_draws, int workers) {
    if (subsets.empty()) throw ConfigInvalid("at least one covariate subset is required");
    if (replications < 2) throw ConfigInvalid("at least two replications are required");

    ScenarioConfig scenario = config;
    scenario.n = n;
    validate_config(scenario);
    const double truth = true_patt_oracle(scenario, oracle_draws).value;

    const FormulaSpec formula = FormulaSpec::for_scenario(scenario);
    std::vector<ModelSpec> models;
    models.reserve(subsets.size());
    for (const auto& subset : subsets) models.push_back(ModelSpec::linear_subset(subset));

    std::vector<std::vector<EstimateRecord>> per_subset(
        subsets.size(), std::vector<EstimateRecord>(static_cast<size_t>(replications)));

    parallel_for(replications, workers, [&](int r) {
        EstimateRecord failed;
        failed.ok = false;
        failed.replication_index = r;
        try {
            const Dataset data = generate_dataset(scenario, r);
            const PropensityResult propensity = estimate_propensity(data, formula);
            const double caliper = caliper_width(propensity.logits, caliper_multiplier);
            const MatchResult match = psm_match(propensity.logits, data.W, caliper);
            for (size_t s = 0; s < models.size(); ++s) {
                try {
                    per_subset[s][static_cast<size_t>(r)] = estimate(match, data, models[s], r);
                } catch (const Error& e) {
                    failed.failure = e.what();
                    per_subset[s][static_cast<size_t>(r)] = failed;
                }
            }
        } catch (const Error& e) {
            failed.failure = e.what();
            for (size_t s = 0; s < models.size(); ++s) {
                per_subset[s][static_cast<size_t>(r)] = failed;
            }
        }
    });

    std::vector<std::pair<std::vector<int>, AggregateMetrics>> out;
    out.reserve(subsets.size());
    for (size_t s = 0; s < subsets.size(); ++s) {
        out.emplace_back(subsets[s], aggregate(per_subset[s], truth));
    }
    return out;
}

}  // namespace causalmatch
