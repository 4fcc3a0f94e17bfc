#include "causalmatch/cem.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <string>
#include <tuple>

namespace causalmatch {

namespace {

int bin_for_value(double x, double lo, double width, int k) {
    if (width <= 0.0) return 0;
    const int b = static_cast<int>(std::floor((x - lo) / width));
    return std::clamp(b, 0, k - 1);
}

std::string describe_cutpoints(const std::vector<double>& cuts) {
    std::string out = "cutpoints(";
    for (size_t i = 0; i < cuts.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(cuts[i]);
    }
    return out + ")";
}

}  // namespace

BinRule BinRule::fixed_k(int k) {
    if (k < 2) throw ConfigInvalid("fixed bin count must be at least 2");
    BinRule rule;
    rule.kind = Kind::kFixedK;
    rule.k = k;
    return rule;
}

BinRule BinRule::with_cutpoints(std::vector<double> cuts) {
    if (cuts.empty()) throw ConfigInvalid("cutpoint list must be non-empty");
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (!(cuts[i] < cuts[i + 1])) {
            throw ConfigInvalid("cutpoints must be strictly increasing");
        }
    }
    BinRule rule;
    rule.kind = Kind::kCutpoints;
    rule.cutpoints = std::move(cuts);
    return rule;
}

std::string BinRule::describe() const {
    switch (kind) {
        case Kind::kAutoSturges:
            return "auto";
        case Kind::kFixedK:
            return "k" + std::to_string(k);
        case Kind::kCutpoints:
            return describe_cutpoints(cutpoints);
    }
    return "auto";
}

const BinRule& CoarseningSpec::rule_for(int column) const {
    if (rules.empty()) throw ConfigInvalid("coarsening spec has no rules");
    if (rules.size() == 1) return rules.front();
    if (column < 0 || static_cast<size_t>(column) >= rules.size()) {
        throw ConfigInvalid("no coarsening rule for column " + std::to_string(column + 1));
    }
    return rules[static_cast<size_t>(column)];
}

std::string CoarseningSpec::describe() const {
    if (rules.size() == 1) return rules.front().describe();
    std::string out;
    for (size_t j = 0; j < rules.size(); ++j) {
        if (j) out += ";";
        out += rules[j].describe();
    }
    return out;
}

int sturges_bin_count(long n) {
    if (n < 1) throw DataError("bin count needs a positive sample size");
    if (n == 1) return 1;
    // ceil(log2(n)) == bit_width(n - 1) for n >= 2.
    return static_cast<int>(std::bit_width(static_cast<unsigned long>(n - 1))) + 1;
}

CoarsenedData coarsen(const Dataset& data, const CoarseningSpec& spec) {
    validate_dataset(data);
    const int n = data.n();
    const int p = data.p();

    CoarsenedData out;
    out.bins.resize(n, p);
    out.bin_edges.resize(static_cast<size_t>(p));
    out.bins_per_variable.resize(static_cast<size_t>(p));

    for (int j = 0; j < p; ++j) {
        const BinRule& rule = spec.rule_for(j);
        auto& edges = out.bin_edges[static_cast<size_t>(j)];

        if (rule.kind == BinRule::Kind::kCutpoints) {
            edges = rule.cutpoints;
            for (int i = 0; i < n; ++i) {
                const auto pos = std::upper_bound(edges.begin(), edges.end(), data.X(i, j));
                out.bins(i, j) = static_cast<int>(pos - edges.begin());
            }
            out.bins_per_variable[static_cast<size_t>(j)] = static_cast<int>(edges.size()) + 1;
            continue;
        }

        const int k = rule.kind == BinRule::Kind::kAutoSturges ? sturges_bin_count(n) : rule.k;
        const double lo = data.X.col(j).minCoeff();
        const double hi = data.X.col(j).maxCoeff();
        const double width = (hi - lo) / static_cast<double>(k);
        for (int i = 0; i < n; ++i) {
            out.bins(i, j) = bin_for_value(data.X(i, j), lo, width, k);
        }
        edges.resize(static_cast<size_t>(k) - 1);
        for (int b = 1; b < k; ++b) edges[static_cast<size_t>(b - 1)] = lo + width * b;
        out.bins_per_variable[static_cast<size_t>(j)] = k;
    }
    return out;
}

namespace {

std::map<std::vector<int>, Stratum> group_strata(const Dataset& data,
                                                 const CoarsenedData& coarsened) {
    std::map<std::vector<int>, Stratum> groups;
    for (int i = 0; i < data.n(); ++i) {
        auto key = coarsened.stratum_key(i);
        auto& stratum = groups[key];
        if (stratum.members.empty()) stratum.key = key;
        stratum.members.push_back(i);
        if (data.W[static_cast<size_t>(i)] == 1) {
            ++stratum.treated;
        } else {
            ++stratum.controls;
        }
    }
    for (auto& [key, stratum] : groups) {
        stratum.retained = stratum.treated > 0 && stratum.controls > 0;
    }
    return groups;
}

// Pooled per-covariate standard deviations used to standardize within-stratum
// distances.
Vector pooled_sds(const Matrix& X) {
    const Eigen::Index n = X.rows();
    Vector sds(X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double mean = X.col(j).mean();
        const double var = (X.col(j).array() - mean).square().sum() / static_cast<double>(n - 1);
        sds[j] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    return sds;
}

void pair_within_stratum(const Dataset& data, const Stratum& stratum, const Vector& sds,
                         MatchResult& result) {
    std::vector<int> treated, controls;
    for (int i : stratum.members) {
        (data.W[static_cast<size_t>(i)] == 1 ? treated : controls).push_back(i);
    }

    std::vector<std::tuple<double, int, int>> candidates;
    candidates.reserve(treated.size() * controls.size());
    for (int t : treated) {
        for (int c : controls) {
            const double d = ((data.X.row(t) - data.X.row(c)).transpose().cwiseQuotient(sds)).norm();
            candidates.emplace_back(d, t, c);
        }
    }
    std::sort(candidates.begin(), candidates.end());

    std::vector<bool> used(static_cast<size_t>(data.n()), false);
    for (const auto& [d, t, c] : candidates) {
        if (used[static_cast<size_t>(t)] || used[static_cast<size_t>(c)]) continue;
        used[static_cast<size_t>(t)] = true;
        used[static_cast<size_t>(c)] = true;
        result.pairs.emplace_back(t, c);
        result.weights[static_cast<size_t>(t)] = 1.0;
        result.weights[static_cast<size_t>(c)] = 1.0;
    }
}

}  // namespace

MatchResult cem_match(const Dataset& data, const CoarsenedData& coarsened, CemMode mode) {
    validate_dataset(data);
    if (coarsened.bins.rows() != data.n() || coarsened.bins.cols() != data.p()) {
        throw DimensionMismatch("coarsened data does not match the dataset shape");
    }

    MatchResult result;
    result.design_label = mode == CemMode::kWeights ? DesignLabel::kCemWeights
                                                    : DesignLabel::kCemOneToOne;
    result.weights.assign(static_cast<size_t>(data.n()), 0.0);
    result.m_treated = data.treated_count();
    result.m_control = data.n() - result.m_treated;

    auto groups = group_strata(data, coarsened);

    // Retained totals drive the control re-weighting.
    int retained_treated = 0;
    int retained_controls = 0;
    for (const auto& [key, stratum] : groups) {
        if (!stratum.retained) continue;
        retained_treated += stratum.treated;
        retained_controls += stratum.controls;
    }
    if (retained_treated == 0) {
        throw EmptyMatch("no stratum contains both treated and control units");
    }

    if (mode == CemMode::kWeights) {
        const double ratio = static_cast<double>(retained_controls) /
                             static_cast<double>(retained_treated);
        for (const auto& [key, stratum] : groups) {
            if (!stratum.retained) continue;
            const double control_weight = ratio * static_cast<double>(stratum.treated) /
                                          static_cast<double>(stratum.controls);
            for (int i : stratum.members) {
                result.weights[static_cast<size_t>(i)] =
                    data.W[static_cast<size_t>(i)] == 1 ? 1.0 : control_weight;
            }
        }
        result.matched_treated = retained_treated;
        result.matched_control = retained_controls;
    } else {
        const Vector sds = pooled_sds(data.X);
        for (const auto& [key, stratum] : groups) {
            if (!stratum.retained) continue;
            pair_within_stratum(data, stratum, sds, result);
        }
        result.matched_treated = static_cast<int>(result.pairs.size());
        result.matched_control = static_cast<int>(result.pairs.size());
    }

    for (auto& [key, stratum] : groups) {
        result.strata.push_back(std::move(stratum));
    }
    result.treated_share_delta =
        static_cast<double>(result.matched_treated) /
        static_cast<double>(result.matched_treated + result.matched_control);
    return result;
}

WithinBinImbalance within_bin_imbalance(const Dataset& data, const CoarsenedData& coarsened) {
    validate_dataset(data);
    auto groups = group_strata(data, coarsened);

    WithinBinImbalance out;
    out.pooled = Vector::Zero(data.p());
    int total_treated = 0;
    for (const auto& [key, stratum] : groups) {
        if (!stratum.retained) continue;
        Vector mean_t = Vector::Zero(data.p());
        Vector mean_c = Vector::Zero(data.p());
        for (int i : stratum.members) {
            if (data.W[static_cast<size_t>(i)] == 1) {
                mean_t += data.X.row(i).transpose();
            } else {
                mean_c += data.X.row(i).transpose();
            }
        }
        mean_t /= static_cast<double>(stratum.treated);
        mean_c /= static_cast<double>(stratum.controls);

        StratumImbalance imb;
        imb.key = key;
        imb.treated = stratum.treated;
        imb.controls = stratum.controls;
        imb.delta = (mean_t - mean_c).cwiseAbs();
        out.pooled += static_cast<double>(stratum.treated) * imb.delta;
        total_treated += stratum.treated;
        out.strata.push_back(std::move(imb));
    }
    if (total_treated == 0) {
        throw EmptyMatch("no stratum contains both treated and control units");
    }
    out.pooled /= static_cast<double>(total_treated);
    return out;
}

}  // namespace causalmatch
