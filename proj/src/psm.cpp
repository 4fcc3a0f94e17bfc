#include "causalmatch/psm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

namespace causalmatch {

FormulaSpec FormulaSpec::linear(int p) {
    FormulaSpec spec;
    for (int j = 0; j < p; ++j) {
        spec.terms.push_back({FormulaTerm::Kind::kLinear, j, 0});
    }
    return spec;
}

FormulaSpec FormulaSpec::for_scenario(const ScenarioConfig& config) {
    FormulaSpec spec = linear(config.p);
    if (config.nonlinear_treatment) {
        for (int j = 0; j < config.p; ++j) {
            spec.terms.push_back({FormulaTerm::Kind::kSquare, j, 0});
        }
        for (int j = 0; j + 1 < config.p; ++j) {
            spec.terms.push_back({FormulaTerm::Kind::kInteraction, j, j + 1});
        }
    }
    return spec;
}

std::string FormulaSpec::describe() const {
    std::string out = "1";
    for (const auto& term : terms) {
        switch (term.kind) {
            case FormulaTerm::Kind::kLinear:
                out += " + x" + std::to_string(term.i + 1);
                break;
            case FormulaTerm::Kind::kSquare:
                out += " + x" + std::to_string(term.i + 1) + "^2";
                break;
            case FormulaTerm::Kind::kInteraction:
                out += " + x" + std::to_string(term.i + 1) + "*x" + std::to_string(term.j + 1);
                break;
        }
    }
    return out;
}

DesignMatrix build_formula_design(const Matrix& X, const FormulaSpec& formula) {
    const Eigen::Index n = X.rows();
    Matrix values(n, static_cast<Eigen::Index>(formula.terms.size()) + 1);
    std::vector<std::string> labels;
    labels.reserve(formula.terms.size() + 1);

    values.col(0).setOnes();
    labels.push_back("(intercept)");

    Eigen::Index col = 1;
    for (const auto& term : formula.terms) {
        if (term.i < 0 || term.i >= X.cols() || term.j < 0 || term.j >= X.cols()) {
            throw DimensionMismatch("formula term references a missing covariate column");
        }
        switch (term.kind) {
            case FormulaTerm::Kind::kLinear:
                values.col(col) = X.col(term.i);
                labels.push_back("x" + std::to_string(term.i + 1));
                break;
            case FormulaTerm::Kind::kSquare:
                values.col(col) = X.col(term.i).cwiseProduct(X.col(term.i));
                labels.push_back("x" + std::to_string(term.i + 1) + "^2");
                break;
            case FormulaTerm::Kind::kInteraction:
                values.col(col) = X.col(term.i).cwiseProduct(X.col(term.j));
                labels.push_back("x" + std::to_string(term.i + 1) + "*x" +
                                 std::to_string(term.j + 1));
                break;
        }
        ++col;
    }
    return make_design(std::move(values), std::move(labels));
}

PropensityResult estimate_propensity(const Dataset& data, const FormulaSpec& formula) {
    validate_dataset(data);
    const DesignMatrix design = build_formula_design(data.X, formula);
    PropensityResult result;
    result.model = fit_logistic(design, data.W);
    result.logits = design.values * result.model.coefficients;
    result.scores.resize(result.logits.size());
    for (Eigen::Index i = 0; i < result.logits.size(); ++i) {
        result.scores[i] = expit(result.logits[i]);
    }
    result.formula = formula.describe();
    return result;
}

double caliper_width(const Vector& logits, double multiplier) {
    if (logits.size() < 2) throw TooFewUnits("caliper needs at least two logits");
    if (!(multiplier > 0.0)) throw ConfigInvalid("caliper multiplier must be positive");
    const double mean = logits.mean();
    const double var = (logits.array() - mean).square().sum() /
                       static_cast<double>(logits.size() - 1);
    return multiplier * std::sqrt(var);
}

MatchResult psm_match(const Vector& logits, const std::vector<int>& W, double caliper) {
    const int n = static_cast<int>(logits.size());
    if (static_cast<size_t>(n) != W.size()) {
        throw DimensionMismatch("logits and treatment lengths differ");
    }
    if (!(caliper >= 0.0)) throw ConfigInvalid("caliper must be nonnegative");

    MatchResult result;
    result.design_label = DesignLabel::kPsm;
    result.weights.assign(static_cast<size_t>(n), 0.0);

    std::vector<int> treated;
    std::set<std::pair<double, int>> controls;  // (logit, unit index)
    for (int i = 0; i < n; ++i) {
        if (W[static_cast<size_t>(i)] == 1) {
            treated.push_back(i);
            ++result.m_treated;
        } else {
            controls.insert({logits[i], i});
            ++result.m_control;
        }
    }

    std::sort(treated.begin(), treated.end(), [&](int a, int b) {
        if (logits[a] != logits[b]) return logits[a] > logits[b];
        return a < b;
    });

    constexpr int kLowestIndex = std::numeric_limits<int>::min();
    for (int t : treated) {
        if (controls.empty()) break;
        const double target = logits[t];

        auto right = controls.lower_bound({target, kLowestIndex});
        auto best = controls.end();
        double best_dist = std::numeric_limits<double>::infinity();
        if (right != controls.end()) {
            best = right;
            best_dist = right->first - target;
        }
        if (right != controls.begin()) {
            auto left = std::prev(right);
            const double left_dist = target - left->first;
            // All controls sharing the left logit tie on distance; the set is
            // ordered by index within a logit, so take the first of that run.
            auto left_first = controls.lower_bound({left->first, kLowestIndex});
            if (left_dist < best_dist ||
                (left_dist == best_dist && left_first->second < best->second)) {
                best = left_first;
                best_dist = left_dist;
            }
        }
        if (best == controls.end() || best_dist > caliper) continue;

        result.pairs.emplace_back(t, best->second);
        result.weights[static_cast<size_t>(t)] = 1.0;
        result.weights[static_cast<size_t>(best->second)] = 1.0;
        controls.erase(best);
    }

    if (result.pairs.empty()) {
        throw EmptyMatch("no treated unit found a control within the caliper");
    }
    result.matched_treated = static_cast<int>(result.pairs.size());
    result.matched_control = static_cast<int>(result.pairs.size());
    result.treated_share_delta =
        static_cast<double>(result.matched_treated) /
        static_cast<double>(result.matched_treated + result.matched_control);
    return result;
}

}  // namespace causalmatch
