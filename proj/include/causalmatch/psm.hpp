#pragma once

#include "causalmatch/datagen.hpp"
#include "causalmatch/numerics.hpp"
#include "causalmatch/types.hpp"

#include <string>
#include <vector>

namespace causalmatch {

/// One term of a propensity-model formula (intercept is implicit).
struct FormulaTerm {
    enum class Kind { kLinear, kSquare, kInteraction };
    Kind kind = Kind::kLinear;
    int i = 0;
    int j = 0;  // second column for interactions
};

struct FormulaSpec {
    std::vector<FormulaTerm> terms;

    static FormulaSpec intercept_only() { return FormulaSpec{}; }
    static FormulaSpec linear(int p);

    /// Formula matching the scenario's true treatment model: linear terms,
    /// plus squares and adjacent-pair interactions when the scenario uses the
    /// nonlinear treatment index.
    static FormulaSpec for_scenario(const ScenarioConfig& config);

    std::string describe() const;
};

/// Design matrix with leading intercept column for the given formula.
DesignMatrix build_formula_design(const Matrix& X, const FormulaSpec& formula);

struct PropensityResult {
    Vector scores;  // fitted probabilities, clamped away from 0 and 1
    Vector logits;  // linear predictor
    FitResult model;
    std::string formula;
};

/// Fits the propensity model by logistic regression on the full sample.
PropensityResult estimate_propensity(const Dataset& data, const FormulaSpec& formula);

/// multiplier * standard deviation of the propensity logits.
double caliper_width(const Vector& logits, double multiplier = 0.2);

/// Greedy 1:1 nearest-neighbor matching on the logit scale without
/// replacement. Treated units are processed in descending logit order (ties
/// by lower unit index); each takes its nearest available control (distance
/// ties by lower control index) provided the distance is within the caliper,
/// otherwise it is pruned. Throws EmptyMatch when no pair forms.
MatchResult psm_match(const Vector& logits, const std::vector<int>& W, double caliper);

}  // namespace causalmatch
