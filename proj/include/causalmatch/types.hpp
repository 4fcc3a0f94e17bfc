#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace causalmatch {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// ----------------------------- error taxonomy -------------------------------
// Three bases so the CLI can map failures onto exit codes
// (2 = config, 3 = data, 4 = numerical).

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};
struct DataError : Error {
    using Error::Error;
};
struct NumericError : Error {
    using Error::Error;
};

struct ConfigInvalid : ConfigError {
    using ConfigError::ConfigError;
};

struct DimensionMismatch : DataError {
    using DataError::DataError;
};
struct TooFewRows : DataError {
    using DataError::DataError;
};
struct TooFewUnits : DataError {
    using DataError::DataError;
};
struct TooFewModels : DataError {
    using DataError::DataError;
};
struct TooFewRecords : DataError {
    using DataError::DataError;
};
struct NoVariation : DataError {
    using DataError::DataError;
};
struct ZeroVector : DataError {
    using DataError::DataError;
};
struct DegenerateSample : DataError {
    using DataError::DataError;
};
struct EmptyMatch : DataError {
    using DataError::DataError;
};
struct NoTreatedUnits : DataError {
    using DataError::DataError;
};
struct Unsatisfiable : DataError {
    using DataError::DataError;
};
struct SchemaError : DataError {
    using DataError::DataError;
};
struct IoError : DataError {
    using DataError::DataError;
};
struct MissingRun : DataError {
    using DataError::DataError;
};

struct RankDeficient : NumericError {
    using NumericError::NumericError;
};
struct Separation : NumericError {
    using NumericError::NumericError;
};
struct SingularCovariance : NumericError {
    using NumericError::NumericError;
};
struct ZeroVariance : NumericError {
    using NumericError::NumericError;
};

// --------------------------------- dataset ----------------------------------

/// Rectangular sample: covariates X (n x p), binary treatment W, outcome Y.
struct Dataset {
    Matrix X;
    std::vector<int> W;
    Vector Y;

    int n() const { return static_cast<int>(X.rows()); }
    int p() const { return static_cast<int>(X.cols()); }

    int treated_count() const {
        int c = 0;
        for (int w : W) c += w;
        return c;
    }
};

// Throws DimensionMismatch / DataError on shape conflicts or non-finite
// entries, SchemaError when W has values other than 0 and 1. Constant W is
// allowed here: single-arm subsets are legitimate inputs for coarsening and
// histogram work, and the routines that need both arms enforce that locally.
void validate_dataset(const Dataset& data);

// ------------------------------ coarsening spec ------------------------------

/// Per-variable binning rule.
struct BinRule {
    enum class Kind { kAutoSturges, kFixedK, kCutpoints };

    Kind kind = Kind::kAutoSturges;
    int k = 0;                       // FixedK only, k >= 2
    std::vector<double> cutpoints;   // Cutpoints only, strictly increasing

    static BinRule auto_sturges() { return BinRule{}; }
    static BinRule fixed_k(int k);
    static BinRule with_cutpoints(std::vector<double> cuts);

    std::string describe() const;
};

/// Binning rules for all variables: either one rule applied to every column
/// or an explicit per-column list.
struct CoarseningSpec {
    std::vector<BinRule> rules;

    static CoarseningSpec auto_sturges() { return CoarseningSpec{{BinRule::auto_sturges()}}; }
    static CoarseningSpec fixed_k(int k) { return CoarseningSpec{{BinRule::fixed_k(k)}}; }
    static CoarseningSpec per_variable(std::vector<BinRule> rules) { return CoarseningSpec{std::move(rules)}; }

    const BinRule& rule_for(int column) const;
    std::string describe() const;
};

// ------------------------------- match result -------------------------------

enum class DesignLabel { kPsm, kCemWeights, kCemOneToOne, kUnmatched };

std::string to_string(DesignLabel label);

/// One coarsened stratum: the bin-index key and the member units.
struct Stratum {
    std::vector<int> key;
    std::vector<int> members;
    int treated = 0;
    int controls = 0;
    bool retained = false;  // has at least one unit from each arm
};

/// Output of any matching design. weights[i] == 0 means unit i was pruned.
struct MatchResult {
    std::vector<std::pair<int, int>> pairs;  // (treated_index, control_index)
    std::vector<Stratum> strata;             // empty for PSM
    std::vector<double> weights;
    DesignLabel design_label = DesignLabel::kPsm;
    int m_treated = 0;   // source-data counts
    int m_control = 0;
    int matched_treated = 0;
    int matched_control = 0;
    double treated_share_delta = 0.0;  // treated proportion among matched units

    bool empty() const { return matched_treated == 0 && matched_control == 0; }
};

/// Identity design: every unit kept with weight 1, no pairs or strata.
MatchResult unmatched_design(const Dataset& data);

}  // namespace causalmatch
