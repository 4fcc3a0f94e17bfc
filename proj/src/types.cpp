#include "causalmatch/types.hpp"

namespace causalmatch {

void validate_dataset(const Dataset& data) {
    if (data.X.rows() != data.Y.size() ||
        static_cast<size_t>(data.X.rows()) != data.W.size()) {
        throw DimensionMismatch("X, W, and Y row counts differ");
    }
    if (data.X.cols() < 1) throw DataError("dataset has no covariates");
    if (!data.X.allFinite() || !data.Y.allFinite()) {
        throw DataError("dataset contains non-finite values");
    }
    for (int w : data.W) {
        if (w != 0 && w != 1) throw SchemaError("treatment indicator must be 0 or 1");
    }
}

std::string to_string(DesignLabel label) {
    switch (label) {
        case DesignLabel::kPsm:
            return "psm";
        case DesignLabel::kCemWeights:
            return "cem";
        case DesignLabel::kCemOneToOne:
            return "cem-1to1";
        case DesignLabel::kUnmatched:
            return "unmatched";
    }
    return "unknown";
}

MatchResult unmatched_design(const Dataset& data) {
    validate_dataset(data);
    MatchResult result;
    result.design_label = DesignLabel::kUnmatched;
    result.weights.assign(static_cast<size_t>(data.n()), 1.0);
    result.m_treated = data.treated_count();
    result.m_control = data.n() - result.m_treated;
    result.matched_treated = result.m_treated;
    result.matched_control = result.m_control;
    result.treated_share_delta =
        data.n() > 0 ? static_cast<double>(result.m_treated) / static_cast<double>(data.n()) : 0.0;
    return result;
}

}  // namespace causalmatch
