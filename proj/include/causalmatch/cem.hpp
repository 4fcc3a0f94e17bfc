#pragma once

#include "causalmatch/types.hpp"

#include <vector>

namespace causalmatch {

/// Auto-coarsening bin count: ceil(log2(n)) + 1, computed in integer
/// arithmetic so it cannot wobble at powers of two.
int sturges_bin_count(long n);

/// Covariates reduced to integer bin indices.
struct CoarsenedData {
    Eigen::MatrixXi bins;                        // n x p bin index per unit
    std::vector<std::vector<double>> bin_edges;  // interior cutpoints per variable
    std::vector<int> bins_per_variable;

    std::vector<int> stratum_key(int unit) const {
        std::vector<int> key(static_cast<size_t>(bins.cols()));
        for (Eigen::Index j = 0; j < bins.cols(); ++j) {
            key[static_cast<size_t>(j)] = bins(unit, j);
        }
        return key;
    }
};

/// Applies the coarsening spec to every covariate. AutoSturges and FixedK use
/// equal-width bins over the pooled observed range (rightmost bin closed);
/// Cutpoints assigns bin = number of cutpoints at or below the value. A
/// constant column lands entirely in bin zero.
CoarsenedData coarsen(const Dataset& data, const CoarseningSpec& spec);

enum class CemMode { kWeights, kOneToOne };

/// Groups units into strata by their coarsened signature and keeps strata
/// containing both arms. kWeights assigns treated weight 1 and control weight
/// (m_C/m_T) * (m_T^s / m_C^s) computed from retained totals; kOneToOne
/// additionally forms within-stratum 1:1 pairs, greedily taking the closest
/// pair first by Euclidean distance on covariates standardized by their
/// pooled standard deviation (ties by lower treated then control index).
/// Throws EmptyMatch when no stratum is retained.
MatchResult cem_match(const Dataset& data, const CoarsenedData& coarsened, CemMode mode);

struct StratumImbalance {
    std::vector<int> key;
    int treated = 0;
    int controls = 0;
    Vector delta;  // per-covariate |treated mean - control mean| inside the bin
};

struct WithinBinImbalance {
    std::vector<StratumImbalance> strata;  // retained strata only
    Vector pooled;                         // treated-count-weighted average of delta
};

/// Residual covariate disparity inside retained strata.
WithinBinImbalance within_bin_imbalance(const Dataset& data, const CoarsenedData& coarsened);

}  // namespace causalmatch
