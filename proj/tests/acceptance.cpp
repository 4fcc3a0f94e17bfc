// Release gate for the matching engine and simulation harness. Each numbered
// check prints one [PASS]/[FAIL] line; run without arguments for the full
// battery or with a single number (1-11) to run one check. The exit code is
// the number of failed checks.
//
// Tolerances and sizes are fixed here on purpose: the checks are desk-scale
// reproductions of known qualitative behavior (orderings, persistence,
// closed-form anchors), and loosening them should be a deliberate edit, not a
// runtime option.

#include "causalmatch/balance.hpp"
#include "causalmatch/cem.hpp"
#include "causalmatch/csv.hpp"
#include "causalmatch/estimators.hpp"
#include "causalmatch/numerics.hpp"
#include "causalmatch/parallel.hpp"
#include "causalmatch/psm.hpp"
#include "causalmatch/rng.hpp"
#include "causalmatch/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace {

using namespace causalmatch;

int g_workers = 4;

struct CheckResult {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* pattern, ...) {
    char buffer[512];
    va_list args;
    va_start(args, pattern);
    std::vsnprintf(buffer, sizeof buffer, pattern, args);
    va_end(args);
    return buffer;
}

Vector scaled_direction(std::initializer_list<double> raw, double target_norm) {
    Vector v(static_cast<Eigen::Index>(raw.size()));
    Eigen::Index i = 0;
    for (double value : raw) v[i++] = value;
    return v * (target_norm / v.norm());
}

// Fixed-coefficient reference scenario: unit-norm treatment direction,
// outcome direction of norm 1.2. With alpha0 = -0.9 any covariate scale in
// [0.3, 0.8] treats 29-31% of units, but the scale sets the strength of
// treatment selection, and the checks probe two regimes. kOverlapScale keeps
// the treated and control score distributions close enough that caliper
// matching rarely fails and almost every coarsened stratum is thin, the
// regime where matched designs differ by how much bias they leave.
// kSelectionScale separates the groups enough that coarsened matching shows
// its systematic imbalance floor and its sparse-strata variance penalty, the
// regime where the designs differ by what imbalance they tolerate.
constexpr double kOverlapScale = 0.35;
constexpr double kSelectionScale = 0.8;

ScenarioConfig reference_scenario(int p, int n, int reps, std::uint64_t seed, double scale) {
    ScenarioConfig sc;
    sc.scenario_id = "acceptance";
    sc.p = p;
    sc.n = n;
    sc.replications = reps;
    sc.seed = seed;
    sc.covariate_scale = scale;
    if (p == 5) {
        sc.alpha1 = scaled_direction({2, -1, 2, 1, -1}, 1.0);
        sc.beta2 = scaled_direction({1, 2, -1, 1, 2}, 1.2);
    } else if (p == 7) {
        sc.alpha1 = scaled_direction({2, -1, 2, 1, -1, 1, 2}, 1.0);
        sc.beta2 = scaled_direction({1, 2, -1, 1, 2, -1, 1}, 1.2);
    } else {
        throw ConfigInvalid("reference scenario is defined for p = 5 or 7");
    }
    return sc;
}

RunSettings settings(const std::vector<std::string>& designs,
                     const std::vector<std::string>& models) {
    RunSettings run;
    for (const auto& token : designs) run.designs.push_back(parse_design(token));
    run.models = models;
    return run;
}

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double sample_variance(const std::vector<double>& values) {
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return ss / (n - 1.0);
}

double mean_of(const std::vector<double>& values) {
    return std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
}

/// One-sided sign-test tail: P(X >= wins) for X ~ Binomial(trials, 1/2).
double sign_test_p(int wins, int trials) {
    double p = 0.0;
    double term = std::exp(-static_cast<double>(trials) * std::log(2.0));  // C(n,0)/2^n
    for (int k = 0; k <= trials; ++k) {
        if (k >= wins) p += term;
        term *= static_cast<double>(trials - k) / static_cast<double>(k + 1);
    }
    return std::min(p, 1.0);
}

// Paired one-sided sign test that "right" tends to exceed "left"; ties drop.
double paired_sign_p(const std::vector<double>& left, const std::vector<double>& right) {
    int wins = 0;
    int trials = 0;
    for (size_t i = 0; i < left.size(); ++i) {
        if (left[i] == right[i]) continue;
        ++trials;
        if (left[i] < right[i]) ++wins;
    }
    if (trials == 0) return 1.0;
    return sign_test_p(wins, trials);
}

struct SlopeFit {
    double slope = 0.0;
    double t = 0.0;
};

SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double xbar = mean_of(x);
    const double ybar = mean_of(y);
    double sxx = 0.0;
    double sxy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - xbar) * (x[i] - xbar);
        sxy += (x[i] - xbar) * (y[i] - ybar);
    }
    SlopeFit fit;
    fit.slope = sxy / sxx;
    double rss = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double resid = y[i] - ybar - fit.slope * (x[i] - xbar);
        rss += resid * resid;
    }
    const double se = std::sqrt(rss / (n - 2.0) / sxx);
    fit.t = fit.slope / se;
    return fit;
}

std::optional<AggregateMetrics> try_aggregate(const ScenarioRunResult& result, int design,
                                              int estimator) {
    try {
        return aggregate(result.records(design, estimator), result.true_value);
    } catch (const TooFewRecords&) {
        return std::nullopt;
    }
}

/// Cross-replication imbalance evaluated on consecutive windows of
/// replications, so that one long run yields many independent imbalance
/// readings. Windows keep only successful replications and are skipped when
/// more than half failed.
std::vector<double> batched_i5(const ScenarioRunResult& result, int design, int batch) {
    const auto& rows = result.outcomes[static_cast<size_t>(design)];
    std::vector<double> values;
    for (size_t start = 0; start + static_cast<size_t>(batch) <= rows.size();
         start += static_cast<size_t>(batch)) {
        std::vector<const DesignOutcome*> ok;
        for (size_t r = start; r < start + static_cast<size_t>(batch); ++r) {
            if (rows[r].ok) ok.push_back(&rows[r]);
        }
        if (static_cast<int>(ok.size()) < (batch + 1) / 2) continue;
        Matrix smds(static_cast<Eigen::Index>(ok.size()), ok.front()->smd.size());
        for (size_t i = 0; i < ok.size(); ++i) smds.row(static_cast<Eigen::Index>(i)) = ok[i]->smd;
        values.push_back(i5_cross_replication(smds).i5);
    }
    return values;
}

std::vector<double> batched_mean_i2(const ScenarioRunResult& result, int design, int batch) {
    const auto& rows = result.outcomes[static_cast<size_t>(design)];
    std::vector<double> values;
    for (size_t start = 0; start + static_cast<size_t>(batch) <= rows.size();
         start += static_cast<size_t>(batch)) {
        double sum = 0.0;
        int count = 0;
        for (size_t r = start; r < start + static_cast<size_t>(batch); ++r) {
            if (!rows[r].ok) continue;
            sum += rows[r].i2;
            ++count;
        }
        if (count < (batch + 1) / 2) continue;
        values.push_back(sum / count);
    }
    return values;
}

std::string read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) throw IoError("cannot read '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "causalmatch_acceptance" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// ---------------------------------------------------------------------------
// 1. Auto-coarsening anchor: 300 observations coarsen into exactly 10 bins.

CheckResult criterion1() {
    const int bins = sturges_bin_count(300);
    return {bins == 10, fmt("sturges_bin_count(300) = %d (want 10)", bins)};
}

// ---------------------------------------------------------------------------
// 2. Treated prevalence of the reference scenario stays near 30%.

CheckResult criterion2() {
    const int reps = 200;
    std::vector<double> means;
    for (double scale : {kOverlapScale, kSelectionScale}) {
        const ScenarioConfig sc = reference_scenario(5, 5000, reps, 101, scale);
        std::vector<double> fractions(reps, 0.0);
        parallel_for(reps, g_workers, [&](int r) {
            const Dataset data = generate_dataset(sc, r);
            const long treated = std::count(data.W.begin(), data.W.end(), 1);
            fractions[static_cast<size_t>(r)] = static_cast<double>(treated) / sc.n;
        });
        means.push_back(mean_of(fractions));
    }
    const bool ok = std::all_of(means.begin(), means.end(),
                                [](double m) { return m >= 0.28 && m <= 0.32; });
    return {ok,
            fmt("mean treated fraction %.4f at scale %.2f, %.4f at scale %.2f over %d "
                "replications (want [0.28, 0.32])",
                means[0], kOverlapScale, means[1], kSelectionScale, reps)};
}

// ---------------------------------------------------------------------------
// 3. Tight-caliper score matching makes the treatment coefficient consistent
//    for the true effect no matter which covariate subset the outcome model
//    adjusts for, and the residual bias shrinks as n doubles.

CheckResult criterion3() {
    const ScenarioConfig sc = reference_scenario(5, 5000, 1, 313, kOverlapScale);
    const std::vector<std::vector<int>> subsets = {
        {}, {0, 1, 2, 3, 4}, {0}, {2}, {4}, {0, 2}, {1, 3}, {1, 2, 4}};
    const int reps = 1000;

    const auto at_n = [&](int n) {
        return verify_proposition1(sc, subsets, n, reps, 0.05, 1000, g_workers);
    };
    const auto base = at_n(5000);
    const auto doubled = at_n(10000);

    double worst_bias = 0.0;
    bool all_within = true;
    bool all_shrink = true;
    for (size_t s = 0; s < subsets.size(); ++s) {
        const AggregateMetrics& m5 = base[s].second;
        const AggregateMetrics& m10 = doubled[s].second;
        worst_bias = std::max(worst_bias, std::abs(m5.bias));
        if (std::abs(m5.bias) >= 0.03 || std::abs(m10.bias) >= 0.03) all_within = false;
        const double se5 = m5.sd / std::sqrt(static_cast<double>(m5.replication_count));
        const double se10 = m10.sd / std::sqrt(static_cast<double>(m10.replication_count));
        const double slack = 2.0 * std::sqrt(se5 * se5 + se10 * se10);
        if (std::abs(m10.bias) > std::abs(m5.bias) + slack) all_shrink = false;
    }
    return {all_within && all_shrink,
            fmt("8 subsets, max |bias| %.4f at n=5000 (want < 0.03); doubling n %s", worst_bias,
                all_shrink ? "shrinks every bias within 2 combined SEs"
                           : "fails to shrink some bias")};
}

// ---------------------------------------------------------------------------
// Coefficient-pair sweep shared by checks 4 and 6: per-pair absolute bias of
// each (design, model) cell.

struct SweepBias {
    // abs_bias[design][model][pair]
    std::vector<std::vector<std::vector<double>>> abs_bias;
    int usable_pairs = 0;
};

SweepBias sweep_abs_bias(bool nonlinear, const std::vector<std::string>& designs,
                         const std::vector<std::string>& models, std::uint64_t seed) {
    const int pair_count = 50;
    const int reps = 200;
    const auto pairs = generate_coefficient_pairs(5, pair_count, 1.2, seed);
    const RunSettings run = settings(designs, models);

    SweepBias out;
    out.abs_bias.assign(designs.size(),
                        std::vector<std::vector<double>>(models.size()));

    for (int q = 0; q < pair_count; ++q) {
        ScenarioConfig sc = reference_scenario(5, 5000, reps, seed, kOverlapScale);
        sc.nonlinear_treatment = nonlinear;
        sc.nonlinear_outcome = nonlinear;
        sc.alpha1 = pairs[static_cast<size_t>(q)].alpha1;
        sc.beta2 = pairs[static_cast<size_t>(q)].beta2;
        const ScenarioRunResult result =
            run_replications(sc, run, g_workers, static_cast<long>(q) * reps);

        bool pair_ok = true;
        std::vector<std::vector<double>> cell(designs.size(), std::vector<double>(models.size()));
        for (size_t d = 0; d < designs.size() && pair_ok; ++d) {
            for (size_t e = 0; e < models.size(); ++e) {
                const auto metrics =
                    try_aggregate(result, static_cast<int>(d), static_cast<int>(e));
                if (!metrics) {
                    pair_ok = false;
                    break;
                }
                cell[d][e] = std::abs(metrics->bias);
            }
        }
        if (!pair_ok) continue;  // drop the pair from every design to keep tests paired
        ++out.usable_pairs;
        for (size_t d = 0; d < designs.size(); ++d) {
            for (size_t e = 0; e < models.size(); ++e) {
                out.abs_bias[d][e].push_back(cell[d][e]);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// 4. Without covariate adjustment, score matching leaves the least bias,
//    auto-coarsened matching more, and 3-bin coarsening the most.

CheckResult criterion4() {
    const SweepBias sweep =
        sweep_abs_bias(false, {"psm", "cem-auto", "cem-g3"}, {"mw"}, 31);
    if (sweep.usable_pairs < 40) {
        return {false, fmt("only %d of 50 coefficient pairs usable", sweep.usable_pairs)};
    }
    const auto& psm = sweep.abs_bias[0][0];
    const auto& cem_auto = sweep.abs_bias[1][0];
    const auto& cem_g3 = sweep.abs_bias[2][0];

    const double med_psm = median(psm);
    const double med_auto = median(cem_auto);
    const double med_g3 = median(cem_g3);
    const double p_low = paired_sign_p(psm, cem_auto);
    const double p_high = paired_sign_p(cem_auto, cem_g3);

    const bool pass = med_psm < med_auto && med_auto < med_g3 && p_low <= 0.01 && p_high <= 0.01;
    return {pass,
            fmt("median |bias| M(W): psm %.4f < cem-auto %.4f < cem-g3 %.4f; "
                "sign tests p %.2e, %.2e (want <= 0.01)",
                med_psm, med_auto, med_g3, p_low, p_high)};
}

// ---------------------------------------------------------------------------
// 5. Imbalance ordering at n = 5000, and its behavior as n grows: coarsened
//    matching's imbalance persists while score matching's shrinks.

CheckResult criterion5() {
    const std::vector<int> grid = {2500, 5000, 7500, 10000, 12500};
    const RunSettings run = settings({"psm", "cem-auto", "cem-g3"}, {"mw"});
    const int ratio_batch = 10;   // small windows let chance imbalance dominate
    const int slope_batch = 100;  // large windows expose the systematic floor

    std::vector<ScenarioRunResult> by_n;
    for (int n : grid) {
        const bool endpoint = n == grid.front() || n == grid.back();
        const int reps = endpoint ? 2500 : 1000;
        const ScenarioConfig sc =
            reference_scenario(5, n, reps, 7000 + static_cast<std::uint64_t>(n),
                               kOverlapScale);
        by_n.push_back(run_replications(sc, run, g_workers));
    }

    // Ordering at n = 5000 (grid index 1): psm < cem-auto < cem-g3.
    const double i5_psm = mean_of(batched_i5(by_n[1], 0, ratio_batch));
    const double i5_auto = mean_of(batched_i5(by_n[1], 1, ratio_batch));
    const double i5_g3 = mean_of(batched_i5(by_n[1], 2, ratio_batch));
    const bool ordered = i5_psm < i5_auto && i5_auto < i5_g3;

    // Persistence: coarsened-matching imbalance must not decline with n. The
    // fixed three-bin design carries this check: its strata, and the within-
    // stratum bias they admit, stay put as n grows. The auto rule re-bins as n
    // grows, which narrows its strata and shrinks its floor by construction.
    std::vector<double> i5_xs;
    std::vector<double> i5_ys;
    std::vector<double> i2_xs;
    std::vector<double> i2_ys;
    for (size_t k = 0; k < grid.size(); ++k) {
        for (double v : batched_i5(by_n[k], 2, slope_batch)) {
            i5_xs.push_back(grid[k]);
            i5_ys.push_back(v);
        }
        for (double v : batched_mean_i2(by_n[k], 2, slope_batch)) {
            i2_xs.push_back(grid[k]);
            i2_ys.push_back(v);
        }
    }
    const SlopeFit i5_fit = fit_slope(i5_xs, i5_ys);
    const SlopeFit i2_fit = fit_slope(i2_xs, i2_ys);
    const bool persistent = i5_fit.t >= -2.0 && i2_fit.t >= -2.0;

    // Score matching's imbalance halves from the smallest to the largest n.
    const double psm_small = mean_of(batched_i5(by_n.front(), 0, ratio_batch));
    const double psm_large = mean_of(batched_i5(by_n.back(), 0, ratio_batch));
    const bool halved = psm_small >= 2.0 * psm_large;

    return {ordered && persistent && halved,
            fmt("I5 at n=5000: psm %.4f < cem-auto %.4f < cem-g3 %.4f (%s); "
                "cem-g3 slope t: I5 %.2f, I2 %.2f (want >= -2); "
                "psm I5 %.4f @2500 vs %.4f @12500, ratio %.2f (want >= 2)",
                i5_psm, i5_auto, i5_g3, ordered ? "ordered" : "NOT ordered", i5_fit.t, i2_fit.t,
                psm_small, psm_large, psm_small / psm_large)};
}

// ---------------------------------------------------------------------------
// 6. Model dependence: under a nonlinear outcome the same misspecified linear
//    adjustment is least biased after score matching, more after coarsened
//    matching, and worst with no matching at all; under a linear outcome the
//    correctly specified adjustment is nearly unbiased for both designs.

CheckResult criterion6() {
    const SweepBias nonlinear =
        sweep_abs_bias(true, {"unmatched", "psm", "cem-auto"}, {"mwx"}, 57);
    if (nonlinear.usable_pairs < 40) {
        return {false, fmt("only %d of 50 nonlinear pairs usable", nonlinear.usable_pairs)};
    }
    const auto& raw = nonlinear.abs_bias[0][0];
    const auto& psm = nonlinear.abs_bias[1][0];
    const auto& cem_auto = nonlinear.abs_bias[2][0];
    const double med_raw = median(raw);
    const double med_psm = median(psm);
    const double med_auto = median(cem_auto);
    const double p_low = paired_sign_p(psm, cem_auto);
    const double p_high = paired_sign_p(cem_auto, raw);
    const bool misspecified_ok =
        med_psm < med_auto && med_auto < med_raw && p_low <= 0.01 && p_high <= 0.01;

    const SweepBias linear = sweep_abs_bias(false, {"psm", "cem-auto"}, {"mwx"}, 58);
    if (linear.usable_pairs < 40) {
        return {false, fmt("only %d of 50 linear pairs usable", linear.usable_pairs)};
    }
    const double med_psm_lin = median(linear.abs_bias[0][0]);
    const double med_auto_lin = median(linear.abs_bias[1][0]);
    const bool specified_ok = med_psm_lin < 0.05 && med_auto_lin < 0.05;

    return {misspecified_ok && specified_ok,
            fmt("misspecified median |bias|: psm %.4f < cem-auto %.4f < unmatched %.4f, "
                "p %.2e/%.2e; correct model: psm %.4f, cem-auto %.4f (want < 0.05)",
                med_psm, med_auto, med_raw, p_low, p_high, med_psm_lin, med_auto_lin)};
}

// ---------------------------------------------------------------------------
// 7. Seven covariates: auto-coarsening keeps almost no treated units and its
//    estimates turn unstable, while 3-bin coarsening under a misspecified
//    model loses to score matching on bias, variance, and MSE.

CheckResult criterion7() {
    const int reps = 200;

    // Correct model, linear outcome: retention and variance.
    ScenarioConfig linear = reference_scenario(7, 5000, reps, 401, kSelectionScale);
    const ScenarioRunResult correct =
        run_replications(linear, settings({"psm", "cem-auto"}, {"mwx"}), g_workers);

    std::vector<double> retention;
    for (size_t r = 0; r < correct.outcomes[1].size(); ++r) {
        const DesignOutcome& outcome = correct.outcomes[1][r];
        if (!outcome.ok) continue;
        const double treated = correct.treated_fraction[r] * linear.n;
        retention.push_back(outcome.matched_treated / treated);
    }
    const double mean_retention = retention.empty() ? 0.0 : mean_of(retention);
    const auto psm_metrics = try_aggregate(correct, 0, 0);
    const auto cem_metrics = try_aggregate(correct, 1, 0);
    if (!psm_metrics || !cem_metrics) {
        return {false, "too few successful replications to compare variances"};
    }
    const double var_psm = psm_metrics->sd * psm_metrics->sd;
    const double var_cem = cem_metrics->sd * cem_metrics->sd;
    const bool stress_ok = mean_retention < 0.20 && var_cem >= 2.0 * var_psm;

    // Misspecified model, nonlinear outcome: paired bootstrap over
    // replications for the bias/variance/MSE orderings.
    ScenarioConfig bent = reference_scenario(7, 5000, reps, 402, kSelectionScale);
    bent.nonlinear_treatment = true;
    bent.nonlinear_outcome = true;
    const ScenarioRunResult off =
        run_replications(bent, settings({"psm", "cem-g3"}, {"mwx"}), g_workers);

    std::vector<double> est_psm;
    std::vector<double> est_g3;
    for (size_t r = 0; r < off.outcomes[0].size(); ++r) {
        const auto& a = off.outcomes[0][r];
        const auto& b = off.outcomes[1][r];
        if (!a.ok || !b.ok || !a.estimates[0].ok || !b.estimates[0].ok) continue;
        est_psm.push_back(a.estimates[0].point_estimate);
        est_g3.push_back(b.estimates[0].point_estimate);
    }
    const int paired = static_cast<int>(est_psm.size());
    if (paired < reps / 2) {
        return {false, fmt("only %d paired replications for the bootstrap", paired)};
    }

    const int B = 500;
    int bias_wins = 0;
    int var_wins = 0;
    int mse_wins = 0;
    RngStream boot(20260814, stream_tag::kModelSubsets);
    for (int b = 0; b < B; ++b) {
        std::vector<double> sample_psm(static_cast<size_t>(paired));
        std::vector<double> sample_g3(static_cast<size_t>(paired));
        for (int i = 0; i < paired; ++i) {
            const int pick = boot.uniform_int(0, paired - 1);
            sample_psm[static_cast<size_t>(i)] = est_psm[static_cast<size_t>(pick)];
            sample_g3[static_cast<size_t>(i)] = est_g3[static_cast<size_t>(pick)];
        }
        const double bias_psm = std::abs(mean_of(sample_psm) - off.true_value);
        const double bias_g3 = std::abs(mean_of(sample_g3) - off.true_value);
        const double v_psm = sample_variance(sample_psm);
        const double v_g3 = sample_variance(sample_g3);
        if (bias_g3 > bias_psm) ++bias_wins;
        if (v_g3 > v_psm) ++var_wins;
        if (bias_g3 * bias_g3 + v_g3 > bias_psm * bias_psm + v_psm) ++mse_wins;
    }
    const double need = 0.8 * B;
    const bool ordering_ok = bias_wins >= need && var_wins >= need && mse_wins >= need;

    return {stress_ok && ordering_ok,
            fmt("cem-auto keeps %.1f%% of treated (want < 20%%), variance ratio %.2f "
                "(want >= 2); bootstrap g3>psm rates: bias %.2f, var %.2f, mse %.2f "
                "(want >= 0.80)",
                100.0 * mean_retention, var_cem / var_psm, bias_wins / 500.0, var_wins / 500.0,
                mse_wins / 500.0)};
}

// ---------------------------------------------------------------------------
// 8. Heterogeneous effects: with the correct interaction model the analytic
//    all-treated formula recovers the population effect on the treated, while
//    the unadjusted contrast stays biased for every design; the same model's
//    bias under curved data generation orders the designs by coarseness.

CheckResult criterion8() {
    ScenarioConfig sc;
    sc.scenario_id = "acceptance-hetero";
    sc.p = 2;
    sc.n = 5000;
    sc.alpha0 = -1.4;
    sc.alpha1 = scaled_direction({4, 3}, 2.0);
    sc.beta2 = scaled_direction({3, 4}, 1.2);
    sc.theta = Vector::Constant(1, 2.4);
    sc.interaction_subset = {0};
    sc.replications = 300;
    sc.seed = 801;

    RunSettings correct = settings({"psm", "cem-auto", "cem-g3"}, {"mw", "interaction"});
    correct.oracle_draws = 4000000;
    const ScenarioRunResult full = run_replications(sc, correct, g_workers);
    const double prevalence = mean_of(full.treated_fraction);

    double formula_psm = 0.0;
    double formula_auto = 0.0;
    std::vector<double> mw_bias(3, 0.0);
    double mw_min = 1e9;
    bool cells_ok = true;
    for (int d = 0; d < 3; ++d) {
        const auto mw = try_aggregate(full, d, 0);
        const auto f6 = try_aggregate(full, d, 2);  // models expand to M(W), F5, F6
        if (!mw || !f6) {
            cells_ok = false;
            continue;
        }
        mw_bias[static_cast<size_t>(d)] = mw->bias;
        mw_min = std::min(mw_min, std::abs(mw->bias));
        if (d == 0) formula_psm = std::abs(f6->bias);
        if (d == 1) formula_auto = std::abs(f6->bias);
    }
    const bool correct_ok =
        cells_ok && formula_psm < 0.02 && formula_auto < 0.02 && mw_min > 0.05;

    // Same coefficients with curvature in both generating models; the
    // interaction model is now misspecified and its bias tracks each
    // design's residual confounding. The low treated share gives every
    // treated unit a nearby control, so score matching is near-complete
    // and its remaining bias is small, while the coarsening gap persists.
    ScenarioConfig curved_sc = sc;
    curved_sc.scenario_id = "acceptance-hetero-curved";
    curved_sc.n = 12000;
    curved_sc.alpha0 = -3.8;
    curved_sc.nonlinear_treatment = true;
    curved_sc.nonlinear_outcome = true;
    curved_sc.replications = 600;
    curved_sc.seed = 802;

    RunSettings curved = settings({"psm", "cem-auto", "cem-g3"}, {"interaction"});
    curved.oracle_draws = 4000000;
    const ScenarioRunResult bent = run_replications(curved_sc, curved, g_workers);
    std::vector<double> curved_bias(3, 0.0);
    bool curved_cells_ok = true;
    for (int d = 0; d < 3; ++d) {
        const auto f6 = try_aggregate(bent, d, 1);  // models expand to F5, F6
        if (!f6) {
            curved_cells_ok = false;
            continue;
        }
        curved_bias[static_cast<size_t>(d)] = std::abs(f6->bias);
    }
    const bool curved_ok = curved_cells_ok && curved_bias[0] < curved_bias[1] &&
                           curved_bias[1] < curved_bias[2];

    return {correct_ok && curved_ok,
            fmt("treated %.3f; correct model F6 |bias|: psm %.4f, cem-auto %.4f (want < 0.02), "
                "M(W) bias psm %.4f, cem-auto %.4f, cem-g3 %.4f (want all |.| > 0.05); "
                "curved-model (treated %.3f) F6 |bias|: %.4f < %.4f < %.4f",
                prevalence, formula_psm, formula_auto, mw_bias[0], mw_bias[1], mw_bias[2],
                mean_of(bent.treated_fraction), curved_bias[0], curved_bias[1],
                curved_bias[2])};
}

// ---------------------------------------------------------------------------
// 9. Closed-form anchors for the balance metrics, stratum weights, and the
//    efficiency formula.

CheckResult criterion9() {
    std::vector<std::string> problems;

    Vector t(3), c(3);
    t << 1, 2, 3;
    c << 2, 3, 4;
    if (smd(t, c) != -1.0) problems.push_back("smd anchor");

    {
        Dataset data;
        data.X = Matrix(2, 2);
        data.X << 3, 4, 0, 0;
        data.W = {1, 0};
        data.Y = Vector::Zero(2);
        const double i1 =
            i1_average_pairwise_mahalanobis(data, {{0, 1}}, Matrix::Identity(2, 2));
        if (std::abs(i1 - 5.0) > 1e-12) problems.push_back("i1 anchor");
    }

    {
        // Two strata, each 1 treated : 2 controls, so every control weight is
        // (m_C / m_T) * (m_T^s / m_C^s) = (4/2) * (1/2) = 1.
        Dataset data;
        data.X = Matrix(6, 1);
        data.X << -1.0, -1.2, -0.8, 1.0, 1.2, 0.8;
        data.W = {1, 0, 0, 1, 0, 0};
        data.Y = Vector::Zero(6);
        const CoarseningSpec spec =
            CoarseningSpec::per_variable({BinRule::with_cutpoints({0.0})});
        const MatchResult match = cem_match(data, coarsen(data, spec), CemMode::kWeights);
        for (size_t i = 0; i < data.W.size(); ++i) {
            if (match.weights[i] != 1.0) problems.push_back("stratum weight anchor");
        }
    }

    {
        Matrix smds(2, 1);
        smds << 0.5, -0.5;
        if (i5_cross_replication(smds).i5 != 0.0) problems.push_back("i5 cancellation anchor");
    }

    {
        EfficiencyInputs inputs;
        inputs.sigma_eps2 = 1.0;
        inputs.alpha1 = scaled_direction({1, 0}, 1.0);
        inputs.beta2 = scaled_direction({1, 0}, 2.0);
        inputs.covariance_matched = Matrix::Identity(2, 2);
        inputs.n_psm_pairs = 100;
        inputs.m_cov_pairs = 100;
        if (std::abs(relative_efficiency(inputs) - 1.0) > 1e-12) {
            problems.push_back("efficiency anchor");
        }
    }

    if (problems.empty()) return {true, "smd, i1, stratum weight, i5, efficiency anchors exact"};
    std::string joined;
    for (const auto& p : problems) joined += (joined.empty() ? "" : ", ") + p;
    return {false, "failed: " + joined};
}

// ---------------------------------------------------------------------------
// 10. The efficiency formula predicts the observed variance ratio between
//     score matching and 1:1 coarsened matching when both yield similar pair
//     counts.

CheckResult criterion10() {
    ScenarioConfig sc;
    sc.scenario_id = "acceptance-efficiency";
    sc.p = 2;
    sc.n = 2000;
    sc.alpha1 = scaled_direction({1, 0}, 1.0);
    // Outcome direction at 60 degrees from the treatment direction.
    sc.beta2 = Vector(2);
    sc.beta2 << 0.6, 0.6 * std::sqrt(3.0);
    sc.seed = 1001;

    const int reps = 500;
    struct Rep {
        double est_psm = 0.0;
        double est_cem = 0.0;
        double psm_pairs = 0.0;
        double cem_pairs = 0.0;
        Matrix cov;
        bool ok = false;
    };
    std::vector<Rep> slots(reps);
    const CoarseningSpec auto_bins = CoarseningSpec::auto_sturges();
    parallel_for(reps, g_workers, [&](int r) {
        Rep& slot = slots[static_cast<size_t>(r)];
        try {
            const Dataset data = generate_dataset(sc, r);
            const ModelSpec mw = ModelSpec::unadjusted();

            // Match on the data-generating score itself; a fitted score's
            // exact balance conditions would absorb part of the orthogonal
            // covariate variability the prediction prices in.
            Vector true_logits(data.n());
            for (int i = 0; i < data.n(); ++i) {
                true_logits[i] = treatment_index(sc, data.X.row(i));
            }
            const MatchResult psm =
                psm_match(true_logits, data.W, caliper_width(true_logits));
            slot.est_psm = estimate(psm, data, mw).point_estimate;
            slot.psm_pairs = static_cast<double>(psm.pairs.size());

            const MatchResult cem =
                cem_match(data, coarsen(data, auto_bins), CemMode::kOneToOne);
            slot.est_cem = estimate(cem, data, mw).point_estimate;
            slot.cem_pairs = static_cast<double>(cem.pairs.size());

            std::vector<int> kept;
            for (size_t i = 0; i < psm.weights.size(); ++i) {
                if (psm.weights[i] > 0.0) kept.push_back(static_cast<int>(i));
            }
            Matrix matched_x(static_cast<Eigen::Index>(kept.size()), data.X.cols());
            for (size_t i = 0; i < kept.size(); ++i) {
                matched_x.row(static_cast<Eigen::Index>(i)) = data.X.row(kept[i]);
            }
            slot.cov = sample_covariance(matched_x);
            slot.ok = true;
        } catch (const Error&) {
            slot.ok = false;
        }
    });

    std::vector<double> est_psm;
    std::vector<double> est_cem;
    double psm_pairs = 0.0;
    double cem_pairs = 0.0;
    Matrix cov_sum = Matrix::Zero(2, 2);
    for (const Rep& slot : slots) {
        if (!slot.ok) continue;
        est_psm.push_back(slot.est_psm);
        est_cem.push_back(slot.est_cem);
        psm_pairs += slot.psm_pairs;
        cem_pairs += slot.cem_pairs;
        cov_sum += slot.cov;
    }
    const double ok_count = static_cast<double>(est_psm.size());
    if (ok_count < reps * 0.9) {
        return {false, fmt("only %.0f of %d replications matched", ok_count, reps)};
    }

    EfficiencyInputs inputs;
    inputs.sigma_eps2 = sc.error_sd * sc.error_sd;
    inputs.beta2 = sc.beta2;
    inputs.alpha1 = sc.alpha1;
    inputs.covariance_matched = cov_sum / ok_count;
    inputs.n_psm_pairs = std::lround(psm_pairs / ok_count);
    inputs.m_cov_pairs = std::lround(cem_pairs / ok_count);

    const double predicted = relative_efficiency(inputs);
    const double var_psm = sample_variance(est_psm);
    const double var_cem = sample_variance(est_cem);
    const double empirical = var_cem / var_psm;
    const double rel_error = std::abs(empirical - predicted) / predicted;
    return {rel_error <= 0.25,
            fmt("variance ratio cem-1to1/psm: empirical %.3f (%.2e / %.2e) vs predicted %.3f "
                "(rel. error %.1f%%, want <= 25%%; pairs %ld vs %ld)",
                empirical, var_cem, var_psm, predicted, 100.0 * rel_error, inputs.m_cov_pairs,
                inputs.n_psm_pairs)};
}

// ---------------------------------------------------------------------------
// 11. A fixed seed produces byte-identical output tables no matter how many
//     worker threads execute the replications.

CheckResult criterion11() {
    const auto root = scratch_dir("workers");
    const auto config_path = root / "scenario.cfg";
    {
        std::ofstream out(config_path);
        out << "scenario_id = worker-check\n"
               "p = 5\n"
               "n = 2000\n"
               "alpha0 = -0.9\n"
               "alpha1 = 0.6, -0.3, 0.6, 0.3, -0.3\n"
               "beta2 = 0.4, 0.7, -0.4, 0.4, 0.7\n"
               "covariate_scale = 0.8\n"
               "replications = 120\n"
               "seed = 99\n"
               "designs = unmatched, psm, cem-auto, cem-g3\n"
               "models = mw, mwx\n";
    }

    const std::vector<int> worker_counts = {1, 4, 8};
    std::vector<std::filesystem::path> dirs;
    for (int workers : worker_counts) {
        const auto out_dir = root / ("w" + std::to_string(workers));
        run_scenario(config_path.string(), out_dir.string(), workers);
        dirs.push_back(out_dir);
    }

    const std::vector<std::string> files = {"aggregate.csv", "balance.csv", "replications.csv",
                                            "balance_replications.csv"};
    for (const auto& name : files) {
        const std::string reference = read_bytes(dirs.front() / name);
        for (size_t k = 1; k < dirs.size(); ++k) {
            if (read_bytes(dirs[k] / name) != reference) {
                return {false, fmt("%s differs between 1 and %d workers", name.c_str(),
                                   worker_counts[k])};
            }
        }
    }
    return {true, "aggregate, balance, and replication tables byte-identical for 1/4/8 workers"};
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    if (argc > 1) {
        only = std::atoi(argv[1]);
        if (only < 1 || only > 11) {
            std::fprintf(stderr, "usage: %s [criterion 1-11]\n", argv[0]);
            return 2;
        }
    }
    g_workers = std::clamp(static_cast<int>(std::thread::hardware_concurrency()), 1, 8);

    using Check = CheckResult (*)();
    const std::vector<Check> checks = {criterion1, criterion2, criterion3, criterion4,
                                       criterion5, criterion6, criterion7, criterion8,
                                       criterion9, criterion10, criterion11};

    int failures = 0;
    for (size_t i = 0; i < checks.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (only != 0 && only != id) continue;
        CheckResult result;
        try {
            result = checks[i]();
        } catch (const std::exception& e) {
            result = {false, std::string("exception: ") + e.what()};
        }
        std::printf("[%s] criterion %d: %s\n", result.pass ? "PASS" : "FAIL", id,
                    result.detail.c_str());
        std::fflush(stdout);
        if (!result.pass) ++failures;
    }
    return failures;
}
