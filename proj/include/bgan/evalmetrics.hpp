#pragma once

#include <optional>
#include <string>

#include "bgan/matrix.hpp"
#include "bgan/posterior.hpp"

namespace bgan {

/// Unbiased squared-MMD estimator with a Gaussian kernel; the bandwidth
/// is the median pairwise distance over the pooled sample. The estimate
/// can be slightly negative.
double mmd(const Matrix& samples_a, const Matrix& samples_b);

/// Smallest draw whose cumulative weight reaches q under ascending sort;
/// weights must be normalized.
double weighted_quantile(std::span<const double> draws, std::span<const double> weights,
                         double q);

struct ParamSummary {
    double mean = 0.0;
    double bias = 0.0;      // |weighted mean - theta0|
    double ci_low = 0.0;    // weighted 2.5% quantile
    double ci_high = 0.0;   // weighted 97.5% quantile
    double ci_width = 0.0;
    int coverage = 0;       // theta0 inside the interval
};

struct EvalReport {
    std::string method;
    std::uint64_t seed = 0;
    double seconds = 0.0;
    std::vector<ParamSummary> params;
    std::optional<double> mmd_value;

    std::string to_json() const;
};

/// Per-parameter bias / credible interval / coverage against theta0.
/// fold_abs marks coordinates evaluated on absolute values (sign-
/// symmetric posteriors).
EvalReport posterior_summary(const WeightedPosterior& wp, std::span<const double> theta0,
                             const std::vector<bool>& fold_abs = {});

struct OracleOptions {
    std::size_t chains = 4;
    std::size_t iterations = 100000;  // per chain, half discarded as burn-in
    double rhat_gate = 1.05;
};

/// Posterior draws for the tractable toy model by random-walk Metropolis
/// with reflection at the prior box and sign-flip moves across the
/// symmetric modes; fails loudly when split-Rhat exceeds the gate.
Matrix true_posterior_toy(std::span<const double> x0, std::size_t draws, std::uint64_t seed,
                          const OracleOptions& opts = {});

}  // namespace bgan
