#pragma once

#include <functional>

#include "bgan/gan.hpp"
#include "bgan/posterior.hpp"
#include "bgan/priors.hpp"

namespace bgan {

/// Gaussian product-kernel density with per-dimension Silverman
/// bandwidths h_i = sd_i * (4 / ((d+2) M))^(1/(d+4)), floored at 1e-6.
struct KdeModel {
    Matrix support;    // [M x d]
    Vector bandwidth;  // per dimension

    double log_density(std::span<const double> theta) const;
    double density(std::span<const double> theta) const;
};

KdeModel kde_fit(const Matrix& samples);

using LogDensityFn = std::function<double(std::span<const double>)>;

/// Self-normalized importance weights pi(theta)/q(theta) for a uniform
/// box prior: off-support draws get 0, on-support draws get exp(-log q)
/// (the constant prior density cancels in the normalization, so scaling
/// it has no effect, bit for bit). Weights are clipped at their 99.9th
/// percentile before normalizing.
Vector weights_vs_density(const UniformBoxPrior& prior, const LogDensityFn& proposal_log_density,
                          const Matrix& draws);

Vector weights_kde(const UniformBoxPrior& prior, const KdeModel& kde, const Matrix& draws);

struct ClassifierConfig {
    std::vector<std::size_t> hidden{64, 64};
    double lr = 1e-3;
    std::size_t epochs = 60;
    std::size_t batch_size = 512;
    std::uint64_t seed = 1;
};

/// Density-ratio weights via the classifier trick: a logistic-output MLP
/// is trained to separate prior draws (label 1) from proposal draws
/// (label 0); the weight of each evaluation draw is the odds ratio
/// D/(1-D) with D clamped to [1e-6, 1-1e-6]. Returns normalized weights.
Vector weights_classifier(const Matrix& prior_draws, const Matrix& proposal_draws,
                          const Matrix& eval_draws, const ClassifierConfig& cfg = {});

enum class WeightMethod { Auto, Kde, Classifier };
const char* weight_method_name(WeightMethod m);

/// Weighted draws against an empirical proposal sample: KDE route for
/// low-dimensional parameters (d <= 5 under Auto), classifier otherwise.
/// Out-of-box draws are zero-weighted for both routes.
WeightedPosterior weighted_draws(const UniformBoxPrior& prior, Matrix draws,
                                 const Matrix& proposal_thetas, WeightMethod method,
                                 std::uint64_t seed, std::size_t support_cap = 10000);

struct TwoStepConfig {
    TrainConfig pilot;
    std::size_t pilot_rows = 100000;
    TrainConfig refine;
    std::size_t table2_rows = 50000;
    std::size_t draws = 1000;
    WeightMethod weight_method = WeightMethod::Auto;
    std::size_t rounds = 1;
    std::uint64_t seed = 1;
    int workers = 0;
    std::size_t kde_support_cap = 10000;
};

struct TwoStepResult {
    GeneratorArtifact pilot;
    GeneratorArtifact refined;
    ReferenceTable proposal_table;  // the final-round table (drawn under the proposal)
    WeightedPosterior posterior;
};

/// Pilot run under the prior, proposal table from the pilot generator at
/// x0, retrained generator, importance-reweighted draws.
TwoStepResult run_two_step(const SimulatorModel& sim, std::span<const double> x0,
                           const TwoStepConfig& cfg);

/// Same, starting from an already-trained pilot.
TwoStepResult refine_from_pilot(const SimulatorModel& sim, std::span<const double> x0,
                                const GeneratorArtifact& pilot, const TwoStepConfig& cfg);

/// Parameter sampler that filters fresh noise through a trained
/// generator conditioned on x0; used to build proposal tables.
ParamSampler proposal_from_artifact(const GeneratorArtifact& artifact, Vector x0);

/// Deterministic sub-seed derivation for pipeline stages.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag);

}  // namespace bgan
