#pragma once

#include "bgan/refine.hpp"

namespace bgan {

/// Variational refinement: the critic trains globally on the proposal
/// table exactly as in train_bgan (shared code path); the generator
/// trains locally, every conditioning row replaced by the observed x0.
/// The generator starts from the given artifact, the critic from a
/// fresh initialization.
GeneratorArtifact train_avb(const ReferenceTable& proposal_table, std::span<const double> x0,
                            const GeneratorArtifact& init, const TrainConfig& cfg);

struct AvbConfig {
    TrainConfig train;
    std::size_t table_rows = 50000;
    std::size_t draws = 1000;
    WeightMethod weight_method = WeightMethod::Auto;
    std::uint64_t seed = 1;
    int workers = 0;
    std::size_t kde_support_cap = 10000;
};

struct AvbResult {
    GeneratorArtifact artifact;
    ReferenceTable proposal_table;
    WeightedPosterior posterior;
};

/// Full variational stage: proposal table drawn from the init generator
/// at x0, train_avb, then reweighted draws against that proposal.
AvbResult run_avb(const SimulatorModel& sim, std::span<const double> x0,
                  const GeneratorArtifact& init, const AvbConfig& cfg);

/// Draws from a trained variational generator at x0, importance-
/// reweighted against the proposal sample exactly as in the two-step
/// refinement (equal weights when the proposal matches the prior).
WeightedPosterior avb_posterior(const GeneratorArtifact& artifact, std::span<const double> x0,
                                const UniformBoxPrior& prior, const Matrix& proposal_thetas,
                                WeightMethod method, std::size_t draws, std::uint64_t seed,
                                std::size_t support_cap = 10000);

}  // namespace bgan
