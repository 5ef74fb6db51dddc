#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bgan/mlp.hpp"
#include "bgan/reftable.hpp"

namespace bgan {

struct TrainConfig {
    std::size_t batch_size = 6400;
    std::size_t epochs = 1000;
    // Generator updates per epoch; 0 means ceil(T / batch_size).
    std::size_t steps_per_epoch = 0;
    std::size_t n_critic = 15;
    double lambda = 5.0;
    double lr_gen = 1e-4;
    double lr_critic = 1e-4;
    std::size_t d_z = 0;  // 0 means d_theta
    std::vector<std::size_t> gen_hidden{128, 128, 128};
    std::vector<std::size_t> critic_hidden{128, 128, 128};
    Activation activation = Activation::Relu;
    double leaky_slope = 0.1;
    double dropout = 0.1;
    InitScheme init = InitScheme::HeUniform;
    std::uint64_t seed = 1;
    bool standardize = false;

    void validate() const;
    std::size_t noise_dim(std::size_t d_theta) const { return d_z == 0 ? d_theta : d_z; }
    std::string describe() const;
};

struct EpochLoss {
    double critic = 0.0;   // mean f(fake) - mean f(real), the minimized part
    double gen = 0.0;      // -mean f(fake)
    double penalty = 0.0;  // gradient penalty term
};

/// Trained conditional sampler plus everything needed to reuse it:
/// the (optional) standardizer and provenance of config and table.
struct GeneratorArtifact {
    Mlp generator;
    std::optional<Standardizer> standardizer;
    std::size_t d_theta = 0, d_x = 0, d_z = 0;
    std::string input = "raw";  // conditioning input: raw X or summary stats
    std::string config_hash, table_hash;
    std::uint64_t seed = 0;
    std::vector<EpochLoss> losses;

    void save(const std::string& path) const;
    static GeneratorArtifact load(const std::string& path);
    void save_losses_csv(const std::string& path) const;
};

/// Shared Wasserstein-GP training machinery. bgan runs both step kinds
/// on table batches; the variational refinement reuses critic_step
/// unchanged and conditions generator_step on the observed data only.
class GanTrainer {
public:
    /// When cfg.standardize is set, fits a standardizer on the table
    /// unless a fixed one is supplied (the variational stage inherits
    /// the pilot's so generator spaces stay aligned).
    GanTrainer(const ReferenceTable& table, const TrainConfig& cfg,
               const Standardizer* fixed_standardizer = nullptr);

    /// One critic update on a fresh batch: two-sample mean difference
    /// plus the one-sided gradient penalty on interpolants
    /// theta_bar = eps*theta + (1-eps)*g(z,x), eps ~ U[0,1] per row.
    /// Returns (critic objective, penalty).
    std::pair<double, double> critic_step();

    /// One generator update minimizing -mean f(x, g(z,x)) on a fresh batch.
    double generator_step();

    /// Generator update with every conditioning row replaced by x_cond
    /// (given unstandardized; the trainer applies its own scaling).
    double generator_step_at(std::span<const double> x_cond);

    /// Runs the full epoch loop and returns per-epoch losses.
    std::vector<EpochLoss> run();

    Mlp& generator() { return gen_; }
    Mlp& critic() { return critic_; }
    const Mlp& generator() const { return gen_; }
    const Mlp& critic() const { return critic_; }
    void set_generator(const Mlp& g);
    void set_critic(const Mlp& c);
    const Standardizer* standardizer() const {
        return standardize_ ? &standardizer_ : nullptr;
    }
    RngStream& rng() { return rng_; }
    std::size_t steps_per_epoch() const;

    GeneratorArtifact make_artifact(std::vector<EpochLoss> losses,
                                    const std::string& table_hash = "") const;

private:
    Batch fresh_batch();
    std::pair<double, double> critic_step_on(const Batch& batch);
    double generator_step_on(const Matrix& x_cond, const Matrix& z);

    ReferenceTable table_;  // standardized copy when requested
    TrainConfig cfg_;
    bool standardize_ = false;
    Standardizer standardizer_;
    Mlp gen_, critic_;
    AdamState gen_state_, critic_state_;
    RngStream rng_;
    std::size_t epoch_ = 0, step_ = 0;  // diagnostics for failure messages
};

/// Wasserstein conditional GAN on the reference table.
GeneratorArtifact train_bgan(const ReferenceTable& table, const TrainConfig& cfg);

/// Jensen-Shannon diagnostic variant: alternating single discriminator
/// and generator steps, logistic discriminator, no penalty.
GeneratorArtifact train_bgan_js(const ReferenceTable& table, const TrainConfig& cfg);

/// M posterior draws by filtering fresh noise through the generator
/// conditioned on x0.
Matrix sample_posterior(const GeneratorArtifact& artifact, std::span<const double> x0,
                        std::size_t draws, std::uint64_t seed);

}  // namespace bgan
