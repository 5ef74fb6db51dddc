#include "bgan/avb.hpp"

#include "bgan/io.hpp"

namespace bgan {

GeneratorArtifact train_avb(const ReferenceTable& proposal_table, std::span<const double> x0,
                            const GeneratorArtifact& init, const TrainConfig& cfg) {
    require(init.d_theta == proposal_table.d_theta() && init.d_x == proposal_table.d_x(),
            "train_avb: init generator dimensions do not match the table");
    require(x0.size() == proposal_table.d_x(), "train_avb: x0 dimension mismatch");
    require(init.standardizer.has_value() == cfg.standardize,
            "train_avb: standardize flag must match the init artifact");

    GanTrainer trainer(proposal_table, cfg,
                       init.standardizer ? &*init.standardizer : nullptr);
    trainer.set_generator(init.generator);

    std::vector<EpochLoss> history;
    const std::size_t steps = trainer.steps_per_epoch();
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        EpochLoss acc;
        for (std::size_t step = 1; step <= steps; ++step) {
            for (std::size_t k = 0; k < cfg.n_critic; ++k) {
                const auto [obj, pen] = trainer.critic_step();
                acc.critic += obj;
                acc.penalty += pen;
            }
            acc.gen += trainer.generator_step_at(x0);
        }
        const double denom = static_cast<double>(steps);
        acc.critic /= denom * static_cast<double>(cfg.n_critic);
        acc.penalty /= denom * static_cast<double>(cfg.n_critic);
        acc.gen /= denom;
        history.push_back(acc);
    }
    GeneratorArtifact art = trainer.make_artifact(std::move(history));
    art.input = init.input;
    return art;
}

AvbResult run_avb(const SimulatorModel& sim, std::span<const double> x0,
                  const GeneratorArtifact& init, const AvbConfig& cfg) {
    require(x0.size() == sim.d_x, "run_avb: x0 dimension mismatch");
    AvbResult res;
    Vector x0v(x0.begin(), x0.end());
    res.proposal_table =
        generate_table(proposal_from_artifact(init, x0v), "proposal:" + init.config_hash, sim,
                       cfg.table_rows, derive_seed(cfg.seed, 500), cfg.workers);
    TrainConfig tcfg = cfg.train;
    tcfg.seed = derive_seed(cfg.seed, 501);
    res.artifact = train_avb(res.proposal_table, x0, init, tcfg);
    res.posterior = avb_posterior(res.artifact, x0, sim.prior, res.proposal_table.theta,
                                  cfg.weight_method, cfg.draws, derive_seed(cfg.seed, 502),
                                  cfg.kde_support_cap);
    return res;
}

WeightedPosterior avb_posterior(const GeneratorArtifact& artifact, std::span<const double> x0,
                                const UniformBoxPrior& prior, const Matrix& proposal_thetas,
                                WeightMethod method, std::size_t draws, std::uint64_t seed,
                                std::size_t support_cap) {
    Matrix theta = sample_posterior(artifact, x0, draws, seed);
    return weighted_draws(prior, std::move(theta), proposal_thetas, method,
                          derive_seed(seed, 1), support_cap);
}

}  // namespace bgan
