#include "bgan/gan.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "bgan/io.hpp"
#include "bgan/kernels.hpp"

namespace bgan {

void TrainConfig::validate() const {
    require(batch_size >= 1, "config: batch_size must be positive");
    require(n_critic >= 1, "config: n_critic must be at least 1");
    require(lambda >= 0.0, "config: lambda must be nonnegative");
    require(lr_gen > 0.0 && lr_critic > 0.0, "config: learning rates must be positive");
    require(!gen_hidden.empty() && !critic_hidden.empty(), "config: empty architecture");
    require(dropout >= 0.0 && dropout < 1.0, "config: dropout must be in [0,1)");
}

std::string TrainConfig::describe() const {
    nlohmann::json j;
    j["batch_size"] = batch_size;
    j["epochs"] = epochs;
    j["steps_per_epoch"] = steps_per_epoch;
    j["n_critic"] = n_critic;
    j["lambda"] = lambda;
    j["lr_gen"] = lr_gen;
    j["lr_critic"] = lr_critic;
    j["d_z"] = d_z;
    j["gen_hidden"] = gen_hidden;
    j["critic_hidden"] = critic_hidden;
    j["activation"] = activation == Activation::Relu ? "relu" : "leaky_relu";
    j["leaky_slope"] = leaky_slope;
    j["dropout"] = dropout;
    j["init"] = init == InitScheme::HeUniform ? "he_uniform" : "zeros";
    j["seed"] = seed;
    j["standardize"] = standardize;
    return j.dump();
}

namespace {

std::vector<std::size_t> widths_of(std::size_t in, const std::vector<std::size_t>& hidden,
                                   std::size_t out) {
    std::vector<std::size_t> w{in};
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(out);
    return w;
}

double mean_of_column(const Matrix& m, std::size_t lo, std::size_t hi) {
    return kernels::det_sum(hi - lo, [&](std::size_t i) { return m(lo + i, 0); }) /
           static_cast<double>(hi - lo);
}

}  // namespace

GanTrainer::GanTrainer(const ReferenceTable& table, const TrainConfig& cfg,
                       const Standardizer* fixed_standardizer)
    : table_(table), cfg_(cfg), standardize_(cfg.standardize), rng_(cfg.seed, 2) {
    cfg_.validate();
    require(table.rows() >= 1, "train: empty reference table");
    if (standardize_) {
        standardizer_ = fixed_standardizer ? *fixed_standardizer : Standardizer::fit(table_);
        standardizer_.apply_theta(table_.theta);
        standardizer_.apply_x(table_.x);
    }
    const std::size_t d_theta = table_.d_theta();
    const std::size_t d_x = table_.d_x();
    const std::size_t d_z = cfg_.noise_dim(d_theta);
    RngStream gen_init(cfg_.seed, 0), critic_init(cfg_.seed, 1);
    gen_ = Mlp::init(widths_of(d_z + d_x, cfg_.gen_hidden, d_theta), cfg_.activation,
                     cfg_.leaky_slope, cfg_.dropout, OutputActivation::Identity, cfg_.init,
                     gen_init);
    critic_ = Mlp::init(widths_of(d_x + d_theta, cfg_.critic_hidden, 1), cfg_.activation,
                        cfg_.leaky_slope, cfg_.dropout, OutputActivation::Identity, cfg_.init,
                        critic_init);
    gen_state_ = gen_.zero_adam();
    critic_state_ = critic_.zero_adam();
}

void GanTrainer::set_generator(const Mlp& g) {
    require(g.input_dim() == gen_.input_dim() && g.output_dim() == gen_.output_dim(),
            "set_generator: dimension mismatch");
    gen_ = g;
    gen_state_ = gen_.zero_adam();
}

void GanTrainer::set_critic(const Mlp& c) {
    require(c.input_dim() == critic_.input_dim() && c.output_dim() == 1,
            "set_critic: dimension mismatch");
    critic_ = c;
    critic_state_ = critic_.zero_adam();
}

std::size_t GanTrainer::steps_per_epoch() const {
    if (cfg_.steps_per_epoch > 0) return cfg_.steps_per_epoch;
    return (table_.rows() + cfg_.batch_size - 1) / cfg_.batch_size;
}

Batch GanTrainer::fresh_batch() {
    return next_batch(table_, cfg_.batch_size, cfg_.noise_dim(table_.d_theta()), rng_);
}

std::pair<double, double> GanTrainer::critic_step() { return critic_step_on(fresh_batch()); }

std::pair<double, double> GanTrainer::critic_step_on(const Batch& batch) {
    const std::size_t b = batch.theta.rows();
    const Matrix fake_theta = gen_.forward(hstack(batch.z, batch.x), RunMode::Train, &rng_);

    // Real rows first, generated rows second, one stacked critic pass.
    Matrix critic_in(2 * b, batch.x.cols() + batch.theta.cols());
    kernels::parallel_rows(b, [&](std::size_t i) {
        double* real = critic_in.row_ptr(i);
        double* fake = critic_in.row_ptr(b + i);
        const double* x = batch.x.row_ptr(i);
        for (std::size_t j = 0; j < batch.x.cols(); ++j) real[j] = fake[j] = x[j];
        const double* tr = batch.theta.row_ptr(i);
        const double* tf = fake_theta.row_ptr(i);
        for (std::size_t j = 0; j < batch.theta.cols(); ++j) {
            real[batch.x.cols() + j] = tr[j];
            fake[batch.x.cols() + j] = tf[j];
        }
    });
    ForwardCache cache;
    const Matrix scores = critic_.forward(critic_in, RunMode::Train, &rng_, &cache);
    const double mean_real = mean_of_column(scores, 0, b);
    const double mean_fake = mean_of_column(scores, b, 2 * b);

    // Loss = mean f(fake) - mean f(real) + penalty.
    Matrix upstream(2 * b, 1);
    const double inv = 1.0 / static_cast<double>(b);
    for (std::size_t i = 0; i < b; ++i) {
        upstream(i, 0) = -inv;
        upstream(b + i, 0) = inv;
    }
    MlpGrads grads;
    critic_.backward(cache, upstream, &grads);

    double penalty = 0.0;
    if (cfg_.lambda > 0.0) {
        Matrix theta_bar(b, batch.theta.cols());
        for (std::size_t i = 0; i < b; ++i) {
            const double eps = rng_.uniform();
            double* tb = theta_bar.row_ptr(i);
            const double* tr = batch.theta.row_ptr(i);
            const double* tf = fake_theta.row_ptr(i);
            for (std::size_t j = 0; j < theta_bar.cols(); ++j) {
                // offset form keeps theta_bar exactly at a coinciding
                // endpoint; the clamp absorbs half-ulp overshoot
                const double v = tf[j] + eps * (tr[j] - tf[j]);
                tb[j] = std::clamp(v, std::min(tr[j], tf[j]), std::max(tr[j], tf[j]));
            }
        }
        penalty = gradient_penalty(critic_, batch.x, theta_bar, cfg_.lambda, grads);
    }
    adam_step(critic_, grads, critic_state_, cfg_.lr_critic);

    const double objective = mean_fake - mean_real;
    if (!std::isfinite(objective) || !std::isfinite(penalty))
        throw std::runtime_error("train: non-finite critic loss at epoch " +
                                 std::to_string(epoch_) + " step " + std::to_string(step_));
    return {objective, penalty};
}

double GanTrainer::generator_step() {
    const Batch batch = fresh_batch();
    return generator_step_on(batch.x, batch.z);
}

double GanTrainer::generator_step_at(std::span<const double> x_cond) {
    const Batch batch = fresh_batch();
    require(x_cond.size() == table_.d_x(), "generator_step_at: conditioning width mismatch");
    Vector cond(x_cond.begin(), x_cond.end());
    if (standardize_) cond = standardizer_.apply_x_row(cond);
    return generator_step_on(replicate_row(cond, batch.z.rows()), batch.z);
}

double GanTrainer::generator_step_on(const Matrix& x_cond, const Matrix& z) {
    const std::size_t b = z.rows();
    ForwardCache gen_cache, critic_cache;
    const Matrix fake_theta = gen_.forward(hstack(z, x_cond), RunMode::Train, &rng_, &gen_cache);
    const Matrix scores =
        critic_.forward(hstack(x_cond, fake_theta), RunMode::Train, &rng_, &critic_cache);
    const double loss = -mean_of_column(scores, 0, b);
    if (!std::isfinite(loss))
        throw std::runtime_error("train: non-finite generator loss at epoch " +
                                 std::to_string(epoch_) + " step " + std::to_string(step_));

    Matrix upstream(b, 1, -1.0 / static_cast<double>(b));
    Matrix critic_in_grads;
    critic_.backward(critic_cache, upstream, nullptr, &critic_in_grads);
    Matrix up_gen(b, fake_theta.cols());
    kernels::parallel_rows(b, [&](std::size_t i) {
        const double* src = critic_in_grads.row_ptr(i) + x_cond.cols();
        double* dst = up_gen.row_ptr(i);
        for (std::size_t j = 0; j < up_gen.cols(); ++j) dst[j] = src[j];
    });
    MlpGrads ggrads;
    gen_.backward(gen_cache, up_gen, &ggrads);
    adam_step(gen_, ggrads, gen_state_, cfg_.lr_gen);
    return loss;
}

std::vector<EpochLoss> GanTrainer::run() {
    std::vector<EpochLoss> history;
    const std::size_t steps = steps_per_epoch();
    for (epoch_ = 1; epoch_ <= cfg_.epochs; ++epoch_) {
        EpochLoss acc;
        for (step_ = 1; step_ <= steps; ++step_) {
            for (std::size_t k = 0; k < cfg_.n_critic; ++k) {
                const auto [obj, pen] = critic_step();
                acc.critic += obj;
                acc.penalty += pen;
            }
            acc.gen += generator_step();
        }
        const double denom = static_cast<double>(steps);
        acc.critic /= denom * static_cast<double>(cfg_.n_critic);
        acc.penalty /= denom * static_cast<double>(cfg_.n_critic);
        acc.gen /= denom;
        history.push_back(acc);
    }
    return history;
}

GeneratorArtifact GanTrainer::make_artifact(std::vector<EpochLoss> losses,
                                            const std::string& table_hash) const {
    GeneratorArtifact art;
    art.generator = gen_;
    if (standardize_) art.standardizer = standardizer_;
    art.d_theta = table_.d_theta();
    art.d_x = table_.d_x();
    art.d_z = cfg_.noise_dim(table_.d_theta());
    art.config_hash = io::hash_hex(cfg_.describe());
    art.table_hash = table_hash;
    art.seed = cfg_.seed;
    art.losses = std::move(losses);
    return art;
}

GeneratorArtifact train_bgan(const ReferenceTable& table, const TrainConfig& cfg) {
    GanTrainer trainer(table, cfg);
    return trainer.make_artifact(trainer.run());
}

// --- Jensen-Shannon variant --------------------------------------------

namespace {
constexpr double kLogClamp = 1e-12;
}

GeneratorArtifact train_bgan_js(const ReferenceTable& table, const TrainConfig& cfg) {
    cfg.validate();
    ReferenceTable tab = table;
    Standardizer stdz;
    if (cfg.standardize) {
        stdz = Standardizer::fit(tab);
        stdz.apply_theta(tab.theta);
        stdz.apply_x(tab.x);
    }
    const std::size_t d_theta = tab.d_theta(), d_x = tab.d_x();
    const std::size_t d_z = cfg.noise_dim(d_theta);
    RngStream gen_init(cfg.seed, 0), disc_init(cfg.seed, 1), rng(cfg.seed, 2);
    Mlp gen = Mlp::init(widths_of(d_z + d_x, cfg.gen_hidden, d_theta), cfg.activation,
                        cfg.leaky_slope, cfg.dropout, OutputActivation::Identity, cfg.init,
                        gen_init);
    Mlp disc = Mlp::init(widths_of(d_x + d_theta, cfg.critic_hidden, 1), cfg.activation,
                         cfg.leaky_slope, cfg.dropout, OutputActivation::Logistic, cfg.init,
                         disc_init);
    AdamState gen_state = gen.zero_adam(), disc_state = disc.zero_adam();

    std::vector<EpochLoss> history;
    const std::size_t steps =
        cfg.steps_per_epoch > 0 ? cfg.steps_per_epoch
                                : (tab.rows() + cfg.batch_size - 1) / cfg.batch_size;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        EpochLoss acc;
        for (std::size_t step = 1; step <= steps; ++step) {
            // Discriminator step: maximize log d(real) + log(1 - d(fake)).
            Batch batch = next_batch(tab, cfg.batch_size, d_z, rng);
            const std::size_t b = batch.theta.rows();
            {
                const Matrix fake_theta = gen.forward(hstack(batch.z, batch.x), RunMode::Train, &rng);
                Matrix disc_in(2 * b, d_x + d_theta);
                kernels::parallel_rows(b, [&](std::size_t i) {
                    double* real = disc_in.row_ptr(i);
                    double* fake = disc_in.row_ptr(b + i);
                    const double* x = batch.x.row_ptr(i);
                    for (std::size_t j = 0; j < d_x; ++j) real[j] = fake[j] = x[j];
                    for (std::size_t j = 0; j < d_theta; ++j) {
                        real[d_x + j] = batch.theta(i, j);
                        fake[d_x + j] = fake_theta(i, j);
                    }
                });
                ForwardCache cache;
                const Matrix d = disc.forward(disc_in, RunMode::Train, &rng, &cache);
                Matrix upstream(2 * b, 1);
                double loss = 0.0;
                const double inv = 1.0 / static_cast<double>(b);
                for (std::size_t i = 0; i < b; ++i) {
                    const double dr = d(i, 0), df = d(b + i, 0);
                    loss -= std::log(std::max(dr, kLogClamp)) * inv;
                    loss -= std::log(std::max(1.0 - df, kLogClamp)) * inv;
                    upstream(i, 0) = -inv / std::max(dr, kLogClamp);
                    upstream(b + i, 0) = inv / std::max(1.0 - df, kLogClamp);
                }
                MlpGrads grads;
                disc.backward(cache, upstream, &grads);
                adam_step(disc, grads, disc_state, cfg.lr_critic);
                acc.critic += loss;
                if (!std::isfinite(loss))
                    throw std::runtime_error("train_bgan_js: non-finite discriminator loss at epoch " +
                                             std::to_string(epoch));
            }
            // Generator step: minimize log(1 - d(fake)) on a fresh batch.
            batch = next_batch(tab, cfg.batch_size, d_z, rng);
            {
                ForwardCache gen_cache, disc_cache;
                const Matrix fake_theta =
                    gen.forward(hstack(batch.z, batch.x), RunMode::Train, &rng, &gen_cache);
                const Matrix d = disc.forward(hstack(batch.x, fake_theta), RunMode::Train, &rng,
                                              &disc_cache);
                Matrix upstream(b, 1);
                double loss = 0.0;
                const double inv = 1.0 / static_cast<double>(b);
                for (std::size_t i = 0; i < b; ++i) {
                    loss += std::log(std::max(1.0 - d(i, 0), kLogClamp)) * inv;
                    upstream(i, 0) = -inv / std::max(1.0 - d(i, 0), kLogClamp);
                }
                Matrix in_grads;
                disc.backward(disc_cache, upstream, nullptr, &in_grads);
                Matrix up_gen(b, d_theta);
                for (std::size_t i = 0; i < b; ++i)
                    for (std::size_t j = 0; j < d_theta; ++j) up_gen(i, j) = in_grads(i, d_x + j);
                MlpGrads ggrads;
                gen.backward(gen_cache, up_gen, &ggrads);
                adam_step(gen, ggrads, gen_state, cfg.lr_gen);
                acc.gen += loss;
                if (!std::isfinite(loss))
                    throw std::runtime_error("train_bgan_js: non-finite generator loss at epoch " +
                                             std::to_string(epoch));
            }
        }
        acc.critic /= static_cast<double>(steps);
        acc.gen /= static_cast<double>(steps);
        history.push_back(acc);
    }

    GeneratorArtifact art;
    art.generator = std::move(gen);
    if (cfg.standardize) art.standardizer = stdz;
    art.d_theta = d_theta;
    art.d_x = d_x;
    art.d_z = d_z;
    art.config_hash = io::hash_hex(cfg.describe());
    art.seed = cfg.seed;
    art.losses = std::move(history);
    return art;
}

// --- sampling and artifact io --------------------------------------------

Matrix sample_posterior(const GeneratorArtifact& artifact, std::span<const double> x0,
                        std::size_t draws, std::uint64_t seed) {
    require(x0.size() == artifact.d_x, "sample_posterior: x0 dimension mismatch");
    if (draws == 0) return Matrix(0, artifact.d_theta);
    Vector cond(x0.begin(), x0.end());
    if (artifact.standardizer) cond = artifact.standardizer->apply_x_row(cond);
    RngStream rng(seed, 0);
    Matrix z(draws, artifact.d_z);
    for (std::size_t i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
    Matrix theta =
        artifact.generator.forward(hstack(z, replicate_row(cond, draws)), RunMode::Eval);
    if (artifact.standardizer) artifact.standardizer->invert_theta(theta);
    return theta;
}

void GeneratorArtifact::save(const std::string& path) const {
    nlohmann::json j;
    j["format"] = "generator-artifact-v1";
    j["generator"] = nlohmann::json::parse(generator.to_json());
    if (standardizer) j["standardizer"] = nlohmann::json::parse(standardizer->to_json());
    j["d_theta"] = d_theta;
    j["d_x"] = d_x;
    j["d_z"] = d_z;
    j["input"] = input;
    j["config_hash"] = config_hash;
    j["table_hash"] = table_hash;
    j["seed"] = seed;
    nlohmann::json losses_json = nlohmann::json::array();
    for (const auto& l : losses) losses_json.push_back({l.critic, l.gen, l.penalty});
    j["losses"] = std::move(losses_json);
    io::write_file(path, j.dump());
}

GeneratorArtifact GeneratorArtifact::load(const std::string& path) {
    const nlohmann::json j = nlohmann::json::parse(io::read_file(path));
    if (j.value("format", "") != "generator-artifact-v1")
        throw std::runtime_error(path + ": unknown artifact format");
    GeneratorArtifact art;
    art.generator = Mlp::from_json(j.at("generator").dump());
    if (j.contains("standardizer"))
        art.standardizer = Standardizer::from_json(j.at("standardizer").dump());
    art.d_theta = j.at("d_theta").get<std::size_t>();
    art.d_x = j.at("d_x").get<std::size_t>();
    art.d_z = j.at("d_z").get<std::size_t>();
    art.input = j.value("input", "raw");
    art.config_hash = j.value("config_hash", "");
    art.table_hash = j.value("table_hash", "");
    art.seed = j.value("seed", std::uint64_t{0});
    for (const auto& l : j.at("losses")) {
        EpochLoss e;
        e.critic = l.at(0).get<double>();
        e.gen = l.at(1).get<double>();
        e.penalty = l.at(2).get<double>();
        art.losses.push_back(e);
    }
    return art;
}

void GeneratorArtifact::save_losses_csv(const std::string& path) const {
    Matrix m(losses.size(), 4);
    for (std::size_t i = 0; i < losses.size(); ++i) {
        m(i, 0) = static_cast<double>(i + 1);
        m(i, 1) = losses[i].critic;
        m(i, 2) = losses[i].gen;
        m(i, 3) = losses[i].penalty;
    }
    io::write_csv(path, {"epoch", "critic_loss", "gen_loss", "penalty"}, m);
}

}  // namespace bgan
