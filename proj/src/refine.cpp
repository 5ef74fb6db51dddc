#include "bgan/refine.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>

#include "bgan/kernels.hpp"

namespace bgan {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) {
    RngStream s(master, tag ^ 0xb5ad4eceda1ce2a9ULL);
    return s.next_u64();
}

// --- kernel density estimate -------------------------------------------

KdeModel kde_fit(const Matrix& samples) {
    require(samples.rows() >= 2, "kde_fit: need at least two samples");
    const std::size_t m = samples.rows(), d = samples.cols();
    KdeModel model;
    model.support = samples;
    model.bandwidth.resize(d);
    const double factor =
        std::pow(4.0 / ((static_cast<double>(d) + 2.0) * static_cast<double>(m)),
                 1.0 / (static_cast<double>(d) + 4.0));
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < m; ++i) mean += samples(i, j);
        mean /= static_cast<double>(m);
        double ss = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double dd = samples(i, j) - mean;
            ss += dd * dd;
        }
        const double sd = std::sqrt(ss / static_cast<double>(m - 1));
        model.bandwidth[j] = std::max(sd * factor, 1e-6);
    }
    return model;
}

double KdeModel::log_density(std::span<const double> theta) const {
    require(theta.size() == support.cols(), "kde: dimension mismatch");
    const std::size_t m = support.rows(), d = support.cols();
    double max_expo = -std::numeric_limits<double>::infinity();
    Vector expo(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double* s = support.row_ptr(i);
        double q = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double z = (theta[j] - s[j]) / bandwidth[j];
            q += z * z;
        }
        expo[i] = -0.5 * q;
        max_expo = std::max(max_expo, expo[i]);
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += std::exp(expo[i] - max_expo);
    double log_norm = -std::log(static_cast<double>(m)) -
                      0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi);
    for (std::size_t j = 0; j < d; ++j) log_norm -= std::log(bandwidth[j]);
    return log_norm + max_expo + std::log(acc);
}

double KdeModel::density(std::span<const double> theta) const {
    return std::exp(log_density(theta));
}

// --- importance weights ---------------------------------------------------

namespace {

void clip_at_top_percentile(Vector& w) {
    // Smallest value whose cumulative count fraction reaches 99.9%.
    if (w.size() < 2) return;
    Vector sorted = w;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t idx =
        static_cast<std::size_t>(
            std::ceil(0.999 * static_cast<double>(sorted.size()))) - 1;
    const double cap = sorted[idx];
    for (double& v : w) v = std::min(v, cap);
}

}  // namespace

Vector weights_vs_density(const UniformBoxPrior& prior, const LogDensityFn& proposal_log_density,
                          const Matrix& draws) {
    require(draws.rows() >= 1, "weights: no draws");
    const std::size_t m = draws.rows();
    Vector logq(m, 0.0);
    std::vector<char> inside(m, 0);
    kernels::parallel_rows(m, [&](std::size_t i) {
        if (prior.contains(draws.row(i))) {
            inside[i] = 1;
            logq[i] = proposal_log_density(draws.row(i));
        }
    });
    double max_neg = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i)
        if (inside[i]) max_neg = std::max(max_neg, -logq[i]);
    Vector w(m, 0.0);
    if (max_neg > -std::numeric_limits<double>::infinity()) {
        for (std::size_t i = 0; i < m; ++i)
            if (inside[i]) w[i] = std::exp(-logq[i] - max_neg);
    }
    clip_at_top_percentile(w);
    normalize_weights(w);
    return w;
}

Vector weights_kde(const UniformBoxPrior& prior, const KdeModel& kde, const Matrix& draws) {
    return weights_vs_density(
        prior, [&kde](std::span<const double> t) { return kde.log_density(t); }, draws);
}

Vector weights_classifier(const Matrix& prior_draws, const Matrix& proposal_draws,
                          const Matrix& eval_draws, const ClassifierConfig& cfg) {
    const std::size_t k = prior_draws.rows();
    require(k >= 100 && proposal_draws.rows() >= 100,
            "weights_classifier: need at least 100 draws per class");
    require(prior_draws.cols() == proposal_draws.cols() &&
                prior_draws.cols() == eval_draws.cols(),
            "weights_classifier: dimension mismatch");
    const std::size_t d = prior_draws.cols();
    const std::size_t n = k + proposal_draws.rows();

    // Pooled standardization helps the logistic net; kept internal.
    Vector mean(d, 0.0), sd(d, 1.0);
    for (std::size_t j = 0; j < d; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) s += prior_draws(i, j);
        for (std::size_t i = 0; i < proposal_draws.rows(); ++i) s += proposal_draws(i, j);
        mean[j] = s / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double dd = prior_draws(i, j) - mean[j];
            ss += dd * dd;
        }
        for (std::size_t i = 0; i < proposal_draws.rows(); ++i) {
            const double dd = proposal_draws(i, j) - mean[j];
            ss += dd * dd;
        }
        if (ss > 0.0) sd[j] = std::sqrt(ss / static_cast<double>(n - 1));
    }
    auto standardize = [&](const Matrix& src) {
        Matrix out(src.rows(), d);
        for (std::size_t i = 0; i < src.rows(); ++i)
            for (std::size_t j = 0; j < d; ++j) out(i, j) = (src(i, j) - mean[j]) / sd[j];
        return out;
    };
    const Matrix pooled_prior = standardize(prior_draws);
    const Matrix pooled_prop = standardize(proposal_draws);

    RngStream init_rng(cfg.seed, 0), rng(cfg.seed, 1);
    std::vector<std::size_t> widths{d};
    widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
    widths.push_back(1);
    Mlp net = Mlp::init(widths, Activation::Relu, 0.1, 0.0, OutputActivation::Logistic,
                        InitScheme::HeUniform, init_rng);
    AdamState state = net.zero_adam();

    const std::size_t batch = std::min(cfg.batch_size, n);
    std::ostringstream loss_trace;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const std::size_t steps = (n + batch - 1) / batch;
        double epoch_loss = 0.0;
        for (std::size_t s = 0; s < steps; ++s) {
            Matrix x(batch, d);
            Vector label(batch);
            for (std::size_t i = 0; i < batch; ++i) {
                const std::size_t pick = rng.uniform_index(n);
                if (pick < k) {
                    x.set_row(i, pooled_prior.row(pick));
                    label[i] = 1.0;
                } else {
                    x.set_row(i, pooled_prop.row(pick - k));
                    label[i] = 0.0;
                }
            }
            ForwardCache cache;
            const Matrix out = net.forward(x, RunMode::Train, &rng, &cache);
            Matrix upstream(batch, 1);
            double loss = 0.0;
            for (std::size_t i = 0; i < batch; ++i) {
                const double p = std::clamp(out(i, 0), 1e-12, 1.0 - 1e-12);
                loss -= label[i] > 0.5 ? std::log(p) : std::log(1.0 - p);
                // d(-log-lik)/d p, averaged over the batch
                upstream(i, 0) = (label[i] > 0.5 ? -1.0 / p : 1.0 / (1.0 - p)) /
                                 static_cast<double>(batch);
            }
            loss /= static_cast<double>(batch);
            epoch_loss += loss;
            if (!std::isfinite(loss))
                throw std::runtime_error("weights_classifier: training diverged; loss trace: " +
                                         loss_trace.str() + " -> non-finite");
            MlpGrads grads;
            net.backward(cache, upstream, &grads);
            adam_step(net, grads, state, cfg.lr);
        }
        loss_trace << (epoch ? "," : "") << epoch_loss / static_cast<double>((n + batch - 1) / batch);
    }

    const Matrix eval_std = standardize(eval_draws);
    const Matrix scores = net.forward(eval_std, RunMode::Eval);
    Vector w(eval_draws.rows());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double p = std::clamp(scores(i, 0), 1e-6, 1.0 - 1e-6);
        w[i] = p / (1.0 - p);
    }
    normalize_weights(w);
    return w;
}

const char* weight_method_name(WeightMethod m) {
    switch (m) {
        case WeightMethod::Kde: return "kde";
        case WeightMethod::Classifier: return "classifier";
        default: return "auto";
    }
}

WeightedPosterior weighted_draws(const UniformBoxPrior& prior, Matrix draws,
                                 const Matrix& proposal_thetas, WeightMethod method,
                                 std::uint64_t seed, std::size_t support_cap) {
    WeightMethod chosen = method;
    if (chosen == WeightMethod::Auto)
        chosen = prior.dim() <= 5 ? WeightMethod::Kde : WeightMethod::Classifier;

    const std::size_t cap = std::min<std::size_t>(support_cap, proposal_thetas.rows());
    Matrix support(cap, proposal_thetas.cols());
    for (std::size_t i = 0; i < cap; ++i) support.set_row(i, proposal_thetas.row(i));

    WeightedPosterior wp;
    if (chosen == WeightMethod::Kde) {
        const KdeModel kde = kde_fit(support);
        wp.weights = weights_kde(prior, kde, draws);
        wp.method = "kde";
    } else {
        RngStream prior_rng(seed, 7777);
        Matrix prior_draws(cap, prior.dim());
        for (std::size_t i = 0; i < cap; ++i) prior_draws.set_row(i, prior.sample(prior_rng));
        ClassifierConfig ccfg;
        ccfg.seed = derive_seed(seed, 7778);
        Vector w = weights_classifier(prior_draws, support, draws, ccfg);
        // The odds ratio knows nothing about the box; zero out-of-support
        // draws before renormalizing.
        for (std::size_t i = 0; i < draws.rows(); ++i)
            if (!prior.contains(draws.row(i))) w[i] = 0.0;
        normalize_weights(w);
        wp.weights = std::move(w);
        wp.method = "classifier";
    }
    wp.draws = std::move(draws);
    return wp;
}

// --- two-step refinement ----------------------------------------------

ParamSampler proposal_from_artifact(const GeneratorArtifact& artifact, Vector x0) {
    require(x0.size() == artifact.d_x, "proposal_from_artifact: x0 dimension mismatch");
    Vector cond = artifact.standardizer ? artifact.standardizer->apply_x_row(x0) : x0;
    // Shared ownership: the sampler outlives the caller's artifact copy.
    auto art = std::make_shared<GeneratorArtifact>(artifact);
    return [art, cond](RngStream& rng) {
        Matrix in(1, art->d_z + cond.size());
        for (std::size_t j = 0; j < art->d_z; ++j) in(0, j) = rng.normal();
        for (std::size_t j = 0; j < cond.size(); ++j) in(0, art->d_z + j) = cond[j];
        Matrix theta = art->generator.forward(in, RunMode::Eval);
        if (art->standardizer) art->standardizer->invert_theta(theta);
        return theta.row_copy(0);
    };
}

TwoStepResult refine_from_pilot(const SimulatorModel& sim, std::span<const double> x0,
                                const GeneratorArtifact& pilot, const TwoStepConfig& cfg) {
    require(cfg.table2_rows >= 1, "two_step: table2_rows must be positive");
    require(cfg.rounds >= 1, "two_step: rounds must be positive");
    require(x0.size() == sim.d_x, "two_step: x0 dimension mismatch");

    TwoStepResult res;
    res.pilot = pilot;
    GeneratorArtifact current = pilot;
    Vector x0v(x0.begin(), x0.end());

    for (std::size_t round = 1; round <= cfg.rounds; ++round) {
        res.proposal_table = generate_table(
            proposal_from_artifact(current, x0v), "proposal:" + current.config_hash, sim,
            cfg.table2_rows, derive_seed(cfg.seed, 100 + round), cfg.workers);
        TrainConfig rcfg = cfg.refine;
        rcfg.seed = derive_seed(cfg.seed, 200 + round);
        current = train_bgan(res.proposal_table, rcfg);
        current.input = pilot.input;
    }
    res.refined = current;

    Matrix draws = sample_posterior(res.refined, x0, cfg.draws, derive_seed(cfg.seed, 300));
    res.posterior = weighted_draws(sim.prior, std::move(draws), res.proposal_table.theta,
                                   cfg.weight_method, derive_seed(cfg.seed, 400),
                                   cfg.kde_support_cap);
    return res;
}

TwoStepResult run_two_step(const SimulatorModel& sim, std::span<const double> x0,
                           const TwoStepConfig& cfg) {
    const ReferenceTable pilot_table =
        generate_table(sim, cfg.pilot_rows, derive_seed(cfg.seed, 1), cfg.workers);
    TrainConfig pcfg = cfg.pilot;
    pcfg.seed = derive_seed(cfg.seed, 2);
    const GeneratorArtifact pilot = train_bgan(pilot_table, pcfg);
    return refine_from_pilot(sim, x0, pilot, cfg);
}

}  // namespace bgan
