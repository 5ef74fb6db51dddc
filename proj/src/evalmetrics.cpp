#include "bgan/evalmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "bgan/kernels.hpp"
#include "bgan/rng.hpp"
#include "bgan/simulators.hpp"

namespace bgan {

namespace {

double sq_dist_rows(const Matrix& a, std::size_t i, const Matrix& b, std::size_t j) {
    const double* x = a.row_ptr(i);
    const double* y = b.row_ptr(j);
    double s = 0.0;
    for (std::size_t k = 0; k < a.cols(); ++k) {
        const double d = x[k] - y[k];
        s += d * d;
    }
    return s;
}

double median_pooled_distance(const Matrix& a, const Matrix& b) {
    const std::size_t n = a.rows() + b.rows();
    auto point = [&](std::size_t i) -> std::pair<const Matrix*, std::size_t> {
        return i < a.rows() ? std::make_pair(&a, i) : std::make_pair(&b, i - a.rows());
    };
    std::vector<double> dists;
    dists.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        const auto [mi, ri] = point(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto [mj, rj] = point(j);
            dists.push_back(std::sqrt(sq_dist_rows(*mi, ri, *mj, rj)));
        }
    }
    const std::size_t mid = (dists.size() - 1) / 2;
    std::nth_element(dists.begin(), dists.begin() + mid, dists.end());
    return std::max(dists[mid], 1e-6);
}

}  // namespace

double mmd(const Matrix& samples_a, const Matrix& samples_b) {
    const std::size_t m = samples_a.rows(), n = samples_b.rows();
    require(m >= 2 && n >= 2, "mmd: need at least two samples per set");
    require(samples_a.cols() == samples_b.cols(), "mmd: dimension mismatch");
    const double sigma = median_pooled_distance(samples_a, samples_b);
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);

    const double kaa = kernels::det_sum(m * m, [&](std::size_t idx) {
        const std::size_t i = idx / m, j = idx % m;
        if (i == j) return 0.0;
        return std::exp(-sq_dist_rows(samples_a, i, samples_a, j) * inv2s2);
    });
    const double kbb = kernels::det_sum(n * n, [&](std::size_t idx) {
        const std::size_t i = idx / n, j = idx % n;
        if (i == j) return 0.0;
        return std::exp(-sq_dist_rows(samples_b, i, samples_b, j) * inv2s2);
    });
    const double kab = kernels::det_sum(m * n, [&](std::size_t idx) {
        return std::exp(-sq_dist_rows(samples_a, idx / n, samples_b, idx % n) * inv2s2);
    });
    const double md = static_cast<double>(m), nd = static_cast<double>(n);
    return kaa / (md * (md - 1.0)) + kbb / (nd * (nd - 1.0)) - 2.0 * kab / (md * nd);
}

double weighted_quantile(std::span<const double> draws, std::span<const double> weights,
                         double q) {
    require(!draws.empty(), "weighted_quantile: empty input");
    require(draws.size() == weights.size(), "weighted_quantile: size mismatch");
    require(q >= 0.0 && q <= 1.0, "weighted_quantile: q must lie in [0,1]");
    std::vector<std::size_t> idx(draws.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (draws[a] != draws[b]) return draws[a] < draws[b];
        return a < b;
    });
    // q = 0 means the smallest draw carrying mass (the minimum draw under
    // positive weights); zero-weight entries never define a quantile.
    double cum = 0.0;
    for (std::size_t k : idx) {
        cum += weights[k];
        if (weights[k] > 0.0 && cum >= q) return draws[k];
    }
    return draws[idx.back()];  // q at (or rounding past) full mass
}

EvalReport posterior_summary(const WeightedPosterior& wp, std::span<const double> theta0,
                             const std::vector<bool>& fold_abs) {
    wp.validate();
    require(theta0.size() == wp.draws.cols(), "posterior_summary: theta0 dimension mismatch");
    EvalReport report;
    report.method = wp.method;
    for (std::size_t j = 0; j < theta0.size(); ++j) {
        const bool fold = j < fold_abs.size() && fold_abs[j];
        Vector vals(wp.draws.rows());
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double v = wp.draws(i, j);
            vals[i] = fold ? std::abs(v) : v;
        }
        const double target = fold ? std::abs(theta0[j]) : theta0[j];
        // Canonical accumulation order makes the summary invariant under
        // permutations of the (draw, weight) pairs, bit for bit.
        std::vector<std::size_t> order(vals.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (vals[a] != vals[b]) return vals[a] < vals[b];
            return wp.weights[a] < wp.weights[b];
        });
        ParamSummary s;
        s.mean = kernels::det_sum(order.size(), [&](std::size_t i) {
            return vals[order[i]] * wp.weights[order[i]];
        });
        s.bias = std::abs(s.mean - target);
        s.ci_low = weighted_quantile(vals, wp.weights, 0.025);
        s.ci_high = weighted_quantile(vals, wp.weights, 0.975);
        s.ci_width = s.ci_high - s.ci_low;
        s.coverage = (target >= s.ci_low && target <= s.ci_high) ? 1 : 0;
        report.params.push_back(s);
    }
    return report;
}

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["method"] = method;
    j["seed"] = seed;
    j["seconds"] = seconds;
    nlohmann::json params_json = nlohmann::json::array();
    for (const auto& p : params) {
        nlohmann::json e;
        e["mean"] = p.mean;
        e["bias"] = p.bias;
        e["ci_low"] = p.ci_low;
        e["ci_high"] = p.ci_high;
        e["ci_width"] = p.ci_width;
        e["coverage"] = p.coverage;
        params_json.push_back(e);
    }
    j["params"] = std::move(params_json);
    if (mmd_value) j["mmd"] = *mmd_value;
    return j.dump(2);
}

// --- tractable-likelihood oracle ------------------------------------------

namespace {

struct Chain {
    Matrix draws;  // post burn-in
    double accept_rate = 0.0;
};

Chain run_chain(std::span<const double> x0, std::uint64_t seed, std::uint64_t chain_id,
                std::size_t iterations, const UniformBoxPrior& box) {
    RngStream rng(seed, chain_id);
    const std::size_t d = box.dim();
    Vector theta = box.sample(rng);
    double ll = gaussian_toy_loglik(theta, x0).value;
    Vector step(d);
    for (std::size_t j = 0; j < d; ++j) step[j] = 0.1 * (box.highs[j] - box.lows[j]);

    const std::size_t burn = iterations / 2;
    Chain chain;
    chain.draws = Matrix(iterations - burn, d);
    long accepted = 0, window_accepted = 0;
    constexpr std::size_t kAdaptWindow = 100;

    auto reflect = [&](double v, double lo, double hi) {
        // Fold back into the box; symmetric, so the proposal stays valid.
        while (v < lo || v > hi) {
            if (v < lo) v = 2.0 * lo - v;
            if (v > hi) v = 2.0 * hi - v;
        }
        return v;
    };

    for (std::size_t it = 0; it < iterations; ++it) {
        Vector prop(d);
        for (std::size_t j = 0; j < d; ++j)
            prop[j] = reflect(theta[j] + step[j] * rng.normal(), box.lows[j], box.highs[j]);
        // Sign-flip moves hop between the symmetric theta3 / theta4 modes.
        if (rng.uniform() < 0.5) prop[2] = -prop[2];
        if (rng.uniform() < 0.5) prop[3] = -prop[3];
        const double prop_ll = gaussian_toy_loglik(prop, x0).value;
        if (std::log(1.0 - rng.uniform()) < prop_ll - ll) {
            theta = prop;
            ll = prop_ll;
            ++accepted;
            ++window_accepted;
        }
        // Scale adaptation toward 20-40% acceptance, burn-in only.
        if (it < burn && (it + 1) % kAdaptWindow == 0) {
            const double rate =
                static_cast<double>(window_accepted) / static_cast<double>(kAdaptWindow);
            if (rate < 0.2)
                for (double& s : step) s *= 0.9;
            else if (rate > 0.4)
                for (double& s : step) s *= 1.1;
            window_accepted = 0;
        }
        if (it >= burn) chain.draws.set_row(it - burn, theta);
    }
    chain.accept_rate = static_cast<double>(accepted) / static_cast<double>(iterations);
    return chain;
}

// Split-Rhat over 2x chains segments of the given scalar transform.
double split_rhat(const std::vector<Chain>& chains,
                  const std::function<double(std::span<const double>)>& transform) {
    std::vector<Vector> segments;
    for (const auto& c : chains) {
        const std::size_t n = c.draws.rows(), half = n / 2;
        Vector first(half), second(half);
        for (std::size_t i = 0; i < half; ++i) {
            first[i] = transform(c.draws.row(i));
            second[i] = transform(c.draws.row(half + i));
        }
        segments.push_back(std::move(first));
        segments.push_back(std::move(second));
    }
    const double m = static_cast<double>(segments.size());
    const double n = static_cast<double>(segments.front().size());
    Vector means;
    double w = 0.0;
    for (const auto& seg : segments) {
        double mean = 0.0;
        for (double v : seg) mean += v;
        mean /= n;
        double var = 0.0;
        for (double v : seg) var += (v - mean) * (v - mean);
        var /= n - 1.0;
        means.push_back(mean);
        w += var;
    }
    w /= m;
    double grand = 0.0;
    for (double v : means) grand += v;
    grand /= m;
    double b = 0.0;
    for (double v : means) b += (v - grand) * (v - grand);
    b *= n / (m - 1.0);
    const double var_plus = (n - 1.0) / n * w + b / n;
    return std::sqrt(var_plus / w);
}

}  // namespace

Matrix true_posterior_toy(std::span<const double> x0, std::size_t draws, std::uint64_t seed,
                          const OracleOptions& opts) {
    require(x0.size() == 8, "true_posterior_toy: x0 must have length 8");
    require(draws >= 1, "true_posterior_toy: need at least one draw");
    const UniformBoxPrior& box = simulator_by_name("gauss_toy").prior;

    std::vector<Chain> chains(opts.chains);
    kernels::parallel_rows(opts.chains, [&](std::size_t c) {
        chains[c] = run_chain(x0, seed, c, opts.iterations, box);
    });

    const std::vector<std::function<double(std::span<const double>)>> monitors = {
        [](std::span<const double> t) { return t[0]; },
        [](std::span<const double> t) { return t[1]; },
        [](std::span<const double> t) { return std::abs(t[2]); },
        [](std::span<const double> t) { return std::abs(t[3]); },
        [](std::span<const double> t) { return t[4]; },
    };
    for (const auto& monitor : monitors) {
        const double rhat = split_rhat(chains, monitor);
        if (!(rhat < opts.rhat_gate))
            throw std::runtime_error(
                "true_posterior_toy: split-Rhat " + std::to_string(rhat) +
                " exceeds the gate; rerun with more iterations per chain");
    }

    // Evenly thin the concatenated post-burn-in draws down to `draws`.
    const std::size_t per_chain = chains.front().draws.rows();
    const std::size_t total = per_chain * chains.size();
    require(draws <= total, "true_posterior_toy: more draws requested than kept iterations");
    Matrix out(draws, box.dim());
    for (std::size_t i = 0; i < draws; ++i) {
        const std::size_t flat = i * total / draws;
        const std::size_t chain = flat / per_chain;
        out.set_row(i, chains[chain].draws.row(flat % per_chain));
    }
    return out;
}

}  // namespace bgan
