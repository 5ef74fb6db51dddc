#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bgan/evalmetrics.hpp"
#include "bgan/rng.hpp"
#include "bgan/simulators.hpp"

using namespace bgan;

namespace {

Matrix normal_sample(std::size_t n, std::size_t d, double mean, std::uint64_t seed,
                     std::uint64_t stream) {
    RngStream rng(seed, stream);
    Matrix m(n, d);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = mean + rng.normal();
    return m;
}

}  // namespace

TEST_CASE("mmd: null distribution concentrates near zero, shifts separate") {
    Vector nulls, shifted;
    for (std::uint64_t t = 0; t < 20; ++t) {
        const Matrix a = normal_sample(500, 2, 0.0, 1, 2 * t);
        const Matrix b = normal_sample(500, 2, 0.0, 1, 2 * t + 1);
        nulls.push_back(mmd(a, b));
        const Matrix c = normal_sample(500, 2, 3.0, 2, t);
        shifted.push_back(mmd(a, c));
    }
    double mean = 0.0, sq = 0.0;
    for (double v : nulls) {
        mean += v;
        sq += v * v;
    }
    mean /= nulls.size();
    const double sd = std::sqrt(sq / nulls.size() - mean * mean);
    for (double v : nulls) CHECK(std::abs(v) <= 5.0 * sd + 1e-12);
    // every paired comparison separates
    for (std::size_t t = 0; t < nulls.size(); ++t) CHECK(shifted[t] > nulls[t]);
    for (double v : shifted) CHECK(v > 0.05);
}

TEST_CASE("mmd: deterministic and defined for degenerate pools") {
    const Matrix a = normal_sample(50, 3, 0.0, 3, 0);
    const Matrix b = normal_sample(60, 3, 0.5, 3, 1);
    CHECK(mmd(a, b) == mmd(a, b));
    // identical points pool: sigma floors at 1e-6, no blowup
    Matrix c(5, 2), d(5, 2);
    const double v = mmd(c, d);
    CHECK(std::isfinite(v));
    CHECK_THROWS_AS(mmd(Matrix(1, 2), d), std::invalid_argument);
}

TEST_CASE("weighted_quantile: reference cases") {
    const Vector draws{1, 2, 3, 4, 5};
    const Vector uniform(5, 0.2);
    CHECK(weighted_quantile(draws, uniform, 0.5) == 3.0);
    CHECK(weighted_quantile(draws, uniform, 0.0) == 1.0);
    CHECK(weighted_quantile(draws, uniform, 1.0) == 5.0);

    const Vector point{0, 0, 1, 0, 0};
    for (double q : {0.0, 0.3, 0.9, 1.0})
        CHECK(weighted_quantile(draws, point, q) == 3.0);

    // unsorted input is sorted internally
    const Vector shuffled{5, 1, 4, 2, 3};
    CHECK(weighted_quantile(shuffled, uniform, 0.5) == 3.0);

    CHECK_THROWS_AS(weighted_quantile(Vector{}, Vector{}, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(weighted_quantile(draws, uniform, 1.5), std::invalid_argument);
}

TEST_CASE("posterior_summary: point mass and symmetric clouds") {
    const Vector theta0{1.0, -2.0};
    {
        Matrix draws(4, 2);
        for (std::size_t i = 0; i < 4; ++i) {
            draws(i, 0) = 1.0;
            draws(i, 1) = -2.0;
        }
        const WeightedPosterior wp = uniform_posterior(draws);
        const EvalReport rep = posterior_summary(wp, theta0);
        for (const auto& p : rep.params) {
            CHECK(p.bias == 0.0);
            CHECK(p.ci_width == 0.0);
            CHECK(p.coverage == 1);
        }
    }
    {
        RngStream rng(4, 0);
        const std::size_t m = 20000;
        Matrix draws(m, 2);
        for (std::size_t i = 0; i < m; ++i) {
            draws(i, 0) = 1.0 + rng.normal();
            draws(i, 1) = -2.0 + 0.5 * rng.normal();
        }
        const WeightedPosterior wp = uniform_posterior(draws);
        const EvalReport rep = posterior_summary(wp, theta0);
        CHECK(rep.params[0].bias < 3.0 / std::sqrt(static_cast<double>(m)));
        CHECK(rep.params[1].bias < 3.0 * 0.5 / std::sqrt(static_cast<double>(m)));
        CHECK(rep.params[0].coverage == 1);
        CHECK(rep.params[0].ci_width == doctest::Approx(2.0 * 1.96).epsilon(0.05));
    }
}

TEST_CASE("posterior_summary: permutation invariance and folding") {
    RngStream rng(5, 0);
    const std::size_t m = 200;
    Matrix draws(m, 1);
    Vector weights(m);
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        draws(i, 0) = rng.normal();
        weights[i] = rng.uniform() + 0.01;
        total += weights[i];
    }
    for (auto& w : weights) w /= total;
    WeightedPosterior wp{draws, weights, "uniform"};
    // manual renormalization to pass validate at 1e-12
    double s = 0.0;
    for (double w : wp.weights) s += w;
    for (auto& w : wp.weights) w /= s;
    const Vector theta0{0.1};
    const EvalReport a = posterior_summary(wp, theta0);

    WeightedPosterior perm = wp;
    for (std::size_t i = 0; i < m / 2; ++i) {
        std::swap(perm.weights[i], perm.weights[m - 1 - i]);
        const double tmp = perm.draws(i, 0);
        perm.draws(i, 0) = perm.draws(m - 1 - i, 0);
        perm.draws(m - 1 - i, 0) = tmp;
    }
    const EvalReport b = posterior_summary(perm, theta0);
    CHECK(a.params[0].bias == b.params[0].bias);
    CHECK(a.params[0].ci_low == b.params[0].ci_low);
    CHECK(a.params[0].ci_high == b.params[0].ci_high);

    // folding evaluates absolute values
    const EvalReport folded = posterior_summary(wp, theta0, {true});
    CHECK(folded.params[0].mean >= 0.0);
}

TEST_CASE("oracle: draws respect the box and the sign symmetry") {
    const Vector theta0{-0.7, -2.9, -1.0, -0.9, 0.6};
    RngStream x0rng(6, 0);
    const Vector x0 = simulate_gaussian_toy(theta0, x0rng);

    OracleOptions opts;
    opts.iterations = 20000;
    const Matrix draws = true_posterior_toy(x0, 500, 11, opts);
    REQUIRE(draws.rows() == 500);
    const UniformBoxPrior& box = simulator_by_name("gauss_toy").prior;
    int positive3 = 0;
    for (std::size_t i = 0; i < draws.rows(); ++i) {
        CHECK(box.contains(draws.row(i)));
        if (draws(i, 2) > 0.0) ++positive3;
    }
    const double frac = static_cast<double>(positive3) / 500.0;
    CHECK(std::abs(frac - 0.5) < 3.0 * std::sqrt(0.25 / 500.0) + 0.05);

    // reproducible bit-exactly
    const Matrix again = true_posterior_toy(x0, 500, 11, opts);
    CHECK(draws == again);
}

TEST_CASE("oracle: draws sit in the high-likelihood region") {
    const Vector theta0{-0.7, -2.9, -1.0, -0.9, 0.6};
    RngStream x0rng(7, 0);
    const Vector x0 = simulate_gaussian_toy(theta0, x0rng);
    OracleOptions opts;
    opts.iterations = 20000;
    const Matrix draws = true_posterior_toy(x0, 300, 13, opts);
    const UniformBoxPrior& box = simulator_by_name("gauss_toy").prior;

    double oracle_ll = 0.0, prior_ll = 0.0;
    RngStream prng(8, 0);
    for (std::size_t i = 0; i < draws.rows(); ++i) {
        oracle_ll += gaussian_toy_loglik(draws.row(i), x0).value;
        const Vector t = box.sample(prng);
        const double ll = gaussian_toy_loglik(t, x0).value;
        prior_ll += std::isfinite(ll) ? ll : -1e3;
    }
    CHECK(oracle_ll / draws.rows() > prior_ll / draws.rows());
}

TEST_CASE("oracle: an unattainable rhat gate fails loudly") {
    const Vector theta0{-0.7, -2.9, -1.0, -0.9, 0.6};
    RngStream x0rng(9, 0);
    const Vector x0 = simulate_gaussian_toy(theta0, x0rng);
    OracleOptions opts;
    opts.iterations = 2000;
    opts.rhat_gate = 1.0 + 1e-9;
    CHECK_THROWS_WITH_AS(true_posterior_toy(x0, 100, 1, opts), doctest::Contains("split-Rhat"),
                         std::runtime_error);
}

TEST_CASE("eval report serializes") {
    Matrix draws(3, 1);
    draws(0, 0) = 1.0;
    draws(1, 0) = 2.0;
    draws(2, 0) = 3.0;
    const WeightedPosterior wp = uniform_posterior(draws, "test");
    EvalReport rep = posterior_summary(wp, Vector{2.0});
    rep.mmd_value = 0.125;
    const std::string json = rep.to_json();
    CHECK(json.find("\"mmd\"") != std::string::npos);
    CHECK(json.find("\"bias\"") != std::string::npos);
}
