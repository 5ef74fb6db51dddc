#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bgan/simulators.hpp"

using namespace bgan;

namespace {

// Independent bivariate-normal log-density via a dense Cholesky solve.
double mvn2_logpdf_cholesky(double d1, double d2, double v11, double v12, double v22) {
    const double l11 = std::sqrt(v11);
    const double l21 = v12 / l11;
    const double l22 = std::sqrt(v22 - l21 * l21);
    const double y1 = d1 / l11;
    const double y2 = (d2 - l21 * y1) / l22;
    const double quad = y1 * y1 + y2 * y2;
    const double logdet = 2.0 * (std::log(l11) + std::log(l22));
    return -std::log(2.0 * std::numbers::pi) - 0.5 * logdet - 0.5 * quad;
}

// Streaming (one-pass) central moments, the independent oracle for the
// two-pass implementation.
struct Streaming {
    double n = 0, mean = 0, m2 = 0, m3 = 0, m4 = 0;
    void push(double x) {
        const double n1 = n;
        n += 1;
        const double delta = x - mean;
        const double dn = delta / n;
        const double dn2 = dn * dn;
        const double term1 = delta * dn * n1;
        mean += dn;
        m4 += term1 * dn2 * (n * n - 3 * n + 3) + 6 * dn2 * m2 - 4 * dn * m3;
        m3 += term1 * dn * (n - 2) - 3 * dn * m2;
        m2 += term1;
    }
    double variance() const { return m2 / (n - 1); }
};

}  // namespace

TEST_CASE("gauss toy: identity covariance at the unit parameter point") {
    const Vector theta{0, 0, 1, 1, 0};
    RngStream rng(1, 0);
    double sum1 = 0, sum2 = 0, sq1 = 0, sq2 = 0, cross = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const Vector x = simulate_gaussian_toy(theta, rng);
        REQUIRE(x.size() == 8);
        for (int k = 0; k < 4; ++k) {
            sum1 += x[2 * k];
            sum2 += x[2 * k + 1];
            sq1 += x[2 * k] * x[2 * k];
            sq2 += x[2 * k + 1] * x[2 * k + 1];
            cross += x[2 * k] * x[2 * k + 1];
        }
    }
    const double m = 4.0 * n;
    CHECK(std::abs(sum1 / m) < 4.0 / std::sqrt(m));
    CHECK(std::abs(sum2 / m) < 4.0 / std::sqrt(m));
    CHECK(std::abs(sq1 / m - 1.0) < 4.0 * std::sqrt(2.0 / m));
    CHECK(std::abs(sq2 / m - 1.0) < 4.0 * std::sqrt(2.0 / m));
    CHECK(std::abs(cross / m) < 4.0 / std::sqrt(m));
}

TEST_CASE("gauss toy: canonical true parameters are inside the box") {
    const Vector theta0{-0.7, -2.9, -1.0, -0.9, 0.6};
    RngStream rng(2, 0);
    const Vector x = simulate_gaussian_toy(theta0, rng);
    CHECK(x.size() == 8);
    for (double v : x) CHECK(std::isfinite(v));
}

TEST_CASE("gauss toy: box precondition is enforced") {
    RngStream rng(3, 0);
    const Vector outside{5, 0, 1, 1, 0};
    CHECK_THROWS_AS(simulate_gaussian_toy(outside, rng), std::domain_error);
}

TEST_CASE("gauss toy: degenerate scales collapse to the mean") {
    const Vector theta{1.5, -2.0, 0.0, 0.0, 0.3};
    RngStream rng(4, 0);
    const Vector x = simulate_gaussian_toy(theta, rng);
    for (int k = 0; k < 4; ++k) {
        CHECK(x[2 * k] == 1.5);
        CHECK(x[2 * k + 1] == -2.0);
    }
}

TEST_CASE("gauss loglik: standard normal value at zero") {
    const Vector theta{0, 0, 1, 1, 0};
    const Vector x(8, 0.0);
    const LogDensity ld = gaussian_toy_loglik(theta, x);
    CHECK_FALSE(ld.singular);
    CHECK(ld.value == doctest::Approx(-4.0 * std::log(2.0 * std::numbers::pi)).epsilon(1e-12));
}

TEST_CASE("gauss loglik: exact sign-flip invariance in theta3 and theta4") {
    RngStream rng(5, 0);
    for (int t = 0; t < 50; ++t) {
        Vector theta{rng.uniform(-3, 3), rng.uniform(-4, 4), rng.uniform(-3, 3),
                     rng.uniform(-3, 3), rng.uniform(-3, 3)};
        Vector x(8);
        for (auto& v : x) v = rng.normal() * 2.0;
        const double base = gaussian_toy_loglik(theta, x).value;
        theta[2] = -theta[2];
        CHECK(gaussian_toy_loglik(theta, x).value == base);
        theta[3] = -theta[3];
        CHECK(gaussian_toy_loglik(theta, x).value == base);
    }
}

TEST_CASE("gauss loglik: singular covariance returns the -inf sentinel") {
    const Vector theta{0, 0, 0, 1, 0};
    const Vector x(8, 0.5);
    const LogDensity ld = gaussian_toy_loglik(theta, x);
    CHECK(ld.singular);
    CHECK(ld.value == -std::numeric_limits<double>::infinity());
}

TEST_CASE("gauss loglik: matches the dense-Cholesky oracle") {
    RngStream rng(6, 0);
    for (int t = 0; t < 200; ++t) {
        const Vector theta{rng.uniform(-3, 3), rng.uniform(-4, 4),
                           rng.uniform(0.2, 3),  // keep the covariance well conditioned
                           rng.uniform(0.2, 3), rng.uniform(-3, 3)};
        Vector x(8);
        for (auto& v : x) v = rng.normal() * 3.0;
        const double s1 = theta[2] * theta[2], s2 = theta[3] * theta[3];
        const double rho = std::tanh(theta[4]);
        double expect = 0.0;
        for (int k = 0; k < 4; ++k)
            expect += mvn2_logpdf_cholesky(x[2 * k] - theta[0], x[2 * k + 1] - theta[1],
                                           s1 * s1, rho * s1 * s2, s2 * s2);
        const LogDensity ld = gaussian_toy_loglik(theta, x);
        CHECK_FALSE(ld.singular);
        CHECK(ld.value == doctest::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("gauss summaries: hand-computed cases") {
    {
        Vector x{1, 2, 1, 2, 1, 2, 1, 2};
        const Vector s = summary_stats_gauss(x);
        REQUIRE(s.size() == 4);
        CHECK(s[0] == 1.0);
        CHECK(s[1] == 2.0);
        CHECK(s[2] == 0.0);
        CHECK(s[3] == 0.0);
    }
    {
        Vector x{0, 0, 2, 0, 0, 2, 2, 2};
        const Vector s = summary_stats_gauss(x);
        CHECK(s[0] == doctest::Approx(1.0));
        CHECK(s[1] == doctest::Approx(1.0));
        CHECK(s[2] == doctest::Approx(4.0 / 3.0));
        CHECK(s[3] == doctest::Approx(4.0 / 3.0));
    }
}

TEST_CASE("lotka-volterra: zero rates hold the initial state") {
    const Vector theta{0, 0, 0, 0};
    RngStream rng(7, 0);
    const SimResult res = simulate_lotka_volterra(theta, rng);
    REQUIRE(res.x.size() == 402);
    CHECK_FALSE(res.truncated);
    for (std::size_t i = 0; i < 201; ++i) {
        CHECK(res.x[2 * i] == 50.0);
        CHECK(res.x[2 * i + 1] == 100.0);
    }
}

TEST_CASE("lotka-volterra: population changes by one per event") {
    const Vector theta{0.01, 0.5, 1.0, 0.01};
    RngStream rng(8, 0);
    long px = 50, py = 100;
    long events = 0;
    LvOptions opts;
    opts.on_event = [&](double, long x, long y) {
        const long dx = std::abs(x - px), dy = std::abs(y - py);
        CHECK(dx + dy == 1);
        CHECK(x >= 0);
        CHECK(y >= 0);
        px = x;
        py = y;
        ++events;
    };
    simulate_lotka_volterra(theta, rng, opts);
    CHECK(events > 100);
}

TEST_CASE("lotka-volterra: outputs are nonnegative integers over prior draws") {
    const SimulatorModel& sim = simulator_by_name("lotka_volterra");
    for (int t = 0; t < 300; ++t) {
        RngStream rng(9, t);
        const Vector theta = sim.prior.sample(rng);
        const SimResult res = sim.sampler(theta, rng);
        REQUIRE(res.x.size() == sim.d_x);
        for (double v : res.x) {
            REQUIRE(v >= 0.0);
            REQUIRE(v == std::floor(v));
        }
    }
}

TEST_CASE("lotka-volterra: explosive dynamics trip the safety cap") {
    const Vector theta{0, 0, 2.0, 0};  // prey reproduce unchecked
    RngStream rng(10, 0);
    const SimResult res = simulate_lotka_volterra(theta, rng);
    CHECK(res.truncated);
    // last recorded value holds through the tail of the grid
    CHECK(res.x[400] == res.x[398]);
}

TEST_CASE("lotka-volterra: deterministic given the stream") {
    const Vector theta{0.01, 0.5, 1.0, 0.01};
    RngStream a(11, 3), b(11, 3);
    const SimResult ra = simulate_lotka_volterra(theta, a);
    const SimResult rb = simulate_lotka_volterra(theta, b);
    CHECK(ra.x == rb.x);
}

TEST_CASE("lv summaries: conventions and the textbook autocorrelation") {
    {
        Vector flat(402);
        for (std::size_t i = 0; i < 201; ++i) {
            flat[2 * i] = 5.0;
            flat[2 * i + 1] = 9.0;
        }
        const Vector s = summary_stats_lv(flat);
        REQUIRE(s.size() == 9);
        CHECK(s[0] == 5.0);
        CHECK(s[1] == doctest::Approx(std::log(1e-12)));
        CHECK(s[2] == 0.0);  // autocorrelation of a constant series
        CHECK(s[3] == 0.0);
        CHECK(s[8] == 0.0);  // cross-correlation convention
    }
    {
        // equal, nonconstant series: cross-correlation 1
        Vector flat(402);
        RngStream rng(12, 0);
        for (std::size_t i = 0; i < 201; ++i) {
            const double v = 50.0 + 10.0 * rng.normal();
            flat[2 * i] = v;
            flat[2 * i + 1] = v;
        }
        const Vector s = summary_stats_lv(flat);
        CHECK(s[8] == doctest::Approx(1.0).epsilon(1e-12));
    }
    {
        // independent re-implementation of lag-k autocorrelation
        Vector flat(402);
        RngStream rng(13, 0);
        for (auto& v : flat) v = rng.normal() * 3.0 + 20.0;
        const Vector s = summary_stats_lv(flat);
        for (int lag = 1; lag <= 2; ++lag) {
            double mean = 0.0;
            for (std::size_t i = 0; i < 201; ++i) mean += flat[2 * i];
            mean /= 201.0;
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < 201; ++i) {
                den += (flat[2 * i] - mean) * (flat[2 * i] - mean);
                if (i + lag < 201)
                    num += (flat[2 * i] - mean) * (flat[2 * (i + lag)] - mean);
            }
            CHECK(s[1 + lag] == doctest::Approx(num / den).epsilon(1e-12));
        }
    }
}

TEST_CASE("boom-bust: canonical parameters give 250 nonnegative integers") {
    const Vector theta0{0.4, 50, 0.09, 0.05};
    RngStream rng(14, 0);
    const Vector series = simulate_boom_bust(theta0, rng);
    REQUIRE(series.size() == 250);
    for (double v : series) {
        CHECK(v >= 0.0);
        CHECK(v == std::floor(v));
    }
}

TEST_CASE("boom-bust: zero is absorbing when beta = 0") {
    const Vector theta{0.5, 10.0, 0.001, 0.0};
    for (int t = 0; t < 20; ++t) {
        RngStream rng(15, t);
        const Vector series = simulate_boom_bust(theta, rng);
        bool seen_zero = false;
        for (double v : series) {
            if (seen_zero) CHECK(v == 0.0);
            if (v == 0.0) seen_zero = true;
        }
        CHECK(seen_zero);  // alpha this small crashes to zero quickly
    }
}

TEST_CASE("boom-bust: preconditions") {
    RngStream rng(16, 0);
    CHECK_THROWS_AS(simulate_boom_bust(Vector{0.0, 50, 0.5, 0.1}, rng), std::domain_error);
    CHECK_THROWS_AS(simulate_boom_bust(Vector{0.4, 50, 1.0, 0.1}, rng), std::domain_error);
    CHECK_THROWS_AS(simulate_boom_bust(Vector{0.4, 50, 0.5, -0.1}, rng), std::domain_error);
}

TEST_CASE("bnb summaries: degenerate-moment conventions and length") {
    Vector series(250, 7.0);
    const Vector s = summary_stats_bnb(series);
    REQUIRE(s.size() == 12);
    CHECK(s[0] == 7.0);
    CHECK(s[1] == 0.0);
    CHECK(s[2] == 0.0);
    CHECK(s[3] == 0.0);
    CHECK(s[4] == 0.0);  // lag-1 differences of a constant series
    CHECK(s[5] == 0.0);
    CHECK(s[8] == doctest::Approx(7.0 / 8.0));  // ratios use N_t + 1
}

TEST_CASE("bnb summaries: match the streaming-moments oracle") {
    RngStream rng(17, 0);
    Vector series(250);
    for (auto& v : series) v = std::floor(std::abs(rng.normal()) * 40.0);
    const Vector s = summary_stats_bnb(series);

    Vector diffs(249), ratios(249);
    for (std::size_t i = 0; i + 1 < series.size(); ++i) {
        diffs[i] = series[i + 1] - series[i];
        ratios[i] = series[i + 1] / (series[i] + 1.0);
    }
    const Vector* blocks[3] = {&series, &diffs, &ratios};
    for (int b = 0; b < 3; ++b) {
        Streaming st;
        for (double v : *blocks[b]) st.push(v);
        CHECK(s[4 * b] == doctest::Approx(st.mean).epsilon(1e-10));
        CHECK(s[4 * b + 1] == doctest::Approx(st.variance()).epsilon(1e-10));
        const double n = st.n;
        const double skew_pop = (st.m3 / n) / std::pow(st.m2 / n, 1.5);
        const double kurt_pop = (st.m4 / n) / ((st.m2 / n) * (st.m2 / n)) - 3.0;
        CHECK(s[4 * b + 2] == doctest::Approx(skew_pop).epsilon(1e-10));
        CHECK(s[4 * b + 3] == doctest::Approx(kurt_pop).epsilon(1e-10));
    }
}

TEST_CASE("registry: names, dimensions and domain checks") {
    for (const auto& name : {"gauss_toy", "lotka_volterra", "boom_bust"}) {
        const SimulatorModel& sim = simulator_by_name(name);
        CHECK(sim.name == name);
        CHECK(sim.d_theta == sim.prior.dim());
        CHECK(sim.d_summary > 0);
        RngStream rng(18, 0);
        const Vector theta = sim.prior.sample(rng);
        const SimResult res = sim.simulate(theta, rng);
        CHECK(res.x.size() == sim.d_x);
        CHECK(sim.summary(res.x).size() == sim.d_summary);
    }
    CHECK_THROWS_WITH_AS(simulator_by_name("mg1"), doctest::Contains("unknown simulator"),
                         std::invalid_argument);
    // 1000 prior draws keep the declared output length
    for (const auto& name : {"gauss_toy", "boom_bust"}) {
        const SimulatorModel& sim = simulator_by_name(name);
        for (int t = 0; t < 1000; ++t) {
            RngStream rng(19, t);
            const Vector theta = sim.prior.sample(rng);
            REQUIRE(sim.sampler(theta, rng).x.size() == sim.d_x);
        }
    }
}
