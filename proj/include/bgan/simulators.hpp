#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bgan/matrix.hpp"
#include "bgan/priors.hpp"
#include "bgan/rng.hpp"

namespace bgan {

struct SimResult {
    Vector x;
    bool truncated = false;
};

/// Named implicit model: prior, forward sampler, tractable log-likelihood
/// when available, and a summary-statistic map. `domain_ok` is the
/// mathematical validity region of the sampler, which is wider than the
/// prior box (proposal-generated tables keep out-of-box rows).
struct SimulatorModel {
    std::string name;
    std::size_t d_theta = 0;
    std::size_t d_x = 0;
    UniformBoxPrior prior;
    std::function<bool(std::span<const double>)> domain_ok;
    std::function<SimResult(std::span<const double>, RngStream&)> sampler;
    std::function<double(std::span<const double>, std::span<const double>)> log_lik;  // may be null
    std::size_t d_summary = 0;
    std::function<Vector(std::span<const double>)> summary;  // may be null

    SimResult simulate(std::span<const double> theta, RngStream& rng) const;
};

/// Registry keyed by {gauss_toy, lotka_volterra, boom_bust}.
const SimulatorModel& simulator_by_name(const std::string& name);
std::vector<std::string> simulator_names();

// --- gauss_toy: n=4 bivariate normals -------------------------------
// mean (t1,t2); s1 = t3^2, s2 = t4^2, rho = tanh(t5);
// cov = [[s1^2, rho s1 s2], [rho s1 s2, s2^2]].

/// Checked variant: theta must lie in the prior box.
Vector simulate_gaussian_toy(std::span<const double> theta, RngStream& rng);

struct LogDensity {
    double value;
    bool singular;
};
/// Sum of the four bivariate normal log-densities; -inf with the
/// singular flag when s1 s2 = 0 (|rho| < 1 always holds via tanh).
LogDensity gaussian_toy_loglik(std::span<const double> theta, std::span<const double> x);

Vector summary_stats_gauss(std::span<const double> x);

// --- lotka_volterra: Gillespie jump process --------------------------
// rates r1 = t1 x y (predator born), r2 = t2 x (predator dies),
// r3 = t3 y (prey born), r4 = t4 x y (prey dies); start (50, 100);
// recorded on t = 0.0, 0.1, ..., 20.0 and flattened (x_t, y_t) pairs.

struct LvOptions {
    long max_events = 1000000;
    long max_population = 100000;
    // Per-event hook for tests: (time, predators, prey) after each jump.
    std::function<void(double, long, long)> on_event;
};

SimResult simulate_lotka_volterra(std::span<const double> theta, RngStream& rng,
                                  const LvOptions& opts = {});

Vector summary_stats_lv(std::span<const double> series);

// --- boom_bust: discrete recruitment process -------------------------
// N' ~ Poisson(N(1+r)) + eps if N <= kappa else Binomial(N, alpha) + eps,
// eps ~ Poisson(beta); N0 = 10, 50 burn-in steps, 250 recorded.

Vector simulate_boom_bust(std::span<const double> theta, RngStream& rng);

Vector summary_stats_bnb(std::span<const double> series);

/// mean, sample variance, moment skewness, excess kurtosis; the
/// degenerate zero-variance case maps skewness and kurtosis to 0.
struct Moments {
    double mean, variance, skewness, kurtosis;
};
Moments four_moments(std::span<const double> z);

}  // namespace bgan
