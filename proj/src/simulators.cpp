#include "bgan/simulators.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace bgan {

SimResult SimulatorModel::simulate(std::span<const double> theta, RngStream& rng) const {
    if (theta.size() != d_theta)
        throw std::invalid_argument(name + ": theta dimension mismatch");
    if (domain_ok && !domain_ok(theta))
        throw std::domain_error(name + ": theta outside simulator domain");
    return sampler(theta, rng);
}

// --- gauss_toy --------------------------------------------------------

namespace {

constexpr std::size_t kGaussPairs = 4;

void gauss_check_dim(std::span<const double> theta) {
    if (theta.size() != 5) throw std::invalid_argument("gauss_toy: theta must have length 5");
}

Vector gauss_core(std::span<const double> theta, RngStream& rng) {
    const double s1 = theta[2] * theta[2];
    const double s2 = theta[3] * theta[3];
    const double rho = std::tanh(theta[4]);
    // Cholesky factor of [[s1^2, rho s1 s2], [rho s1 s2, s2^2]];
    // degenerate scales collapse to point draws at the mean.
    const double l11 = s1;
    const double l21 = rho * s2;
    const double l22 = s2 * std::sqrt(1.0 - rho * rho);
    Vector x(2 * kGaussPairs);
    for (std::size_t k = 0; k < kGaussPairs; ++k) {
        const double z1 = rng.normal();
        const double z2 = rng.normal();
        x[2 * k] = theta[0] + l11 * z1;
        x[2 * k + 1] = theta[1] + l21 * z1 + l22 * z2;
    }
    return x;
}

}  // namespace

Vector simulate_gaussian_toy(std::span<const double> theta, RngStream& rng) {
    gauss_check_dim(theta);
    if (!simulator_by_name("gauss_toy").prior.contains(theta))
        throw std::domain_error("gauss_toy: theta outside the prior box");
    return gauss_core(theta, rng);
}

LogDensity gaussian_toy_loglik(std::span<const double> theta, std::span<const double> x) {
    gauss_check_dim(theta);
    if (x.size() != 2 * kGaussPairs)
        throw std::invalid_argument("gauss_toy: data must have length 8");
    const double s1 = theta[2] * theta[2];
    const double s2 = theta[3] * theta[3];
    const double rho = std::tanh(theta[4]);
    const double v1 = s1 * s1, v2 = s2 * s2, c12 = rho * s1 * s2;
    const double det = v1 * v2 - c12 * c12;
    if (!(det > 0.0) || s1 <= 0.0 || s2 <= 0.0)
        return {-std::numeric_limits<double>::infinity(), true};
    const double inv11 = v2 / det, inv22 = v1 / det, inv12 = -c12 / det;
    double ll = 0.0;
    for (std::size_t k = 0; k < kGaussPairs; ++k) {
        const double d1 = x[2 * k] - theta[0];
        const double d2 = x[2 * k + 1] - theta[1];
        const double quad = d1 * d1 * inv11 + 2.0 * d1 * d2 * inv12 + d2 * d2 * inv22;
        ll += -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det) - 0.5 * quad;
    }
    return {ll, false};
}

Vector summary_stats_gauss(std::span<const double> x) {
    if (x.size() != 2 * kGaussPairs)
        throw std::invalid_argument("summary_stats_gauss: data must have length 8");
    Vector out(4, 0.0);
    for (std::size_t c = 0; c < 2; ++c) {
        double mean = 0.0;
        for (std::size_t k = 0; k < kGaussPairs; ++k) mean += x[2 * k + c];
        mean /= kGaussPairs;
        double ss = 0.0;
        for (std::size_t k = 0; k < kGaussPairs; ++k) {
            const double d = x[2 * k + c] - mean;
            ss += d * d;
        }
        out[c] = mean;
        out[2 + c] = ss / (kGaussPairs - 1);
    }
    return out;
}

// --- lotka_volterra ---------------------------------------------------

namespace {

constexpr std::size_t kLvPoints = 201;
constexpr double kLvDt = 0.1;
constexpr long kLvX0 = 50;
constexpr long kLvY0 = 100;

}  // namespace

SimResult simulate_lotka_volterra(std::span<const double> theta, RngStream& rng,
                                  const LvOptions& opts) {
    if (theta.size() != 4) throw std::invalid_argument("lotka_volterra: theta must have length 4");
    for (double t : theta)
        if (!(t >= 0.0)) throw std::domain_error("lotka_volterra: rates must be nonnegative");

    SimResult res;
    res.x.assign(2 * kLvPoints, 0.0);
    long x = kLvX0, y = kLvY0;
    double t = 0.0;
    std::size_t grid = 0;
    long events = 0;

    auto record_until = [&](double horizon) {
        while (grid < kLvPoints && static_cast<double>(grid) * kLvDt <= horizon + 1e-12) {
            res.x[2 * grid] = static_cast<double>(x);
            res.x[2 * grid + 1] = static_cast<double>(y);
            ++grid;
        }
    };

    while (grid < kLvPoints) {
        const double xy = static_cast<double>(x) * static_cast<double>(y);
        const double r1 = theta[0] * xy;                      // predator born
        const double r2 = theta[1] * static_cast<double>(x);  // predator dies
        const double r3 = theta[2] * static_cast<double>(y);  // prey born
        const double r4 = theta[3] * xy;                      // prey dies
        const double total = r1 + r2 + r3 + r4;
        if (total <= 0.0) break;  // absorbing state, hold to the horizon
        t += rng.exponential(total);
        record_until(std::min(t, kLvPoints * kLvDt));
        if (grid >= kLvPoints) break;
        const double u = rng.uniform() * total;
        if (u < r1)
            ++x;
        else if (u < r1 + r2)
            --x;
        else if (u < r1 + r2 + r3)
            ++y;
        else
            --y;
        ++events;
        if (opts.on_event) opts.on_event(t, x, y);
        if (events >= opts.max_events || x > opts.max_population || y > opts.max_population) {
            res.truncated = true;
            break;
        }
    }
    // Fill the remaining grid with the final state (absorbed or truncated).
    while (grid < kLvPoints) {
        res.x[2 * grid] = static_cast<double>(x);
        res.x[2 * grid + 1] = static_cast<double>(y);
        ++grid;
    }
    return res;
}

namespace {

struct SeriesStats {
    double mean, var, ac1, ac2;
};

// Textbook autocorrelation with the constant-series-maps-to-zero rule.
SeriesStats series_stats(const double* z, std::size_t n, std::size_t stride) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += z[i * stride];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = z[i * stride] - mean;
        ss += d * d;
    }
    SeriesStats s{mean, ss / static_cast<double>(n - 1), 0.0, 0.0};
    if (ss > 0.0) {
        double c1 = 0.0, c2 = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i)
            c1 += (z[i * stride] - mean) * (z[(i + 1) * stride] - mean);
        for (std::size_t i = 0; i + 2 < n; ++i)
            c2 += (z[i * stride] - mean) * (z[(i + 2) * stride] - mean);
        s.ac1 = c1 / ss;
        s.ac2 = c2 / ss;
    }
    return s;
}

constexpr double kVarianceGuard = 1e-12;

}  // namespace

Vector summary_stats_lv(std::span<const double> series) {
    if (series.size() != 2 * kLvPoints)
        throw std::invalid_argument("summary_stats_lv: series must have length 402");
    const SeriesStats sx = series_stats(series.data(), kLvPoints, 2);
    const SeriesStats sy = series_stats(series.data() + 1, kLvPoints, 2);
    double cross = 0.0;
    {
        double cov = 0.0, vx = 0.0, vy = 0.0;
        for (std::size_t i = 0; i < kLvPoints; ++i) {
            const double dx = series[2 * i] - sx.mean;
            const double dy = series[2 * i + 1] - sy.mean;
            cov += dx * dy;
            vx += dx * dx;
            vy += dy * dy;
        }
        if (vx > 0.0 && vy > 0.0) cross = cov / std::sqrt(vx * vy);
    }
    return {sx.mean, std::log(sx.var + kVarianceGuard), sx.ac1, sx.ac2,
            sy.mean, std::log(sy.var + kVarianceGuard), sy.ac1, sy.ac2, cross};
}

// --- boom_bust ----------------------------------------------------------

namespace {
constexpr std::size_t kBnbRecorded = 250;
constexpr std::size_t kBnbBurnin = 50;
constexpr long kBnbStart = 10;
}  // namespace

Vector simulate_boom_bust(std::span<const double> theta, RngStream& rng) {
    if (theta.size() != 4) throw std::invalid_argument("boom_bust: theta must have length 4");
    const double r = theta[0], kappa = theta[1], alpha = theta[2], beta = theta[3];
    if (!(r > 0.0) || !(kappa > 0.0) || !(alpha > 0.0 && alpha < 1.0) || !(beta >= 0.0))
        throw std::domain_error("boom_bust: need r > 0, kappa > 0, alpha in (0,1), beta >= 0");

    Vector out(kBnbRecorded);
    long n = kBnbStart;
    for (std::size_t t = 0; t < kBnbBurnin + kBnbRecorded; ++t) {
        long next;
        if (static_cast<double>(n) <= kappa)
            next = rng.poisson(static_cast<double>(n) * (1.0 + r));
        else
            next = rng.binomial(n, alpha);
        next += beta > 0.0 ? rng.poisson(beta) : 0;
        n = next;
        if (t >= kBnbBurnin) out[t - kBnbBurnin] = static_cast<double>(n);
    }
    return out;
}

Moments four_moments(std::span<const double> z) {
    require(z.size() >= 2, "four_moments: need at least two values");
    const double n = static_cast<double>(z.size());
    double mean = 0.0;
    for (double v : z) mean += v;
    mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : z) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    Moments m{mean, m2 * n / (n - 1.0), 0.0, 0.0};
    if (m2 > 0.0) {
        m.skewness = m3 / std::pow(m2, 1.5);
        m.kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return m;
}

Vector summary_stats_bnb(std::span<const double> series) {
    if (series.size() != kBnbRecorded)
        throw std::invalid_argument("summary_stats_bnb: series must have length 250");
    Vector diffs(series.size() - 1), ratios(series.size() - 1);
    for (std::size_t i = 0; i + 1 < series.size(); ++i) {
        diffs[i] = series[i + 1] - series[i];
        ratios[i] = series[i + 1] / (series[i] + 1.0);  // +1 guards zero populations
    }
    Vector out;
    out.reserve(12);
    for (const auto& block : {std::span<const double>(series), std::span<const double>(diffs),
                              std::span<const double>(ratios)}) {
        const Moments m = four_moments(block);
        out.push_back(m.mean);
        out.push_back(m.variance);
        out.push_back(m.skewness);
        out.push_back(m.kurtosis);
    }
    return out;
}

// --- registry -----------------------------------------------------------

namespace {

SimulatorModel make_gauss_toy() {
    SimulatorModel m;
    m.name = "gauss_toy";
    m.d_theta = 5;
    m.d_x = 8;
    m.prior = UniformBoxPrior({-3, -4, -3, -3, -3}, {3, 4, 3, 3, 3});
    m.domain_ok = [](std::span<const double> theta) {
        for (double t : theta)
            if (!std::isfinite(t)) return false;
        return true;
    };
    m.sampler = [](std::span<const double> theta, RngStream& rng) {
        return SimResult{gauss_core(theta, rng), false};
    };
    m.log_lik = [](std::span<const double> theta, std::span<const double> x) {
        return gaussian_toy_loglik(theta, x).value;
    };
    m.d_summary = 4;
    m.summary = [](std::span<const double> x) { return summary_stats_gauss(x); };
    return m;
}

SimulatorModel make_lv() {
    SimulatorModel m;
    m.name = "lotka_volterra";
    m.d_theta = 4;
    m.d_x = 2 * kLvPoints;
    m.prior = UniformBoxPrior({0, 0, 0, 0}, {0.1, 1.0, 2.0, 0.1});
    m.domain_ok = [](std::span<const double> theta) {
        for (double t : theta)
            if (!(t >= 0.0) || !std::isfinite(t)) return false;
        return true;
    };
    m.sampler = [](std::span<const double> theta, RngStream& rng) {
        return simulate_lotka_volterra(theta, rng);
    };
    m.d_summary = 9;
    m.summary = [](std::span<const double> x) { return summary_stats_lv(x); };
    return m;
}

SimulatorModel make_bnb() {
    SimulatorModel m;
    m.name = "boom_bust";
    m.d_theta = 4;
    m.d_x = kBnbRecorded;
    m.prior = UniformBoxPrior({0, 10, 0, 0}, {1, 80, 1, 1});
    m.domain_ok = [](std::span<const double> theta) {
        return theta[0] > 0.0 && theta[1] > 0.0 && theta[2] > 0.0 && theta[2] < 1.0 &&
               theta[3] >= 0.0;
    };
    m.sampler = [](std::span<const double> theta, RngStream& rng) {
        return SimResult{simulate_boom_bust(theta, rng), false};
    };
    m.d_summary = 12;
    m.summary = [](std::span<const double> x) { return summary_stats_bnb(x); };
    return m;
}

const std::map<std::string, SimulatorModel>& registry() {
    static const std::map<std::string, SimulatorModel> reg = [] {
        std::map<std::string, SimulatorModel> r;
        r.emplace("gauss_toy", make_gauss_toy());
        r.emplace("lotka_volterra", make_lv());
        r.emplace("boom_bust", make_bnb());
        return r;
    }();
    return reg;
}

}  // namespace

const SimulatorModel& simulator_by_name(const std::string& name) {
    const auto& reg = registry();
    auto it = reg.find(name);
    if (it == reg.end())
        throw std::invalid_argument("unknown simulator '" + name +
                                    "'; expected gauss_toy, lotka_volterra or boom_bust");
    return it->second;
}

std::vector<std::string> simulator_names() {
    std::vector<std::string> names;
    for (const auto& [k, v] : registry()) names.push_back(k);
    return names;
}

}  // namespace bgan
