#include "bgan/reftable.hpp"

#include <omp.h>

#include <atomic>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "bgan/io.hpp"
#include "bgan/kernels.hpp"

namespace bgan {

namespace {
constexpr int kMaxRetries = 1000;
}

ReferenceTable generate_table(const ParamSampler& sampler, const std::string& sampler_desc,
                              const SimulatorModel& sim, std::size_t rows, std::uint64_t seed,
                              int workers) {
    require(rows >= 1, "generate_table: need at least one row");
    ReferenceTable table;
    table.theta = Matrix(rows, sim.d_theta);
    table.x = Matrix(rows, sim.d_x);
    table.meta.simulator = sim.name;
    table.meta.sampler = sampler_desc;
    table.meta.seed = seed;

    std::atomic<long> truncated{0}, retried{0};
    std::atomic<bool> failed{false};
    const int nthreads = workers > 0 ? workers : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic, 16) num_threads(nthreads)
    for (std::int64_t j = 0; j < static_cast<std::int64_t>(rows); ++j) {
        if (failed.load(std::memory_order_relaxed)) continue;
        RngStream rs(seed, static_cast<std::uint64_t>(j));
        int attempts = 0;
        for (;;) {
            Vector theta = sampler(rs);
            if (theta.size() != sim.d_theta) {
                failed.store(true);
                break;
            }
            if (!sim.domain_ok(theta)) {
                if (++attempts >= kMaxRetries) {
                    failed.store(true);
                    break;
                }
                retried.fetch_add(1, std::memory_order_relaxed);
                continue;
            }
            SimResult res = sim.sampler(theta, rs);
            if (res.truncated) truncated.fetch_add(1, std::memory_order_relaxed);
            table.theta.set_row(static_cast<std::size_t>(j), theta);
            table.x.set_row(static_cast<std::size_t>(j), res.x);
            break;
        }
    }
    if (failed.load())
        throw std::runtime_error("generate_table: sampler kept leaving the simulator domain");
    table.meta.truncated_rows = truncated.load();
    table.meta.retried_draws = retried.load();
    return table;
}

ReferenceTable generate_table(const SimulatorModel& sim, std::size_t rows, std::uint64_t seed,
                              int workers) {
    const UniformBoxPrior& prior = sim.prior;
    return generate_table([&prior](RngStream& rng) { return prior.sample(rng); }, "prior", sim,
                          rows, seed, workers);
}

void save_table(const ReferenceTable& table, const std::string& base_path) {
    Matrix joined(table.rows(), table.d_theta() + table.d_x());
    kernels::parallel_rows(table.rows(), [&](std::size_t i) {
        double* r = joined.row_ptr(i);
        const double* t = table.theta.row_ptr(i);
        const double* x = table.x.row_ptr(i);
        for (std::size_t j = 0; j < table.d_theta(); ++j) r[j] = t[j];
        for (std::size_t j = 0; j < table.d_x(); ++j) r[table.d_theta() + j] = x[j];
    });
    std::vector<std::string> header;
    for (std::size_t j = 0; j < table.d_theta(); ++j) header.push_back("theta_" + std::to_string(j + 1));
    for (std::size_t j = 0; j < table.d_x(); ++j) header.push_back("x_" + std::to_string(j + 1));
    io::write_csv(base_path + ".table.csv", header, joined);

    nlohmann::json meta;
    meta["simulator"] = table.meta.simulator;
    meta["sampler"] = table.meta.sampler;
    meta["seed"] = table.meta.seed;
    meta["rows"] = table.rows();
    meta["d_theta"] = table.d_theta();
    meta["d_x"] = table.d_x();
    meta["truncated_rows"] = table.meta.truncated_rows;
    meta["retried_draws"] = table.meta.retried_draws;
    io::write_file(base_path + ".meta.json", meta.dump(2) + "\n");
}

ReferenceTable load_table(const std::string& base_path) {
    const nlohmann::json meta = nlohmann::json::parse(io::read_file(base_path + ".meta.json"));
    const io::Csv csv = io::read_csv(base_path + ".table.csv");
    const std::size_t d_theta = meta.at("d_theta").get<std::size_t>();
    const std::size_t d_x = meta.at("d_x").get<std::size_t>();
    if (csv.values.cols() != d_theta + d_x)
        throw std::runtime_error(base_path + ": table width does not match metadata");
    ReferenceTable table;
    table.theta = Matrix(csv.values.rows(), d_theta);
    table.x = Matrix(csv.values.rows(), d_x);
    for (std::size_t i = 0; i < csv.values.rows(); ++i) {
        const double* r = csv.values.row_ptr(i);
        for (std::size_t j = 0; j < d_theta; ++j) table.theta(i, j) = r[j];
        for (std::size_t j = 0; j < d_x; ++j) table.x(i, j) = r[d_theta + j];
    }
    table.meta.simulator = meta.at("simulator").get<std::string>();
    table.meta.sampler = meta.at("sampler").get<std::string>();
    table.meta.seed = meta.at("seed").get<std::uint64_t>();
    table.meta.truncated_rows = meta.at("truncated_rows").get<long>();
    table.meta.retried_draws = meta.at("retried_draws").get<long>();
    return table;
}

// --- standardizer -----------------------------------------------------

namespace {

void column_stats(const Matrix& m, Vector& mean, Vector& sd) {
    const std::size_t rows = m.rows(), cols = m.cols();
    mean.assign(cols, 0.0);
    sd.assign(cols, 1.0);
    if (rows < 2) return;
    for (std::size_t j = 0; j < cols; ++j) {
        double s = kernels::det_sum(rows, [&](std::size_t i) { return m(i, j); });
        mean[j] = s / static_cast<double>(rows);
        double ss = kernels::det_sum(rows, [&](std::size_t i) {
            const double d = m(i, j) - mean[j];
            return d * d;
        });
        const double var = ss / static_cast<double>(rows - 1);
        if (var > 0.0)
            sd[j] = std::sqrt(var);
        else
            mean[j] = 0.0;  // zero-variance column passes through untouched
    }
}

void affine(Matrix& m, const Vector& mean, const Vector& sd, bool invert) {
    require(m.cols() == mean.size(), "standardizer: width mismatch");
    kernels::parallel_rows(m.rows(), [&](std::size_t i) {
        double* r = m.row_ptr(i);
        for (std::size_t j = 0; j < m.cols(); ++j)
            r[j] = invert ? r[j] * sd[j] + mean[j] : (r[j] - mean[j]) / sd[j];
    });
}

}  // namespace

Standardizer Standardizer::fit(const ReferenceTable& table) {
    require(table.rows() >= 2, "Standardizer::fit: need at least two rows");
    Standardizer s;
    column_stats(table.theta, s.mean_theta, s.sd_theta);
    column_stats(table.x, s.mean_x, s.sd_x);
    return s;
}

Standardizer Standardizer::identity(std::size_t d_theta, std::size_t d_x) {
    Standardizer s;
    s.mean_theta.assign(d_theta, 0.0);
    s.sd_theta.assign(d_theta, 1.0);
    s.mean_x.assign(d_x, 0.0);
    s.sd_x.assign(d_x, 1.0);
    return s;
}

void Standardizer::apply_theta(Matrix& m) const { affine(m, mean_theta, sd_theta, false); }
void Standardizer::invert_theta(Matrix& m) const { affine(m, mean_theta, sd_theta, true); }
void Standardizer::apply_x(Matrix& m) const { affine(m, mean_x, sd_x, false); }

Vector Standardizer::apply_x_row(std::span<const double> row) const {
    require(row.size() == mean_x.size(), "standardizer: row width mismatch");
    Vector out(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) out[j] = (row[j] - mean_x[j]) / sd_x[j];
    return out;
}

std::string Standardizer::to_json() const {
    nlohmann::json j;
    j["mean_theta"] = mean_theta;
    j["sd_theta"] = sd_theta;
    j["mean_x"] = mean_x;
    j["sd_x"] = sd_x;
    return j.dump();
}

Standardizer Standardizer::from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    Standardizer s;
    s.mean_theta = j.at("mean_theta").get<Vector>();
    s.sd_theta = j.at("sd_theta").get<Vector>();
    s.mean_x = j.at("mean_x").get<Vector>();
    s.sd_x = j.at("sd_x").get<Vector>();
    return s;
}

// --- batching -----------------------------------------------------------

namespace {

Batch assemble_batch(const ReferenceTable& table, const std::vector<std::size_t>& idx,
                     std::size_t d_z, RngStream& rng) {
    Batch b;
    b.theta = Matrix(idx.size(), table.d_theta());
    b.x = Matrix(idx.size(), table.d_x());
    b.z = Matrix(idx.size(), d_z);
    // Noise is refreshed for every batch, never pre-sampled and reused.
    for (std::size_t i = 0; i < b.z.size(); ++i) b.z.data()[i] = rng.normal();
    kernels::parallel_rows(idx.size(), [&](std::size_t i) {
        b.theta.set_row(i, table.theta.row(idx[i]));
        b.x.set_row(i, table.x.row(idx[i]));
    });
    return b;
}

}  // namespace

Batch next_batch(const ReferenceTable& table, std::size_t batch_size, std::size_t d_z,
                 RngStream& rng) {
    require(batch_size >= 1, "next_batch: batch size must be positive");
    std::vector<std::size_t> idx(batch_size);
    for (auto& i : idx) i = static_cast<std::size_t>(rng.uniform_index(table.rows()));
    return assemble_batch(table, idx, d_z, rng);
}

Batch identity_batch(const ReferenceTable& table, std::size_t d_z, RngStream& rng) {
    std::vector<std::size_t> idx(table.rows());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return assemble_batch(table, idx, d_z, rng);
}

}  // namespace bgan
