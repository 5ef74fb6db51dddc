#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "bgan/matrix.hpp"
#include "bgan/rng.hpp"
#include "bgan/simulators.hpp"

namespace bgan {

struct TableMeta {
    std::string simulator;
    std::string sampler;  // "prior" or a proposal descriptor
    std::uint64_t seed = 0;
    long truncated_rows = 0;
    long retried_draws = 0;
};

/// Simulated (theta_j, X_j) pairs; immutable after generation.
struct ReferenceTable {
    Matrix theta;
    Matrix x;
    TableMeta meta;

    std::size_t rows() const { return theta.rows(); }
    std::size_t d_theta() const { return theta.cols(); }
    std::size_t d_x() const { return x.cols(); }
};

/// Draws one parameter vector per call.
using ParamSampler = std::function<Vector(RngStream&)>;

/// T rows, row j generated from RngStream(seed, j), so the table is
/// bit-identical for any worker count. Draws outside the simulator
/// domain (possible under proposals) are retried with a fresh theta
/// from the same stream and counted in the metadata.
ReferenceTable generate_table(const ParamSampler& sampler, const std::string& sampler_desc,
                              const SimulatorModel& sim, std::size_t rows, std::uint64_t seed,
                              int workers = 0);

/// Convenience: sampler = the simulator's own prior.
ReferenceTable generate_table(const SimulatorModel& sim, std::size_t rows, std::uint64_t seed,
                              int workers = 0);

void save_table(const ReferenceTable& table, const std::string& base_path);
ReferenceTable load_table(const std::string& base_path);

/// Per-column affine map to zero mean / unit sd; zero-variance columns
/// pass through unscaled. apply-then-invert is the identity to 1e-12.
struct Standardizer {
    Vector mean_theta, sd_theta;
    Vector mean_x, sd_x;

    static Standardizer fit(const ReferenceTable& table);
    static Standardizer identity(std::size_t d_theta, std::size_t d_x);

    void apply_theta(Matrix& m) const;
    void invert_theta(Matrix& m) const;
    void apply_x(Matrix& m) const;
    Vector apply_x_row(std::span<const double> row) const;

    std::string to_json() const;
    static Standardizer from_json(const std::string& text);
};

/// Training batch: rows resampled with replacement plus fresh noise.
struct Batch {
    Matrix theta;
    Matrix x;
    Matrix z;
};

Batch next_batch(const ReferenceTable& table, std::size_t batch_size, std::size_t d_z,
                 RngStream& rng);

/// Test hook: rows 0..T-1 in order (noise still fresh).
Batch identity_batch(const ReferenceTable& table, std::size_t d_z, RngStream& rng);

}  // namespace bgan
