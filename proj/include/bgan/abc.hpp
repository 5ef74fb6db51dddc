#pragma once

#include <functional>

#include "bgan/posterior.hpp"
#include "bgan/reftable.hpp"

namespace bgan {

using DistanceFn = std::function<double(std::span<const double>, std::span<const double>)>;

/// theta rows of the ceil(q*T) table entries closest to x0 under the
/// given discrepancy; ties broken by row index.
Matrix rejection_abc(const ReferenceTable& table, std::span<const double> x0,
                     const DistanceFn& distance, double accept_fraction);

/// Exact minimal-assignment optimum of the cost matrix (Hungarian
/// algorithm with potentials, O(n^3)).
double assignment_cost(const Matrix& cost, std::vector<std::size_t>* match = nullptr);

/// 2-Wasserstein distance between equal-size point clouds [n x k] under
/// the Euclidean metric: sqrt of the summed squared distances beneath
/// the optimal pairing. One-dimensional clouds reduce to sorted-order
/// matching. Matched costs are summed in ascending order, so the value
/// is invariant to row shuffles of either side, bit for bit.
double w2_distance(const Matrix& points_a, const Matrix& points_b);

/// Euclidean distance between summary vectors, each coordinate divided
/// by its scale (fitted table-wide; zero scales pass through).
class SummaryDistance {
public:
    SummaryDistance(std::function<Vector(std::span<const double>)> summary, Vector scale);

    /// Scales = per-coordinate sd of the summaries over the table rows.
    static SummaryDistance fit(const ReferenceTable& table,
                               std::function<Vector(std::span<const double>)> summary);

    double operator()(std::span<const double> x, std::span<const double> x0) const;
    const Vector& scale() const { return scale_; }

private:
    std::function<Vector(std::span<const double>)> summary_;
    Vector scale_;
};

/// Reshapes a flat simulator output into the point cloud the W2 baseline
/// compares: (points x dim), row-major as stored.
struct W2Shape {
    std::size_t points = 0;
    std::size_t dim = 0;
};
W2Shape w2_shape_for(const std::string& simulator_name);
Matrix reshape_points(std::span<const double> x, const W2Shape& shape);

DistanceFn w2_distance_fn(const W2Shape& shape);

}  // namespace bgan
