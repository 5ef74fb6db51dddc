#include "bgan/abc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bgan/kernels.hpp"

namespace bgan {

Matrix rejection_abc(const ReferenceTable& table, std::span<const double> x0,
                     const DistanceFn& distance, double accept_fraction) {
    require(accept_fraction > 0.0 && accept_fraction <= 1.0,
            "rejection_abc: accept fraction must lie in (0, 1]");
    require(x0.size() == table.d_x(), "rejection_abc: x0 dimension mismatch");
    const std::size_t rows = table.rows();
    Vector dist(rows);
    kernels::parallel_rows(rows, [&](std::size_t i) { dist[i] = distance(table.x.row(i), x0); });

    const std::size_t keep = static_cast<std::size_t>(
        std::ceil(accept_fraction * static_cast<double>(rows)));
    std::vector<std::size_t> idx(rows);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::partial_sort(idx.begin(), idx.begin() + keep, idx.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (dist[a] != dist[b]) return dist[a] < dist[b];
                          return a < b;
                      });
    Matrix accepted(keep, table.d_theta());
    for (std::size_t i = 0; i < keep; ++i) accepted.set_row(i, table.theta.row(idx[i]));
    return accepted;
}

// Hungarian algorithm with row/column potentials; shortest augmenting
// path formulation, 1-indexed internally.
double assignment_cost(const Matrix& cost, std::vector<std::size_t>* match) {
    require(cost.rows() == cost.cols() && cost.rows() >= 1, "assignment_cost: need square cost");
    const std::size_t n = cost.rows();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> way(n + 1, 0), p(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    if (match) {
        match->assign(n, 0);
        for (std::size_t j = 1; j <= n; ++j) (*match)[p[j] - 1] = j - 1;
    }
    double total = 0.0;
    for (std::size_t j = 1; j <= n; ++j) total += cost(p[j] - 1, j - 1);
    return total;
}

namespace {

double sq_dist(const double* a, const double* b, std::size_t k) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

double sorted_ascending_sum(Vector v) {
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

}  // namespace

double w2_distance(const Matrix& points_a, const Matrix& points_b) {
    require(points_a.rows() == points_b.rows(), "w2_distance: point counts differ");
    require(points_a.cols() == points_b.cols(), "w2_distance: point dimensions differ");
    const std::size_t n = points_a.rows(), k = points_a.cols();
    require(n >= 1 && k >= 1, "w2_distance: empty point sets");

    Vector matched(n);
    if (k == 1) {
        // Sorted matching is the optimal coupling on the line.
        Vector a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = points_a(i, 0);
            b[i] = points_b(i, 0);
        }
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        for (std::size_t i = 0; i < n; ++i) {
            const double d = a[i] - b[i];
            matched[i] = d * d;
        }
    } else {
        Matrix cost(n, n);
        kernels::parallel_rows(n, [&](std::size_t i) {
            for (std::size_t j = 0; j < n; ++j)
                cost(i, j) = sq_dist(points_a.row_ptr(i), points_b.row_ptr(j), k);
        });
        std::vector<std::size_t> match;
        assignment_cost(cost, &match);
        for (std::size_t i = 0; i < n; ++i) matched[i] = cost(i, match[i]);
    }
    return std::sqrt(sorted_ascending_sum(std::move(matched)));
}

SummaryDistance::SummaryDistance(std::function<Vector(std::span<const double>)> summary,
                                 Vector scale)
    : summary_(std::move(summary)), scale_(std::move(scale)) {
    for (double& s : scale_)
        if (!(s > 0.0)) s = 1.0;
}

SummaryDistance SummaryDistance::fit(const ReferenceTable& table,
                                     std::function<Vector(std::span<const double>)> summary) {
    const std::size_t rows = table.rows();
    require(rows >= 2, "SummaryDistance::fit: need at least two rows");
    const Vector first = summary(table.x.row(0));
    const std::size_t d = first.size();
    Matrix all(rows, d);
    kernels::parallel_rows(rows, [&](std::size_t i) { all.set_row(i, summary(table.x.row(i))); });
    Vector scale(d, 1.0);
    for (std::size_t j = 0; j < d; ++j) {
        const double mean = kernels::det_sum(rows, [&](std::size_t i) { return all(i, j); }) /
                            static_cast<double>(rows);
        const double ss = kernels::det_sum(rows, [&](std::size_t i) {
            const double dd = all(i, j) - mean;
            return dd * dd;
        });
        const double var = ss / static_cast<double>(rows - 1);
        if (var > 0.0) scale[j] = std::sqrt(var);
    }
    return SummaryDistance(std::move(summary), std::move(scale));
}

double SummaryDistance::operator()(std::span<const double> x, std::span<const double> x0) const {
    const Vector sa = summary_(x);
    const Vector sb = summary_(x0);
    require(sa.size() == scale_.size() && sb.size() == scale_.size(),
            "SummaryDistance: summary width mismatch");
    double s = 0.0;
    for (std::size_t j = 0; j < sa.size(); ++j) {
        const double d = (sa[j] - sb[j]) / scale_[j];
        s += d * d;
    }
    return std::sqrt(s);
}

W2Shape w2_shape_for(const std::string& simulator_name) {
    if (simulator_name == "gauss_toy") return {4, 2};
    if (simulator_name == "lotka_volterra") return {201, 2};
    if (simulator_name == "boom_bust") return {250, 1};
    throw std::invalid_argument("w2_shape_for: unknown simulator " + simulator_name);
}

Matrix reshape_points(std::span<const double> x, const W2Shape& shape) {
    require(x.size() == shape.points * shape.dim, "reshape_points: size mismatch");
    Matrix m(shape.points, shape.dim);
    for (std::size_t i = 0; i < x.size(); ++i) m.data()[i] = x[i];
    return m;
}

DistanceFn w2_distance_fn(const W2Shape& shape) {
    return [shape](std::span<const double> x, std::span<const double> x0) {
        return w2_distance(reshape_points(x, shape), reshape_points(x0, shape));
    };
}

}  // namespace bgan
