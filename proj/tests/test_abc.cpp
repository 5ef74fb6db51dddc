#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bgan/abc.hpp"

using namespace bgan;

namespace {

double brute_force_assignment(const Matrix& cost) {
    const std::size_t n = cost.rows();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += cost(i, perm[i]);
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

Matrix random_points(std::size_t n, std::size_t k, RngStream& rng, double scale = 1.0) {
    Matrix m(n, k);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
    return m;
}

}  // namespace

TEST_CASE("hungarian equals brute force on 200 random instances") {
    RngStream rng(1, 0);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 1 + rng.uniform_index(6);
        Matrix cost(n, n);
        for (std::size_t i = 0; i < cost.size(); ++i) cost.data()[i] = rng.uniform(0, 10);
        const double solver = assignment_cost(cost);
        const double brute = brute_force_assignment(cost);
        CHECK(solver == doctest::Approx(brute).epsilon(1e-12));
    }
}

TEST_CASE("w2: identical point sets have distance zero") {
    RngStream rng(2, 0);
    const Matrix a = random_points(8, 3, rng);
    CHECK(w2_distance(a, a) == 0.0);
}

TEST_CASE("w2: single points reduce to the euclidean distance") {
    Matrix a(1, 2), b(1, 2);
    a(0, 0) = 1.0; a(0, 1) = 2.0;
    b(0, 0) = 4.0; b(0, 1) = 6.0;
    CHECK(w2_distance(a, b) == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("w2: matches brute-force permutation minimum on small clouds") {
    RngStream rng(3, 0);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 2 + rng.uniform_index(5);
        const std::size_t k = 1 + rng.uniform_index(3);
        const Matrix a = random_points(n, k, rng);
        const Matrix b = random_points(n, k, rng);
        Matrix cost(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double s = 0.0;
                for (std::size_t c = 0; c < k; ++c) {
                    const double d = a(i, c) - b(j, c);
                    s += d * d;
                }
                cost(i, j) = s;
            }
        CHECK(w2_distance(a, b) ==
              doctest::Approx(std::sqrt(brute_force_assignment(cost))).epsilon(1e-10));
    }
}

TEST_CASE("w2: exact symmetry and shuffle invariance") {
    RngStream rng(4, 0);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 3 + rng.uniform_index(8);
        const std::size_t k = 1 + rng.uniform_index(3);
        const Matrix a = random_points(n, k, rng);
        const Matrix b = random_points(n, k, rng);
        const double d = w2_distance(a, b);
        CHECK(d >= 0.0);
        CHECK(w2_distance(b, a) == d);

        // shuffle the rows of a
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        for (std::size_t i = n; i-- > 1;) std::swap(perm[i], perm[rng.uniform_index(i + 1)]);
        Matrix shuffled(n, k);
        for (std::size_t i = 0; i < n; ++i) shuffled.set_row(i, a.row(perm[i]));
        CHECK(w2_distance(shuffled, b) == d);

        // identity of indiscernibles for distinct multisets
        Matrix c = a;
        c(0, 0) += 0.5;
        CHECK(w2_distance(c, a) > 0.0);
    }
}

TEST_CASE("w2: one-dimensional sorted matching equals the assignment optimum") {
    RngStream rng(5, 0);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 2 + rng.uniform_index(5);
        const Matrix a = random_points(n, 1, rng);
        const Matrix b = random_points(n, 1, rng);
        Matrix cost(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                cost(i, j) = (a(i, 0) - b(j, 0)) * (a(i, 0) - b(j, 0));
        CHECK(w2_distance(a, b) ==
              doctest::Approx(std::sqrt(brute_force_assignment(cost))).epsilon(1e-12));
    }
    Matrix a(3, 1), b(4, 1);
    CHECK_THROWS_AS(w2_distance(a, b), std::invalid_argument);
}

TEST_CASE("rejection abc: acceptance size, ordering and ties") {
    const SimulatorModel& sim = simulator_by_name("gauss_toy");
    const ReferenceTable table = generate_table(sim, 200, 1);
    const Vector x0(8, 0.0);
    auto euclid = [](std::span<const double> a, std::span<const double> b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
        return std::sqrt(s);
    };

    const Matrix all = rejection_abc(table, x0, euclid, 1.0);
    CHECK(all.rows() == 200);

    const Matrix top = rejection_abc(table, x0, euclid, 0.01);
    CHECK(top.rows() == 2);  // ceil(0.01 * 200)

    // constant distance: ties broken by row index
    auto constant = [](std::span<const double>, std::span<const double>) { return 1.0; };
    const Matrix first = rejection_abc(table, x0, constant, 0.02);
    CHECK(first.rows() == 4);
    for (std::size_t i = 0; i < first.rows(); ++i)
        for (std::size_t j = 0; j < first.cols(); ++j) CHECK(first(i, j) == table.theta(i, j));

    // exactly one zero-distance row at fraction 1/T
    auto pick_row_42 = [&table](std::span<const double> x, std::span<const double>) {
        return x.data() == table.x.row_ptr(42) ? 0.0 : 1.0;
    };
    const Matrix one = rejection_abc(table, x0, pick_row_42, 1.0 / 200.0);
    REQUIRE(one.rows() == 1);
    for (std::size_t j = 0; j < one.cols(); ++j) CHECK(one(0, j) == table.theta(42, j));

    CHECK_THROWS_AS(rejection_abc(table, x0, euclid, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(rejection_abc(table, x0, euclid, 1.5), std::invalid_argument);
}

TEST_CASE("summary distance: identity, symmetry and the triangle inequality") {
    const SimulatorModel& sim = simulator_by_name("gauss_toy");
    const ReferenceTable table = generate_table(sim, 300, 2);
    const SummaryDistance dist = SummaryDistance::fit(table, sim.summary);

    RngStream rng(6, 0);
    for (int t = 0; t < 100; ++t) {
        Vector a(8), b(8), c(8);
        for (std::size_t i = 0; i < 8; ++i) {
            a[i] = rng.normal() * 2;
            b[i] = rng.normal() * 2;
            c[i] = rng.normal() * 2;
        }
        CHECK(dist(a, a) == 0.0);
        CHECK(dist(a, b) == dist(b, a));
        CHECK(dist(a, c) <= dist(a, b) + dist(b, c) + 1e-12);
    }
    for (double s : dist.scale()) CHECK(s > 0.0);
}

TEST_CASE("w2 shapes per simulator") {
    CHECK(w2_shape_for("gauss_toy").points == 4);
    CHECK(w2_shape_for("gauss_toy").dim == 2);
    CHECK(w2_shape_for("lotka_volterra").points == 201);
    CHECK(w2_shape_for("boom_bust").dim == 1);
    CHECK_THROWS_AS(w2_shape_for("nope"), std::invalid_argument);

    Vector x{1, 2, 3, 4, 5, 6, 7, 8};
    const Matrix pts = reshape_points(x, w2_shape_for("gauss_toy"));
    CHECK(pts.rows() == 4);
    CHECK(pts(1, 0) == 3.0);
    CHECK(pts(1, 1) == 4.0);
}
