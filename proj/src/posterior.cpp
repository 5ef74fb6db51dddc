#include "bgan/posterior.hpp"

#include <cmath>
#include <stdexcept>

#include "bgan/io.hpp"

namespace bgan {

double WeightedPosterior::ess() const {
    double s = 0.0;
    for (double w : weights) s += w * w;
    return s > 0.0 ? 1.0 / s : 0.0;
}

void WeightedPosterior::validate() const {
    require(draws.rows() == weights.size(), "posterior: draw/weight count mismatch");
    double total = 0.0;
    for (double w : weights) {
        require(w >= 0.0 && std::isfinite(w), "posterior: weights must be finite and nonnegative");
        total += w;
    }
    require(std::abs(total - 1.0) <= 1e-12, "posterior: weights must sum to 1");
}

void WeightedPosterior::save(const std::string& path) const {
    Matrix joined(draws.rows(), draws.cols() + 1);
    for (std::size_t i = 0; i < draws.rows(); ++i) {
        for (std::size_t j = 0; j < draws.cols(); ++j) joined(i, j) = draws(i, j);
        joined(i, draws.cols()) = weights[i];
    }
    std::vector<std::string> header;
    for (std::size_t j = 0; j < draws.cols(); ++j)
        header.push_back("theta_" + std::to_string(j + 1));
    header.push_back("weight");
    io::write_csv(path, header, joined);
}

WeightedPosterior WeightedPosterior::load(const std::string& path) {
    const io::Csv csv = io::read_csv(path);
    require(!csv.header.empty() && csv.header.back() == "weight",
            path + ": expected a trailing weight column");
    WeightedPosterior wp;
    const std::size_t d = csv.header.size() - 1;
    wp.draws = Matrix(csv.values.rows(), d);
    wp.weights.resize(csv.values.rows());
    for (std::size_t i = 0; i < csv.values.rows(); ++i) {
        for (std::size_t j = 0; j < d; ++j) wp.draws(i, j) = csv.values(i, j);
        wp.weights[i] = csv.values(i, d);
    }
    wp.method = "uniform";
    return wp;
}

WeightedPosterior uniform_posterior(Matrix draws, std::string method) {
    WeightedPosterior wp;
    const std::size_t m = draws.rows();
    wp.draws = std::move(draws);
    wp.weights.assign(m, m > 0 ? 1.0 / static_cast<double>(m) : 0.0);
    wp.method = std::move(method);
    return wp;
}

void normalize_weights(Vector& weights) {
    double total = 0.0;
    for (double w : weights) {
        require(w >= 0.0 && std::isfinite(w), "weights must be finite and nonnegative");
        total += w;
    }
    if (total <= 0.0)
        throw std::runtime_error("degenerate importance weights: all draws have zero weight");
    for (double& w : weights) w /= total;
}

}  // namespace bgan
