#pragma once

#include <string>

#include "bgan/matrix.hpp"

namespace bgan {

/// Parameter draws with normalized importance weights.
struct WeightedPosterior {
    Matrix draws;    // [M x d_theta]
    Vector weights;  // nonnegative, sums to 1
    std::string method;  // kde | classifier | uniform

    double ess() const;  // 1 / sum(w^2)
    void validate() const;

    void save(const std::string& path) const;
    static WeightedPosterior load(const std::string& path);
};

WeightedPosterior uniform_posterior(Matrix draws, std::string method = "uniform");

/// Normalizes nonnegative unnormalized weights in place; throws when the
/// total mass is zero (proposal entirely off-support).
void normalize_weights(Vector& weights);

}  // namespace bgan
