#pragma once

#include <cmath>
#include <limits>
#include <span>

#include "bgan/matrix.hpp"
#include "bgan/rng.hpp"

namespace bgan {

/// Product of independent uniforms on [lows_i, highs_i].
struct UniformBoxPrior {
    Vector lows;
    Vector highs;

    UniformBoxPrior() = default;
    UniformBoxPrior(Vector lo, Vector hi) : lows(std::move(lo)), highs(std::move(hi)) {
        require(lows.size() == highs.size() && !lows.empty(), "prior: bad box");
        for (std::size_t i = 0; i < lows.size(); ++i)
            require(lows[i] < highs[i], "prior: lows must be strictly below highs");
    }

    std::size_t dim() const { return lows.size(); }

    bool contains(std::span<const double> theta) const {
        if (theta.size() != dim()) return false;
        for (std::size_t i = 0; i < dim(); ++i)
            if (theta[i] < lows[i] || theta[i] > highs[i]) return false;
        return true;
    }

    double log_density(std::span<const double> theta) const {
        if (!contains(theta)) return -std::numeric_limits<double>::infinity();
        double s = 0.0;
        for (std::size_t i = 0; i < dim(); ++i) s -= std::log(highs[i] - lows[i]);
        return s;
    }

    Vector sample(RngStream& rng) const {
        Vector theta(dim());
        for (std::size_t i = 0; i < dim(); ++i) theta[i] = rng.uniform(lows[i], highs[i]);
        return theta;
    }
};

}  // namespace bgan
