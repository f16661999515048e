#pragma once

#include "urbanmap/optimloss.hpp"
#include "urbanmap/rng.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace bce_oracle {

// Direct evaluation of the mean negative log-likelihood with the same clamp.
inline double loss(const std::vector<double>& y, const std::vector<double>& p, double eps = 1e-7) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double q = std::min(std::max(p[i], eps), 1.0 - eps);
        s -= y[i] * std::log(q) + (1.0 - y[i]) * std::log(1.0 - q);
    }
    return s / static_cast<double>(y.size());
}

// Max relative error of dloss/dp against central differences on a random
// batch of n elements; p is kept away from the clamp so it stays smooth.
inline double gradient_error(std::uint64_t seed, std::size_t n = 100) {
    urbanmap::Rng rng(seed);
    std::vector<double> y(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = rng.chance(0.5) ? 1.0 : 0.0;
        p[i] = rng.uniform(0.05, 0.95);
    }
    const auto analytic = urbanmap::bce_loss({.y = y, .p = p}).dloss_dp;
    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double keep = p[i];
        p[i] = keep + h;
        const double up = urbanmap::bce_loss({.y = y, .p = p}).loss;
        p[i] = keep - h;
        const double down = urbanmap::bce_loss({.y = y, .p = p}).loss;
        p[i] = keep;
        const double numeric = (up - down) / (2.0 * h);
        worst = std::max(worst, std::abs(numeric - analytic[i]) / std::max(std::abs(analytic[i]), 1e-12));
    }
    return worst;
}

}  // namespace bce_oracle
