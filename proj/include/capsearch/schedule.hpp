#pragma once
#include <cmath>
#include <cstdint>

#include "capsearch/errors.hpp"
#include "capsearch/params.hpp"

namespace capsearch {

// One phase of the outer search loop.
struct PhaseSpec {
    int k = 1;           // phase index, >= 1
    double theta = 0;    // mean-runtime guess for this phase, seconds
    double tau = 0;      // per-run timeout, 4*theta/(3*delta)
    std::int64_t b = 0;  // number of instances sampled this phase
    double budget = 0;   // overall per-configuration budget, b*theta
};

// Phase arithmetic:
//   theta_k = (16/7) * kappa0 * multiplier^(k-1)
//   b_k     = ceil( 44 * ln(6 n k (k+1) / zeta) / (delta * epsilon^2) )
//   tau_k   = 4 theta_k / (3 delta)
// All logarithms natural.
inline PhaseSpec phase_schedule(const SearchParams& p, std::int64_t n_configs, int k) {
    p.validate();
    if (k < 1) throw InvalidParameter("phase index k must be >= 1");
    if (n_configs < 1) throw InvalidParameter("configuration count must be >= 1");

    PhaseSpec ps;
    ps.k = k;
    ps.theta = (16.0 / 7.0) * p.kappa0 * std::pow(p.multiplier, k - 1);
    ps.tau = 4.0 * ps.theta / (3.0 * p.delta);
    const double log_term =
        std::log(6.0 * static_cast<double>(n_configs) * k * (k + 1.0) / p.zeta);
    ps.b = static_cast<std::int64_t>(std::ceil(44.0 * log_term / (p.delta * p.epsilon * p.epsilon)));
    if (ps.b < 1) ps.b = 1;
    ps.budget = static_cast<double>(ps.b) * ps.theta;
    return ps;
}

// Number of configurations to draw (with replacement) so that missing all of
// the fastest gamma-fraction has probability <= zeta: n = ceil(ln(1/zeta)/gamma),
// since (1-gamma)^n <= exp(-n*gamma).
inline std::int64_t subsample_size(double gamma_fraction, double zeta) {
    if (!(gamma_fraction > 0.0 && gamma_fraction <= 1.0))
        throw InvalidParameter("subsample gamma must be in (0, 1]");
    if (!(zeta > 0.0 && zeta < 1.0))
        throw InvalidParameter("zeta must be in (0, 1)");
    return static_cast<std::int64_t>(std::ceil(std::log(1.0 / zeta) / gamma_fraction));
}

}  // namespace capsearch
