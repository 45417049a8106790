#pragma once
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "capsearch/backend.hpp"
#include "capsearch/errors.hpp"
#include "capsearch/ledger.hpp"
#include "capsearch/params.hpp"

namespace capsearch {

// Empirical Bernstein confidence radius for j samples with range `range`:
//   c = sqrt(2 var_hat log_term / j) + 3 range log_term / j
// The caller supplies the log term, e.g. ln(3 d_{j,k}).
inline double bernstein_radius(double var_hat, double range, std::int64_t count, double log_term) {
    if (!(var_hat >= 0.0)) throw InvalidParameter("variance must be >= 0");
    if (!(range > 0.0)) throw InvalidParameter("range must be > 0");
    if (count < 1) throw InvalidParameter("sample count must be >= 1");
    if (!(log_term > 0.0)) throw InvalidParameter("log term must be > 0");
    const double j = static_cast<double>(count);
    return std::sqrt(2.0 * var_hat * log_term / j) + 3.0 * range * log_term / j;
}

// Geometric sample grid for the EBG stopping rule. The log term x is only
// recomputed when the sample count crosses a floor(beta^l) boundary.
struct EbgGrid {
    static constexpr double beta = 1.1;
    int l = 0;
    double alpha = 0.0;
    double d_prime = 0.0;
    double x = 0.0;

    // Advances until j <= floor(beta^l). In single-step mode only one bump is
    // made per call, which reproduces the literal pseudocode (it lags for
    // small l where consecutive floor(beta^l) values coincide).
    void advance(std::int64_t j, std::int64_t n, int k, double zeta, bool single_step = false) {
        while (static_cast<double>(j) > std::floor(std::pow(beta, l))) {
            ++l;
            alpha = std::floor(std::pow(beta, l)) / std::floor(std::pow(beta, l - 1));
            // 4 * 10.5844 n k (k+1) l^1.1 / zeta; 10.5844 normalizes sum l^-1.1
            d_prime = 4.0 * 10.5844 * static_cast<double>(n) * k * (k + 1.0) *
                      std::pow(static_cast<double>(l), 1.1) / zeta;
            x = alpha * std::log(3.0 * d_prime);
            if (single_step) break;
        }
    }
};

struct EstimatorContext {
    int k = 1;            // phase index (enters the union-bound log terms)
    std::int64_t n = 1;   // configuration count (same role)
    double epsilon = 0.2;
    double delta = 0.2;
    double zeta = 0.1;
    double theta = 0.0;   // mean-runtime bound for this phase
    double tau = 0.0;     // per-run timeout, must equal 4*theta/(3*delta)
    std::span<const std::int64_t> instances;  // shared phase instance list

    std::int64_t b() const { return static_cast<std::int64_t>(instances.size()); }

    void validate() const {
        if (k < 1 || n < 1) throw InvalidParameter("estimator context: k and n must be >= 1");
        if (!(theta > 0.0)) throw InvalidParameter("estimator context: theta must be > 0");
        if (!(delta > 0.0 && delta < 1.0)) throw InvalidParameter("estimator context: delta in (0,1)");
        if (!(zeta > 0.0 && zeta < 1.0)) throw InvalidParameter("estimator context: zeta in (0,1)");
        if (!(epsilon > 0.0 && epsilon < 1.0 / 3.0))
            throw InvalidParameter("estimator context: epsilon in (0, 1/3)");
        const double expect = 4.0 * theta / (3.0 * delta);
        if (!(std::abs(tau - expect) <= 1e-9 * expect))
            throw InvalidParameter("estimator context: tau must equal 4*theta/(3*delta)");
        if (instances.empty()) throw InvalidParameter("estimator context: empty instance list");
    }
};

enum class StopReason { BudgetExhausted, AllSamples, LowerBoundTooLarge, BernsteinConverged };

inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::BudgetExhausted: return "budget_exhausted";
        case StopReason::AllSamples: return "all_samples";
        case StopReason::LowerBoundTooLarge: return "lower_bound_too_large";
        case StopReason::BernsteinConverged: return "bernstein_converged";
    }
    return "?";
}

struct Estimate {
    double value = 0.0;               // capped mean, or theta as an "at least theta" sentinel
    StopReason reason = StopReason::AllSamples;
    std::int64_t samples_used = 0;
    double work_charged = 0.0;        // budget consumed, b*theta - remaining
    std::vector<Measurement> measurements;
};

// Estimates the tau-capped mean runtime of one configuration over the given
// instance list, spending at most b*theta seconds of measured work. Samples
// are taken in list order; each run is limited to min(remaining budget, tau).
// Stopping decisions, evaluated in this order after every sample:
//   1. remaining budget <= 0 (the run was truncated by it)  -> theta
//   2. all b samples taken                                  -> mean
//   3. [Bernstein/EBG, j >= 2] (1+3eps/7)(mean-c) >= theta
//      and mean > theta                                     -> theta
//   4. [Bernstein/EBG] j >= ceil((32/delta) ln d_{j,k})
//      and c <= (eps/3)(2*mean - c)                         -> mean
// with d_{j,k} = 4 n k (k+1) j (j+1) / zeta. The Bernstein rule recomputes the
// radius log term per sample; EBG refreshes it only on grid boundaries.
inline Estimate estimate_runtime(const EstimatorContext& ctx, std::int64_t config,
                                 MeasurementBackend& backend, CostLedger& ledger,
                                 StoppingRule rule, bool ebg_single_step_grid = false) {
    ctx.validate();
    const std::int64_t b = ctx.b();
    const double budget = static_cast<double>(b) * ctx.theta;
    double remaining = budget;

    double mean = 0.0;
    double m2 = 0.0;  // sum of squared deviations (one-pass)
    EbgGrid grid;

    Estimate est;

    const auto finish = [&](double value, StopReason reason, std::int64_t j) {
        est.value = value;
        est.reason = reason;
        est.samples_used = j;
        est.work_charged = budget - remaining;
        return est;
    };

    for (std::int64_t j = 1; j <= b; ++j) {
        const double limit = remaining < ctx.tau ? remaining : ctx.tau;
        const Measurement m =
            backend.measure(config, ctx.instances[static_cast<std::size_t>(j - 1)], limit);
        ledger.charge(m);
        est.measurements.push_back(m);

        const double q = m.elapsed;
        remaining -= q;

        const double d1 = q - mean;
        mean += d1 / static_cast<double>(j);
        m2 += d1 * (q - mean);

        if (rule == StoppingRule::Ebg)
            grid.advance(j, ctx.n, ctx.k, ctx.zeta, ebg_single_step_grid);

        if (remaining <= 0.0) return finish(ctx.theta, StopReason::BudgetExhausted, j);
        if (j == b) return finish(mean, StopReason::AllSamples, j);
        if (rule == StoppingRule::Fixed || j < 2) continue;

        const double var_hat = m2 / static_cast<double>(j);
        const double d_jk = 4.0 * static_cast<double>(ctx.n) * ctx.k * (ctx.k + 1.0) *
                            static_cast<double>(j) * (static_cast<double>(j) + 1.0) / ctx.zeta;
        const double log_term =
            rule == StoppingRule::Bernstein ? std::log(3.0 * d_jk) : grid.x;
        const double c = bernstein_radius(var_hat, ctx.tau, j, log_term);
        const double lb = mean - c;

        if ((1.0 + 3.0 * ctx.epsilon / 7.0) * lb >= ctx.theta && mean > ctx.theta)
            return finish(ctx.theta, StopReason::LowerBoundTooLarge, j);

        if (static_cast<double>(j) >= std::ceil((32.0 / ctx.delta) * std::log(d_jk)) &&
            c <= (ctx.epsilon / 3.0) * (mean + lb))
            return finish(mean, StopReason::BernsteinConverged, j);
    }
    throw Error("estimator loop ended without a stopping decision");  // unreachable
}

}  // namespace capsearch
