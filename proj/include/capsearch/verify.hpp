#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "capsearch/errors.hpp"
#include "capsearch/estimator.hpp"
#include "capsearch/runtime_table.hpp"
#include "capsearch/search.hpp"

namespace capsearch {

struct OptMean {
    double value = 0.0;
    bool censoring_bias = false;  // some cells entered the means at their cap value
};

// Minimum over configurations of the plain row mean. Censored cells
// contribute their cap value; the bias flag is raised when any exist.
inline OptMean opt_mean(const RuntimeTable& t) {
    t.validate();
    OptMean out;
    out.censoring_bias = t.has_censored_cells();
    double best = 0.0;
    for (std::int64_t i = 0; i < t.n_configs; ++i) {
        double sum = 0.0;
        for (std::int64_t j = 0; j < t.n_instances; ++j) sum += t.at(i, j);
        const double mean = sum / static_cast<double>(t.n_instances);
        if (i == 0 || mean < best) best = mean;
    }
    out.value = best;
    return out;
}

namespace detail {

// Smallest runtime value tau* in the row whose strict-exceedance fraction
// #{v > tau*}/m is <= delta. Returns nullopt if that tau* would have to sit
// at or past the censoring cap (the tail there is unknowable).
inline std::optional<double> quantile_threshold(std::span<const double> row, double delta,
                                                double cap) {
    std::vector<double> sorted(row.begin(), row.end());
    std::sort(sorted.begin(), sorted.end());
    const double m = static_cast<double>(sorted.size());
    // Walk distinct values in ascending order; tail(v) = #{x > v}/m.
    for (std::size_t idx = 0; idx < sorted.size(); ++idx) {
        if (idx + 1 < sorted.size() && sorted[idx + 1] == sorted[idx]) continue;
        const double tail = static_cast<double>(sorted.size() - idx - 1) / m;
        if (tail <= delta) {
            if (sorted[idx] >= cap) return std::nullopt;  // censored at the quantile
            return sorted[idx];
        }
    }
    return std::nullopt;  // unreachable: tail at the max is 0
}

inline double row_capped_mean(std::span<const double> row, double tau) {
    double sum = 0.0;
    for (double v : row) sum += v < tau ? v : tau;
    return sum / static_cast<double>(row.size());
}

inline double row_tail_prob(std::span<const double> row, double tau) {
    std::int64_t count = 0;
    for (double v : row)
        if (v > tau) ++count;
    return static_cast<double>(count) / static_cast<double>(row.size());
}

// One-pass accumulator over a row for a fixed tau: capped mean, capped
// population variance and strict tail fraction together.
struct StreamingRowStats {
    double tau;
    std::int64_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;
    std::int64_t exceed = 0;

    explicit StreamingRowStats(double tau_s) : tau(tau_s) {}

    void add(double v) {
        if (v > tau) ++exceed;
        const double capped = v < tau ? v : tau;
        ++count;
        const double d1 = capped - mean;
        mean += d1 / static_cast<double>(count);
        m2 += d1 * (capped - mean);
    }

    double capped_mean() const { return mean; }
    double variance() const { return count > 0 ? m2 / static_cast<double>(count) : 0.0; }
    double tail_prob() const {
        return static_cast<double>(exceed) / static_cast<double>(count);
    }
};

}  // namespace detail

struct OptimalityWitness {
    bool is_optimal = false;
    std::optional<double> witness_tau;
    double capped_mean_at_tau = 0.0;
    double tail_prob_at_tau = 0.0;
    double opt = 0.0;
    bool censoring_bias = false;
};

// Decides whether configuration i admits a threshold tau with
//   capped mean at tau <= (1+epsilon) * OPT   and   Pr(runtime > tau) <= delta,
// taking the table itself as the instance distribution. It is enough to test
// tau* = the smallest row value with tail <= delta: the capped mean is
// non-decreasing and the tail non-increasing in tau, so tau* minimizes the
// capped mean among admissible thresholds.
inline OptimalityWitness check_eps_delta_optimal(const RuntimeTable& t, std::int64_t config,
                                                 double epsilon, double delta) {
    t.validate();
    if (config < 0 || config >= t.n_configs) throw InvalidParameter("config id out of range");
    if (!(epsilon > 0.0)) throw InvalidParameter("epsilon must be > 0");
    if (!(delta >= 0.0 && delta < 1.0)) throw InvalidParameter("delta must be in [0, 1)");

    const std::span<const double> row(&t.values[static_cast<std::size_t>(config * t.n_instances)],
                                      static_cast<std::size_t>(t.n_instances));
    OptimalityWitness w;
    const OptMean om = opt_mean(t);
    w.opt = om.value;
    w.censoring_bias = om.censoring_bias;
    const auto tau = detail::quantile_threshold(row, delta, t.cap);
    if (!tau)
        throw Error("cannot determine the delta=" + std::to_string(delta) +
                    " quantile threshold of config " + std::to_string(config) +
                    ": it lies at or beyond the censoring cap " + std::to_string(t.cap) + "s");
    w.witness_tau = *tau;
    w.capped_mean_at_tau = detail::row_capped_mean(row, *tau);
    w.tail_prob_at_tau = detail::row_tail_prob(row, *tau);
    w.is_optimal =
        w.capped_mean_at_tau <= (1.0 + epsilon) * w.opt && w.tail_prob_at_tau <= delta;
    return w;
}

// Mean of min(runtime, tau*) where tau* is the delta-quantile threshold used
// by check_eps_delta_optimal; delta = 0 gives the plain row mean.
inline double capped_mean_below_quantile(const RuntimeTable& t, std::int64_t config, double delta) {
    t.validate();
    if (config < 0 || config >= t.n_configs) throw InvalidParameter("config id out of range");
    if (!(delta >= 0.0 && delta < 1.0)) throw InvalidParameter("delta must be in [0, 1)");
    const std::span<const double> row(&t.values[static_cast<std::size_t>(config * t.n_instances)],
                                      static_cast<std::size_t>(t.n_instances));
    const auto tau = detail::quantile_threshold(row, delta, t.cap);
    if (!tau)
        throw Error("cannot determine the delta=" + std::to_string(delta) +
                    " quantile threshold of config " + std::to_string(config) +
                    ": it lies at or beyond the censoring cap " + std::to_string(t.cap) + "s");
    return detail::row_capped_mean(row, *tau);
}

struct EventStats {
    std::int64_t trials = 0;
    std::int64_t checks = 0;          // (configuration, phase) pairs examined
    std::int64_t e1_violations = 0;   // estimate below theta while the true tail > delta
    std::int64_t e2_violations = 0;   // |prefix capped mean - true capped mean| > C_{i,k}
    std::int64_t violated_trials = 0; // trials with at least one violation of either kind
    std::vector<double> radii;        // every C_{i,k} encountered, trial-major
};

// Replays `trials` independent seeded searches against the table and counts,
// per (configuration, phase), violations of the two statistical guarantees
// the search relies on:
//   E1: if the estimator returns a mean below theta_k, the configuration's
//       true tail probability past tau_k is at most delta;
//   E2: the phase's empirical tau_k-capped mean over its sampled instances
//       lies within the Bernstein radius C_{i,k} of the true capped mean.
// Ground truth comes from full-table scans.
inline EventStats event_harness(std::shared_ptr<const RuntimeTable> table,
                                const SearchParams& params, std::int64_t trials,
                                std::uint64_t seed) {
    if (trials < 1) throw InvalidParameter("event harness needs at least one trial");
    EventStats stats;
    stats.trials = trials;
    const Problem problem = make_table_problem(table, Censoring::Strict);
    const std::int64_t n = table->n_configs;

    for (std::int64_t trial = 0; trial < trials; ++trial) {
        SearchParams p = params;
        p.seed = mix_seed(seed, static_cast<std::uint64_t>(trial));
        const SearchResult res = run_search(problem, p);
        bool violated = false;

        for (const PhaseRecord& rec : res.phases) {
            const PhaseSpec& ps = rec.spec;
            const double log_term =
                std::log(6.0 * static_cast<double>(n) * ps.k * (ps.k + 1.0) / params.zeta);
            for (std::size_t idx = 0; idx < rec.estimates.size(); ++idx) {
                const std::int64_t i = res.config_ids[idx];
                const std::span<const double> row(
                    &table->values[static_cast<std::size_t>(i * table->n_instances)],
                    static_cast<std::size_t>(table->n_instances));

                ++stats.checks;
                const double true_tail = detail::row_tail_prob(row, ps.tau);
                const double true_capped_mean = detail::row_capped_mean(row, ps.tau);

                if (rec.estimates[idx].value < ps.theta && true_tail > params.delta) {
                    ++stats.e1_violations;
                    violated = true;
                }

                // Empirical capped stats over the phase's instance prefix.
                detail::StreamingRowStats prefix(ps.tau);
                for (std::int64_t j = 0; j < ps.b; ++j)
                    prefix.add(table->at(i, res.instance_list[static_cast<std::size_t>(j)]));
                const double radius =
                    bernstein_radius(prefix.variance(), ps.tau, ps.b, log_term);
                stats.radii.push_back(radius);
                if (std::abs(prefix.capped_mean() - true_capped_mean) > radius) {
                    ++stats.e2_violations;
                    violated = true;
                }
            }
        }
        if (violated) ++stats.violated_trials;
    }
    return stats;
}

// Writes `config_rank,config_id,value` rows, configurations sorted ascending
// by their capped mean below the delta quantile.
inline void write_curve_csv(std::ostream& out, const RuntimeTable& t, double delta) {
    std::vector<std::pair<double, std::int64_t>> rows;
    rows.reserve(static_cast<std::size_t>(t.n_configs));
    for (std::int64_t i = 0; i < t.n_configs; ++i)
        rows.emplace_back(capped_mean_below_quantile(t, i, delta), i);
    std::sort(rows.begin(), rows.end());
    out << "config_rank,config_id,value\n";
    for (std::size_t rank = 0; rank < rows.size(); ++rank)
        out << rank << ',' << rows[rank].second << ',' << detail::format_double(rows[rank].first)
            << '\n';
}

}  // namespace capsearch
