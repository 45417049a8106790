#pragma once
#include <atomic>
#include <cstdint>
#include <exception>
#include <memory>
#include <optional>
#include <thread>
#include <vector>

#include "capsearch/backend.hpp"
#include "capsearch/errors.hpp"
#include "capsearch/estimator.hpp"
#include "capsearch/ledger.hpp"
#include "capsearch/params.hpp"
#include "capsearch/rng.hpp"
#include "capsearch/schedule.hpp"

namespace capsearch {

// A configuration search task: a measurement source, the configuration ids to
// compare, and the instance universe to sample from.
struct Problem {
    std::shared_ptr<MeasurementBackend> backend;
    std::vector<std::int64_t> config_ids;
    std::int64_t instance_universe = 0;  // sampler draws uniformly from [0, this)
    double kappa0 = 0.0;

    void validate() const {
        if (!backend) throw InvalidParameter("problem: backend is required");
        if (config_ids.empty()) throw InvalidParameter("problem: configuration list is empty");
        if (instance_universe < 1) throw InvalidParameter("problem: no instances to sample");
        if (!(kappa0 > 0.0)) throw InvalidParameter("problem: kappa0 must be > 0");
    }
};

inline Problem make_table_problem(std::shared_ptr<const RuntimeTable> table, Censoring policy) {
    Problem p;
    p.backend = std::make_shared<TableBackend>(table, policy);
    p.config_ids.resize(static_cast<std::size_t>(table->n_configs));
    for (std::int64_t i = 0; i < table->n_configs; ++i)
        p.config_ids[static_cast<std::size_t>(i)] = i;
    p.instance_universe = table->n_instances;
    p.kappa0 = table->kappa0;
    return p;
}

struct SearchOptions {
    int threads = 1;
    std::int64_t max_phases = 0;  // 0 = unlimited
    double resume_overhead = 0.0;
    bool record_measurements = false;  // keep per-sample measurements in the result
    std::optional<double> subsample_gamma;  // draw subsample_size(gamma, zeta) configs first
};

struct PhaseRecord {
    PhaseSpec spec;
    std::vector<Estimate> estimates;  // one per configuration, in config-list order
    double no_resume_delta = 0.0;     // ledger growth attributable to this phase
    double resume_delta = 0.0;
};

struct SearchResult {
    std::int64_t chosen_config = -1;  // configuration id (e.g. table row)
    std::size_t chosen_index = 0;     // position in config_ids
    int final_phase = 0;
    double theta_final = 0.0;
    double tau_final = 0.0;
    std::vector<PhaseRecord> phases;
    double total_no_resume = 0.0;
    double total_resume = 0.0;
    std::int64_t run_count = 0;
    SearchParams params;
    std::vector<std::int64_t> config_ids;     // configs actually searched (post subsampling)
    std::vector<std::int64_t> instance_list;  // full sampled list; phase k used first b_k
};

// Appends fresh samples until the list reaches target_len; the existing
// prefix is never touched, so phase k always sees the first b_k entries.
inline std::int64_t extend_instance_list(std::vector<std::int64_t>& list, InstanceSampler& sampler,
                                         std::int64_t target_len) {
    if (target_len < static_cast<std::int64_t>(list.size()))
        throw InvalidParameter("instance list cannot shrink");
    const std::int64_t added = target_len - static_cast<std::int64_t>(list.size());
    for (std::int64_t i = 0; i < added; ++i) list.push_back(sampler.next());
    return added;
}

namespace detail {

// Runs fn(idx) for idx in [0, count) on up to `threads` workers. Exceptions
// are captured per index and the lowest-index one is rethrown after joining,
// so failures are deterministic regardless of scheduling.
template <typename Fn>
void parallel_for_index(std::size_t count, int threads, Fn&& fn) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    const std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

// Phase-doubling search for a configuration whose capped mean runtime beats
// the current guess theta_k. Each phase estimates every configuration on the
// same instance prefix; the first phase where min estimate < theta_k returns
// the argmin (ties broken toward the lowest configuration index).
inline SearchResult run_search(const Problem& problem, const SearchParams& params,
                               const SearchOptions& options = {}) {
    params.validate();
    problem.validate();
    if (options.threads < 1) throw InvalidParameter("threads must be >= 1");

    std::vector<std::int64_t> configs = problem.config_ids;
    if (options.subsample_gamma) {
        const std::int64_t want = subsample_size(*options.subsample_gamma, params.zeta);
        Rng pick(mix_seed(params.seed, 5));
        std::vector<std::int64_t> drawn;
        drawn.reserve(static_cast<std::size_t>(want));
        for (std::int64_t i = 0; i < want; ++i)
            drawn.push_back(configs[pick.bounded(configs.size())]);
        configs = std::move(drawn);
    }
    const std::int64_t n = static_cast<std::int64_t>(configs.size());

    InstanceSampler sampler(problem.instance_universe, mix_seed(params.seed, 1));
    CostLedger ledger(options.resume_overhead);

    SearchResult result;
    result.params = params;
    result.config_ids = configs;

    for (int k = 1; options.max_phases == 0 || k <= options.max_phases; ++k) {
        const PhaseSpec ps = phase_schedule(params, n, k);
        extend_instance_list(result.instance_list, sampler, ps.b);

        EstimatorContext ctx;
        ctx.k = k;
        ctx.n = n;
        ctx.epsilon = params.epsilon;
        ctx.delta = params.delta;
        ctx.zeta = params.zeta;
        ctx.theta = ps.theta;
        ctx.tau = ps.tau;
        ctx.instances = std::span<const std::int64_t>(result.instance_list.data(),
                                                      static_cast<std::size_t>(ps.b));

        // Fan out one estimator per configuration; each charges a child
        // ledger so totals are independent of worker scheduling.
        std::vector<Estimate> estimates(configs.size());
        std::vector<CostLedger> locals(configs.size(), ledger.child());
        try {
            detail::parallel_for_index(configs.size(), options.threads, [&](std::size_t idx) {
                estimates[idx] = estimate_runtime(ctx, configs[idx], *problem.backend, locals[idx],
                                                  params.rule, params.ebg_single_step_grid);
            });
        } catch (const CensoringError& e) {
            throw Error("phase k=" + std::to_string(k) + " needs timeout tau_k=" +
                        std::to_string(ctx.tau) + "s beyond the table cap=" + std::to_string(e.cap) +
                        "s on censored cell (config " + std::to_string(e.config_id) + ", instance " +
                        std::to_string(e.instance_id) +
                        "); rerun with --censoring clamp or raise the cap");
        }

        PhaseRecord rec;
        rec.spec = ps;
        const double before_nr = ledger.total_no_resume();
        const double before_r = ledger.total_resume();
        for (std::size_t idx = 0; idx < configs.size(); ++idx) ledger.absorb(locals[idx]);
        rec.no_resume_delta = ledger.total_no_resume() - before_nr;
        rec.resume_delta = ledger.total_resume() - before_r;

        std::size_t best = 0;
        for (std::size_t idx = 1; idx < estimates.size(); ++idx)
            if (estimates[idx].value < estimates[best].value) best = idx;
        const double best_value = estimates[best].value;

        if (!options.record_measurements)
            for (auto& e : estimates) {
                e.measurements.clear();
                e.measurements.shrink_to_fit();
            }
        rec.estimates = std::move(estimates);
        result.phases.push_back(std::move(rec));

        if (best_value < ps.theta) {
            result.chosen_index = best;
            result.chosen_config = configs[best];
            result.final_phase = k;
            result.theta_final = ps.theta;
            result.tau_final = ps.tau;
            result.total_no_resume = ledger.total_no_resume();
            result.total_resume = ledger.total_resume();
            result.run_count = ledger.run_count();
            return result;
        }
    }
    throw MaxPhasesExceeded("search did not terminate within " +
                            std::to_string(options.max_phases) + " phases");
}

}  // namespace capsearch
