#pragma once
#include <atomic>
#include <cstdint>
#include <iostream>
#include <memory>

#include "capsearch/errors.hpp"
#include "capsearch/ledger.hpp"
#include "capsearch/params.hpp"
#include "capsearch/runtime_table.hpp"

namespace capsearch {

// Source of capped runtime measurements.
class MeasurementBackend {
  public:
    virtual ~MeasurementBackend() = default;

    // Runs configuration `config` on instance `instance` with the given time
    // limit, returning min(true runtime, limit) and whether the run finished.
    virtual Measurement measure(std::int64_t config, std::int64_t instance, double limit) = 0;

    virtual std::int64_t config_count() const = 0;
    virtual std::int64_t instance_count() const = 0;
    virtual double kappa0() const = 0;
};

// Replays precomputed runtimes from a table; exact and thread-safe for reads.
class TableBackend final : public MeasurementBackend {
  public:
    TableBackend(std::shared_ptr<const RuntimeTable> table, Censoring policy)
        : table_(std::move(table)), policy_(policy) {
        if (!table_) throw InvalidParameter("table backend requires a table");
    }

    Measurement measure(std::int64_t config, std::int64_t instance, double limit) override {
        if (!(limit > 0.0)) throw InvalidParameter("measurement limit must be > 0");
        if (config < 0 || config >= table_->n_configs || instance < 0 ||
            instance >= table_->n_instances)
            throw InvalidParameter("measurement request outside table bounds");
        const double v = table_->at(config, instance);
        Measurement m;
        m.config_id = config;
        m.instance_id = instance;
        if (v >= table_->cap && limit > table_->cap) {
            // Cell is censored: the true runtime past the cap is unknown.
            if (policy_ == Censoring::Strict) throw CensoringError(config, instance, limit, table_->cap);
            if (clamp_warnings_.fetch_add(1, std::memory_order_relaxed) == 0)
                std::cerr << "warning: limit " << limit << "s clamped to table cap " << table_->cap
                          << "s on censored cell (config " << config << ", instance " << instance
                          << "); further clamp warnings suppressed\n";
            m.limit = table_->cap;
            m.elapsed = table_->cap;
            m.outcome = Outcome::TimedOut;
            return m;
        }
        m.limit = limit;
        if (v >= table_->cap) {
            // Censored with limit <= cap: the run is known not to finish.
            m.elapsed = limit;
            m.outcome = Outcome::TimedOut;
        } else if (v > limit) {
            m.elapsed = limit;
            m.outcome = Outcome::TimedOut;
        } else {
            m.elapsed = v;
            m.outcome = Outcome::Finished;
        }
        return m;
    }

    std::int64_t config_count() const override { return table_->n_configs; }
    std::int64_t instance_count() const override { return table_->n_instances; }
    double kappa0() const override { return table_->kappa0; }

    const RuntimeTable& table() const { return *table_; }
    long clamp_warning_count() const { return clamp_warnings_.load(std::memory_order_relaxed); }

  private:
    std::shared_ptr<const RuntimeTable> table_;
    Censoring policy_;
    std::atomic<long> clamp_warnings_{0};
};

}  // namespace capsearch
