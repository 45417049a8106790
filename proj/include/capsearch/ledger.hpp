#pragma once
#include <algorithm>
#include <cstdint>
#include <map>
#include <utility>

namespace capsearch {

enum class Outcome { Finished, TimedOut };

// One capped run: elapsed = min(true runtime, limit).
struct Measurement {
    double elapsed = 0.0;
    Outcome outcome = Outcome::Finished;
    std::int64_t config_id = 0;
    std::int64_t instance_id = 0;
    double limit = 0.0;  // effective limit the run was subject to
};

// Charged-work accounting under two execution environments:
//   no-resume: every run costs its full elapsed time;
//   resume:    rerunning a (config, instance) pair costs only the time past
//              the pair's previous high-water mark (paused runs continue).
// An optional constant overhead is charged per resumed run (default 0).
//
// A ledger may be created as a child of another (see child()): the child sees
// the parent's high-water marks read-only and accumulates its own deltas.
// absorb() folds a child back into its parent; as long as the parent is not
// mutated while children are live, totals are independent of how charges were
// split across children.
class CostLedger {
  public:
    using Key = std::pair<std::int64_t, std::int64_t>;  // (config, instance)

    explicit CostLedger(double resume_overhead = 0.0) : resume_overhead_(resume_overhead) {}

    CostLedger child() const {
        CostLedger c(resume_overhead_);
        c.base_ = this;
        return c;
    }

    void charge(const Measurement& m) {
        const Key key{m.config_id, m.instance_id};
        const double prior = high_water(m.config_id, m.instance_id);
        total_no_resume_ += m.elapsed;
        total_resume_ += std::max(0.0, m.elapsed - prior);
        if (prior > 0.0) total_resume_ += resume_overhead_;  // rerun of a known pair
        auto [it, inserted] = high_water_.try_emplace(key, m.elapsed);
        if (!inserted) it->second = std::max(it->second, m.elapsed);
        ++run_count_;
    }

    // Folds a child ledger into this one. The child must have been created by
    // child() on this ledger (or share its view of prior high-water marks).
    void absorb(const CostLedger& local) {
        total_no_resume_ += local.total_no_resume_;
        total_resume_ += local.total_resume_;
        run_count_ += local.run_count_;
        for (const auto& [key, hw] : local.high_water_) {
            auto [it, inserted] = high_water_.try_emplace(key, hw);
            if (!inserted) it->second = std::max(it->second, hw);
        }
    }

    double high_water(std::int64_t config, std::int64_t instance) const {
        const Key key{config, instance};
        double hw = 0.0;
        if (auto it = high_water_.find(key); it != high_water_.end()) hw = it->second;
        if (base_ != nullptr) hw = std::max(hw, base_->high_water(config, instance));
        return hw;
    }

    double total_no_resume() const { return total_no_resume_; }
    double total_resume() const { return total_resume_; }
    std::int64_t run_count() const { return run_count_; }
    double resume_overhead() const { return resume_overhead_; }
    const std::map<Key, double>& high_water_map() const { return high_water_; }

  private:
    const CostLedger* base_ = nullptr;
    double resume_overhead_ = 0.0;
    double total_no_resume_ = 0.0;
    double total_resume_ = 0.0;
    std::int64_t run_count_ = 0;
    std::map<Key, double> high_water_;
};

}  // namespace capsearch
