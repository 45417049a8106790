#pragma once
#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "capsearch/errors.hpp"
#include "capsearch/search.hpp"
#include "capsearch/version.hpp"

namespace capsearch {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr double kSecondsPerCpuDay = 86400.0;

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Serializes a search result. Every algorithmic field is a deterministic
// function of (table, params, seed); timestamp and wall_seconds are not.
inline nlohmann::ordered_json build_report(const SearchResult& res,
                                           const std::vector<std::string>& config_labels = {},
                                           double wall_seconds = 0.0) {
    nlohmann::ordered_json doc;
    doc["schema_version"] = kReportSchemaVersion;
    doc["tool_version"] = CAPSEARCH_VERSION;
    doc["timestamp"] = utc_timestamp();
    doc["wall_seconds"] = wall_seconds;

    nlohmann::ordered_json params;
    params["epsilon"] = res.params.epsilon;
    params["delta"] = res.params.delta;
    params["zeta"] = res.params.zeta;
    params["kappa0"] = res.params.kappa0;
    params["multiplier"] = res.params.multiplier;
    params["seed"] = res.params.seed;
    params["stopping"] = to_string(res.params.rule);
    params["ebg_single_step_grid"] = res.params.ebg_single_step_grid;
    doc["params"] = std::move(params);

    doc["n_configs"] = res.config_ids.size();
    doc["config_ids"] = res.config_ids;
    doc["chosen_config"] = res.chosen_config;
    if (!config_labels.empty() && res.chosen_config >= 0 &&
        res.chosen_config < static_cast<std::int64_t>(config_labels.size()))
        doc["chosen_config_label"] = config_labels[static_cast<std::size_t>(res.chosen_config)];
    doc["final_phase"] = res.final_phase;
    doc["theta_final"] = res.theta_final;
    doc["tau_final"] = res.tau_final;

    nlohmann::ordered_json phases = nlohmann::ordered_json::array();
    for (const PhaseRecord& rec : res.phases) {
        nlohmann::ordered_json ph;
        ph["k"] = rec.spec.k;
        ph["theta"] = rec.spec.theta;
        ph["tau"] = rec.spec.tau;
        ph["b"] = rec.spec.b;
        ph["budget"] = rec.spec.budget;
        ph["no_resume_seconds"] = rec.no_resume_delta;
        ph["resume_seconds"] = rec.resume_delta;
        nlohmann::ordered_json ests = nlohmann::ordered_json::array();
        for (std::size_t idx = 0; idx < rec.estimates.size(); ++idx) {
            const Estimate& e = rec.estimates[idx];
            nlohmann::ordered_json je;
            je["config"] = res.config_ids[idx];
            je["value"] = e.value;
            je["reason"] = to_string(e.reason);
            je["samples"] = e.samples_used;
            je["work_seconds"] = e.work_charged;
            ests.push_back(std::move(je));
        }
        ph["estimates"] = std::move(ests);
        phases.push_back(std::move(ph));
    }
    doc["phases"] = std::move(phases);

    nlohmann::ordered_json totals;
    totals["no_resume_seconds"] = res.total_no_resume;
    totals["resume_seconds"] = res.total_resume;
    totals["no_resume_cpu_days"] = res.total_no_resume / kSecondsPerCpuDay;
    totals["resume_cpu_days"] = res.total_resume / kSecondsPerCpuDay;
    totals["run_count"] = res.run_count;
    doc["totals"] = std::move(totals);
    return doc;
}

inline void write_report(const nlohmann::ordered_json& doc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write report '" + path + "'");
    out << doc.dump(2) << '\n';
}

// Removes the run-dependent fields, leaving only what identical inputs must
// reproduce byte-for-byte.
inline nlohmann::ordered_json algorithmic_fields(nlohmann::ordered_json doc) {
    doc.erase("timestamp");
    doc.erase("wall_seconds");
    return doc;
}

}  // namespace capsearch
