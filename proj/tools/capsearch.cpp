// capsearch: find a fast solver configuration from a finite pool by adaptive
// capped-runtime measurement, verify chosen configurations against full
// runtime tables, sweep the phase multiplier, and generate synthetic tables.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "capsearch/capsearch.hpp"

namespace {

using namespace capsearch;

struct CommonFlags {
    std::string table;
    std::string exec_cmd;
    std::string instances_dir;
    std::string configs_json;
    double epsilon = 0.2;
    double delta = 0.2;
    double zeta = 0.1;
    std::optional<double> kappa0;
    double multiplier = 2.0;
    std::string stopping = "ebg";
    std::uint64_t seed = 0;
    int threads = 1;
    double resume_overhead = 0.0;
    std::string censoring = "strict";
    std::optional<double> subsample_gamma;
    std::int64_t max_phases = 0;
    bool wall_clock = false;
    std::string nonzero_exit = "error";
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--table", f.table, "Runtime table CSV (simulated oracle mode)");
    cmd->add_option("--exec-cmd", f.exec_cmd,
                    "Solver command template with {instance} and {flags} placeholders");
    cmd->add_option("--instances-dir", f.instances_dir, "Directory of instance files");
    cmd->add_option("--configs-json", f.configs_json, "Config-space JSON (list of flag arrays)");
    cmd->add_option("--epsilon", f.epsilon, "Precision parameter, in (0, 1/3)");
    cmd->add_option("--delta", f.delta, "Quantile parameter, in (0, 1)");
    cmd->add_option("--zeta", f.zeta, "Failure probability, in (0, 1)");
    cmd->add_option("--kappa0", f.kappa0,
                    "Minimum runtime in seconds (table mode defaults to the sidecar value)");
    cmd->add_option("--multiplier", f.multiplier, "Per-phase growth factor for theta (> 1)");
    cmd->add_option("--stopping", f.stopping, "Stopping rule: fixed|bernstein|ebg")
        ->check(CLI::IsMember({"fixed", "bernstein", "ebg"}));
    cmd->add_option("--seed", f.seed, "Random seed (fully determines instance sampling)");
    cmd->add_option("--threads", f.threads, "Worker threads for per-configuration estimation");
    cmd->add_option("--resume-overhead", f.resume_overhead,
                    "Constant charged per resumed run in the resume environment");
    cmd->add_option("--censoring", f.censoring, "Censored-cell policy: strict|clamp")
        ->check(CLI::IsMember({"strict", "clamp"}));
    cmd->add_option("--subsample-gamma", f.subsample_gamma,
                    "Search a random subsample covering the fastest gamma fraction");
    cmd->add_option("--max-phases", f.max_phases, "Safety cap on phase count (0 = unlimited)");
    cmd->add_flag("--wall-clock", f.wall_clock,
                  "Subprocess mode: limit wall-clock time instead of CPU time");
    cmd->add_option("--nonzero-exit", f.nonzero_exit,
                    "Subprocess mode: treat nonzero solver exit as error|timeout")
        ->check(CLI::IsMember({"error", "timeout"}));
}

struct LoadedProblem {
    Problem problem;
    SearchParams params;
    SearchOptions options;
    std::vector<std::string> config_labels;
    std::shared_ptr<const RuntimeTable> table;  // set in table mode
};

LoadedProblem build_problem(const CommonFlags& f) {
    LoadedProblem lp;
    lp.params.epsilon = f.epsilon;
    lp.params.delta = f.delta;
    lp.params.zeta = f.zeta;
    lp.params.multiplier = f.multiplier;
    lp.params.seed = f.seed;
    lp.params.rule = stopping_rule_from_string(f.stopping);
    lp.options.threads = f.threads;
    lp.options.max_phases = f.max_phases;
    lp.options.resume_overhead = f.resume_overhead;
    lp.options.subsample_gamma = f.subsample_gamma;

    const Censoring policy = censoring_from_string(f.censoring);
    if (!f.table.empty()) {
        auto table = std::make_shared<RuntimeTable>(load_runtime_table(f.table, policy));
        lp.params.kappa0 = f.kappa0.value_or(table->kappa0);
        lp.config_labels = table->config_labels;
        lp.table = table;
        lp.problem = make_table_problem(table, policy);
        lp.problem.kappa0 = lp.params.kappa0;
    } else if (!f.exec_cmd.empty()) {
        if (f.instances_dir.empty() || f.configs_json.empty())
            throw InvalidParameter("subprocess mode needs --exec-cmd, --instances-dir and --configs-json");
        if (!f.kappa0) throw InvalidParameter("subprocess mode requires --kappa0");
        SubprocessOptions so;
        so.command_template = f.exec_cmd;
        so.config_flags = load_config_space(f.configs_json);
        so.instance_files = list_instance_files(f.instances_dir);
        so.kappa0 = *f.kappa0;
        so.wall_clock = f.wall_clock;
        so.nonzero_exit_as_timeout = f.nonzero_exit == "timeout";
        for (const auto& flags : so.config_flags) {
            std::string label;
            for (const auto& fl : flags) label += (label.empty() ? "" : " ") + fl;
            lp.config_labels.push_back(label);
        }
        lp.params.kappa0 = *f.kappa0;
        auto backend = std::make_shared<SubprocessBackend>(std::move(so));
        lp.problem.backend = backend;
        lp.problem.instance_universe = backend->instance_count();
        lp.problem.kappa0 = *f.kappa0;
        lp.problem.config_ids.resize(static_cast<std::size_t>(backend->config_count()));
        for (std::int64_t i = 0; i < backend->config_count(); ++i)
            lp.problem.config_ids[static_cast<std::size_t>(i)] = i;
    } else {
        throw InvalidParameter("either --table or --exec-cmd is required");
    }
    lp.params.validate();
    return lp;
}

void write_trace(const SearchResult& res, const std::vector<std::string>& labels,
                 const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write trace '" + path + "'");
    out << "k,theta,tau,b,config,label,value,reason,samples,work_seconds\n";
    for (const PhaseRecord& rec : res.phases)
        for (std::size_t idx = 0; idx < rec.estimates.size(); ++idx) {
            const auto id = res.config_ids[idx];
            const Estimate& e = rec.estimates[idx];
            out << rec.spec.k << ',' << rec.spec.theta << ',' << rec.spec.tau << ',' << rec.spec.b
                << ',' << id << ','
                << (id >= 0 && id < static_cast<std::int64_t>(labels.size())
                        ? labels[static_cast<std::size_t>(id)]
                        : "")
                << ',' << e.value << ',' << to_string(e.reason) << ',' << e.samples_used << ','
                << e.work_charged << '\n';
        }
}

int cmd_run(const CommonFlags& f, const std::string& out_path, const std::string& trace_path) {
    const auto t0 = std::chrono::steady_clock::now();
    LoadedProblem lp = build_problem(f);
    const SearchResult res = run_search(lp.problem, lp.params, lp.options);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const auto report = build_report(res, lp.config_labels, wall);
    if (!out_path.empty())
        write_report(report, out_path);
    else
        std::cout << report.dump(2) << '\n';
    if (!trace_path.empty()) write_trace(res, lp.config_labels, trace_path);

    std::cerr << "chosen config " << res.chosen_config;
    if (!lp.config_labels.empty() && res.chosen_config >= 0 &&
        res.chosen_config < static_cast<std::int64_t>(lp.config_labels.size()))
        std::cerr << " [" << lp.config_labels[static_cast<std::size_t>(res.chosen_config)] << "]";
    std::cerr << " in phase " << res.final_phase << "; no-resume "
              << res.total_no_resume / kSecondsPerCpuDay << " CPU-days, resume "
              << res.total_resume / kSecondsPerCpuDay << " CPU-days\n";
    return 0;
}

int cmd_sweep(const CommonFlags& f, const std::vector<double>& multipliers,
              const std::string& out_path) {
    if (multipliers.empty()) throw InvalidParameter("sweep needs --multipliers");
    std::ostringstream csv;
    csv << "multiplier,total_resume,total_no_resume,chosen_config,phases\n";
    for (const double m : multipliers) {
        CommonFlags fm = f;
        fm.multiplier = m;
        LoadedProblem lp = build_problem(fm);
        const SearchResult res = run_search(lp.problem, lp.params, lp.options);
        csv << detail::format_double(m) << ',' << detail::format_double(res.total_resume) << ','
            << detail::format_double(res.total_no_resume) << ',' << res.chosen_config << ','
            << res.final_phase << '\n';
        std::cerr << "multiplier " << m << ": config " << res.chosen_config << " after "
                  << res.final_phase << " phases\n";
    }
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw Error("cannot write sweep CSV '" + out_path + "'");
        out << csv.str();
    } else {
        std::cout << csv.str();
    }
    return 0;
}

int cmd_verify(const std::string& table_path, std::optional<std::int64_t> config,
               const std::string& report_path, double epsilon, double delta, bool curve,
               const std::vector<double>& deltas, const std::string& out_prefix) {
    const auto table = load_runtime_table(table_path, Censoring::Strict);

    std::int64_t config_id = -1;
    if (config) {
        config_id = *config;
    } else if (!report_path.empty()) {
        std::ifstream in(report_path);
        if (!in) throw Error("cannot open report '" + report_path + "'");
        nlohmann::json doc;
        in >> doc;
        config_id = doc.at("chosen_config").get<std::int64_t>();
    } else {
        throw InvalidParameter("verify needs --config or --report");
    }

    const OptimalityWitness w = check_eps_delta_optimal(table, config_id, epsilon, delta);
    nlohmann::ordered_json doc;
    doc["config"] = config_id;
    doc["epsilon"] = epsilon;
    doc["delta"] = delta;
    doc["is_optimal"] = w.is_optimal;
    doc["witness_tau"] = w.witness_tau ? nlohmann::ordered_json(*w.witness_tau)
                                       : nlohmann::ordered_json(nullptr);
    doc["capped_mean_at_tau"] = w.capped_mean_at_tau;
    doc["tail_prob_at_tau"] = w.tail_prob_at_tau;
    doc["opt"] = w.opt;
    doc["censoring_bias"] = w.censoring_bias;
    std::cout << doc.dump(2) << '\n';

    if (curve) {
        for (const double d : deltas) {
            std::ostringstream name;
            name << out_prefix << "curve_delta_" << d << ".csv";
            std::ofstream out(name.str());
            if (!out) throw Error("cannot write curve file '" + name.str() + "'");
            write_curve_csv(out, table, d);
            std::cerr << "wrote " << name.str() << '\n';
        }
    }
    return 0;  // a completed check is a success either way; the verdict is in is_optimal
}

SyntheticModel parse_model(const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ':')) parts.push_back(tok);
    try {
        if (parts.size() == 2 && parts[0] == "constant")
            return SyntheticModel::constant(std::stod(parts[1]));
        if (parts.size() == 3 && parts[0] == "lognormal")
            return SyntheticModel::log_normal(std::stod(parts[1]), std::stod(parts[2]));
        if (parts.size() == 2 && parts[0] == "heavytail")
            return SyntheticModel::heavy_tail(std::stod(parts[1]));
    } catch (const std::exception&) {
    }
    throw InvalidParameter("bad model spec '" + s +
                           "' (expected constant:MEAN | lognormal:MU:SIGMA | heavytail:B)");
}

int cmd_gen(const std::string& out_path, const std::vector<std::string>& model_specs,
            std::int64_t n_configs, std::int64_t n_instances, double cap, double kappa0,
            std::uint64_t seed) {
    std::vector<SyntheticModel> models;
    for (const auto& s : model_specs) models.push_back(parse_model(s));
    const RuntimeTable t = gen_synthetic(models, n_configs, n_instances, cap, kappa0, seed);
    save_runtime_table(t, out_path);
    std::cerr << "wrote " << n_configs << "x" << n_instances << " table to " << out_path << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"capped-runtime configuration search"};
    app.require_subcommand(1);

    CommonFlags run_flags;
    std::string run_out, run_trace;
    auto* run = app.add_subcommand("run", "Search for a near-optimal configuration");
    add_common_flags(run, run_flags);
    run->add_option("--out", run_out, "Write the JSON report here (default: stdout)");
    run->add_option("--trace", run_trace, "Write a per-(phase, config) CSV trace");

    CommonFlags sweep_flags;
    std::string sweep_out;
    std::vector<double> sweep_multipliers;
    auto* sweep = app.add_subcommand("sweep", "Run the search once per multiplier value");
    add_common_flags(sweep, sweep_flags);
    sweep->add_option("--multipliers", sweep_multipliers, "Comma-separated multiplier list")
        ->required()
        ->delimiter(',');
    sweep->add_option("--out", sweep_out, "Write the sweep CSV here (default: stdout)");

    std::string verify_table, verify_report, verify_out_prefix;
    std::optional<std::int64_t> verify_config;
    double verify_epsilon = 0.2, verify_delta = 0.2;
    bool verify_curve = false;
    std::vector<double> verify_deltas{0.0, 0.1, 0.25};
    auto* verify = app.add_subcommand("verify", "Check a configuration against a full table");
    verify->add_option("--table", verify_table, "Runtime table CSV")->required();
    verify->add_option("--config", verify_config, "Configuration id to check");
    verify->add_option("--report", verify_report, "Check the chosen config of this report");
    verify->add_option("--epsilon", verify_epsilon, "Precision parameter");
    verify->add_option("--delta", verify_delta, "Quantile parameter");
    verify->add_flag("--curve", verify_curve, "Emit sorted capped-mean curve data");
    verify->add_option("--deltas", verify_deltas, "Delta list for --curve")->delimiter(',');
    verify->add_option("--out", verify_out_prefix, "Filename prefix for curve CSVs");

    std::string gen_out;
    std::vector<std::string> gen_models{"constant:2.0"};
    std::int64_t gen_configs = 1, gen_instances = 100;
    double gen_cap = 900.0, gen_kappa0 = 1.0;
    std::uint64_t gen_seed = 0;
    auto* gen = app.add_subcommand("gen", "Generate a synthetic runtime table");
    gen->add_option("--out", gen_out, "Output CSV path")->required();
    gen->add_option("--model", gen_models,
                    "Model per config (constant:MEAN | lognormal:MU:SIGMA | heavytail:B); "
                    "one entry broadcasts");
    gen->add_option("--n-configs", gen_configs, "Number of configurations");
    gen->add_option("--n-instances", gen_instances, "Number of instances");
    gen->add_option("--cap", gen_cap, "Censoring cap, seconds");
    gen->add_option("--kappa0", gen_kappa0, "Minimum runtime, seconds");
    gen->add_option("--seed", gen_seed, "Random seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(run_flags, run_out, run_trace);
        if (sweep->parsed()) return cmd_sweep(sweep_flags, sweep_multipliers, sweep_out);
        if (verify->parsed())
            return cmd_verify(verify_table, verify_config, verify_report, verify_epsilon,
                              verify_delta, verify_curve, verify_deltas, verify_out_prefix);
        if (gen->parsed())
            return cmd_gen(gen_out, gen_models, gen_configs, gen_instances, gen_cap, gen_kappa0,
                           gen_seed);
    } catch (const InvalidParameter& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
