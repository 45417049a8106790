#pragma once
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "capsearch/errors.hpp"
#include "capsearch/rng.hpp"
#include "capsearch/runtime_table.hpp"

namespace capsearch {

// Per-configuration runtime distribution for synthetic tables.
//   Constant(mean):      every instance takes `mean` seconds.
//   LogNormal(mu,sigma): exp(mu + sigma*N(0,1)).
//   HeavyTail(b):        b seconds with probability 1/b, else kappa0.
struct SyntheticModel {
    enum class Kind { Constant, LogNormal, HeavyTail };
    Kind kind = Kind::Constant;
    double a = 1.0;  // Constant: mean; LogNormal: mu; HeavyTail: b
    double b = 0.0;  // LogNormal: sigma

    static SyntheticModel constant(double mean) { return {Kind::Constant, mean, 0.0}; }
    static SyntheticModel log_normal(double mu, double sigma) { return {Kind::LogNormal, mu, sigma}; }
    static SyntheticModel heavy_tail(double b_value) { return {Kind::HeavyTail, b_value, 0.0}; }
};

// Deterministic given seed. Values are clipped into [kappa0, cap]; anything
// reaching cap is recorded as cap (censored).
inline RuntimeTable gen_synthetic(const std::vector<SyntheticModel>& per_config,
                                  std::int64_t n_configs, std::int64_t n_instances, double cap,
                                  double kappa0, std::uint64_t seed) {
    if (n_configs < 1 || n_instances < 1)
        throw InvalidParameter("synthetic table dimensions must be >= 1");
    if (!(kappa0 > 0.0) || !(cap >= kappa0))
        throw InvalidParameter("synthetic table requires 0 < kappa0 <= cap");
    if (per_config.empty() ||
        (per_config.size() != 1 && per_config.size() != static_cast<std::size_t>(n_configs)))
        throw InvalidParameter("model list must have one entry or one per configuration");
    for (const auto& m : per_config) {
        if (m.kind == SyntheticModel::Kind::HeavyTail && !(m.a > kappa0))
            throw InvalidParameter("heavy-tail b must exceed kappa0");
        if (m.kind == SyntheticModel::Kind::LogNormal && !(m.b >= 0.0))
            throw InvalidParameter("log-normal sigma must be >= 0");
    }

    RuntimeTable t;
    t.n_configs = n_configs;
    t.n_instances = n_instances;
    t.cap = cap;
    t.kappa0 = kappa0;
    t.values.resize(static_cast<std::size_t>(n_configs * n_instances));
    for (std::int64_t i = 0; i < n_configs; ++i) t.config_labels.push_back("c" + std::to_string(i));
    for (std::int64_t j = 0; j < n_instances; ++j) t.instance_labels.push_back("i" + std::to_string(j));

    Rng rng(seed);
    for (std::int64_t i = 0; i < n_configs; ++i) {
        const auto& m = per_config[per_config.size() == 1 ? 0 : static_cast<std::size_t>(i)];
        for (std::int64_t j = 0; j < n_instances; ++j) {
            double v = 0.0;
            switch (m.kind) {
                case SyntheticModel::Kind::Constant: v = m.a; break;
                case SyntheticModel::Kind::LogNormal: v = std::exp(m.a + m.b * rng.normal()); break;
                case SyntheticModel::Kind::HeavyTail:
                    v = rng.uniform01() < 1.0 / m.a ? m.a : kappa0;
                    break;
            }
            if (v < kappa0) v = kappa0;
            if (v >= cap) v = cap;
            t.at(i, j) = v;
        }
    }
    return t;
}

}  // namespace capsearch
