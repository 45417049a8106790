#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>
#include <vector>

#include "capsearch/capsearch.hpp"

using namespace capsearch;

namespace {

std::shared_ptr<RuntimeTable> table_from_rows(std::vector<std::vector<double>> rows, double cap,
                                              double kappa0) {
    auto t = std::make_shared<RuntimeTable>();
    t->n_configs = static_cast<std::int64_t>(rows.size());
    t->n_instances = static_cast<std::int64_t>(rows[0].size());
    t->cap = cap;
    t->kappa0 = kappa0;
    t->values.resize(static_cast<std::size_t>(t->n_configs * t->n_instances));
    for (std::int64_t i = 0; i < t->n_configs; ++i)
        for (std::int64_t j = 0; j < t->n_instances; ++j)
            t->at(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    for (std::int64_t i = 0; i < t->n_configs; ++i) t->config_labels.push_back("c" + std::to_string(i));
    for (std::int64_t j = 0; j < t->n_instances; ++j) t->instance_labels.push_back("i" + std::to_string(j));
    return t;
}

// Independent oracle: exhaustive scan over every distinct runtime of the row
// as a candidate threshold.
bool brute_force_optimal(const RuntimeTable& t, std::int64_t config, double eps, double delta) {
    const double opt = opt_mean(t).value;
    std::set<double> candidates;
    for (std::int64_t j = 0; j < t.n_instances; ++j) candidates.insert(t.at(config, j));
    for (const double tau : candidates) {
        std::int64_t exceed = 0;
        double capped_sum = 0.0;
        for (std::int64_t j = 0; j < t.n_instances; ++j) {
            const double v = t.at(config, j);
            if (v > tau) ++exceed;
            capped_sum += std::min(v, tau);
        }
        const double tail = static_cast<double>(exceed) / static_cast<double>(t.n_instances);
        const double capped_mean = capped_sum / static_cast<double>(t.n_instances);
        if (tail <= delta && capped_mean <= (1.0 + eps) * opt) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("opt_mean basics") {
    CHECK(opt_mean(*table_from_rows({{1, 1}, {3, 5}}, 900, 1)).value == 1.0);
    CHECK(opt_mean(*table_from_rows({{2, 4}}, 900, 1)).value == 3.0);

    const auto censored = table_from_rows({{2, 900}}, 900, 1);
    const auto om = opt_mean(*censored);
    CHECK(om.censoring_bias);
    CHECK(om.value == doctest::Approx(451.0));
    CHECK(!opt_mean(*table_from_rows({{2, 4}}, 900, 1)).censoring_bias);
}

TEST_CASE("eps-delta optimality witness examples") {
    const auto t = table_from_rows({{1, 1, 1, 1}, {1, 1, 1, 10}}, 900, 1);

    SUBCASE("delta 0.25 admits tau*=1") {
        const auto w = check_eps_delta_optimal(*t, 1, 0.5, 0.25);
        CHECK(w.is_optimal);
        REQUIRE(w.witness_tau.has_value());
        CHECK(*w.witness_tau == 1.0);
        CHECK(w.tail_prob_at_tau == doctest::Approx(0.25));
        CHECK(w.capped_mean_at_tau == doctest::Approx(1.0));
        CHECK(w.opt == doctest::Approx(1.0));
    }
    SUBCASE("delta 0.1 forces tau*=10 and fails the mean test") {
        const auto w = check_eps_delta_optimal(*t, 1, 0.5, 0.1);
        CHECK(!w.is_optimal);
        REQUIRE(w.witness_tau.has_value());
        CHECK(*w.witness_tau == 10.0);
        CHECK(w.capped_mean_at_tau == doctest::Approx(3.25));
    }
    SUBCASE("the argmin-mean configuration is always optimal") {
        for (const double delta : {0.0, 0.1, 0.5}) {
            const auto w = check_eps_delta_optimal(*t, 0, 0.01, delta);
            CHECK(w.is_optimal);
        }
    }
}

TEST_CASE("capped mean below the quantile") {
    const auto t = table_from_rows({{1, 2, 3, 100}}, 1000, 1);
    CHECK(capped_mean_below_quantile(*t, 0, 0.25) == doctest::Approx(2.25));  // tau*=3
    CHECK(capped_mean_below_quantile(*t, 0, 0.0) == doctest::Approx(26.5));   // plain mean
    const auto c = table_from_rows({{5, 5, 5}}, 900, 1);
    for (const double delta : {0.0, 0.2, 0.6})
        CHECK(capped_mean_below_quantile(*c, 0, delta) == doctest::Approx(5.0));
}

TEST_CASE("capped mean below quantile is non-increasing in delta") {
    Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const auto t = std::make_shared<RuntimeTable>(gen_synthetic(
            {SyntheticModel::log_normal(0.5 + rng.uniform01(), 0.3 + rng.uniform01())}, 1, 64, 1e7,
            0.1, rng.next_u64()));
        double prev = capped_mean_below_quantile(*t, 0, 0.0);
        for (const double delta : {0.05, 0.1, 0.2, 0.4, 0.7}) {
            const double cur = capped_mean_below_quantile(*t, 0, delta);
            CHECK(cur <= prev + 1e-12);
            prev = cur;
        }
    }
}

TEST_CASE("witness agrees with exhaustive threshold search on random tables") {
    Rng rng(4242);
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<SyntheticModel> models;
        for (int i = 0; i < 8; ++i)
            models.push_back(SyntheticModel::log_normal(0.3 * rng.uniform01() + 0.1 * i,
                                                        0.3 + 0.8 * rng.uniform01()));
        const auto t =
            std::make_shared<RuntimeTable>(gen_synthetic(models, 8, 64, 1e8, 0.05, rng.next_u64()));
        const double eps = 0.05 + 0.5 * rng.uniform01();
        const double delta = 0.4 * rng.uniform01();
        for (std::int64_t i = 0; i < 8; ++i) {
            const bool expected = brute_force_optimal(*t, i, eps, delta);
            const auto w = check_eps_delta_optimal(*t, i, eps, delta);
            CHECK(w.is_optimal == expected);
        }
    }
}

TEST_CASE("quantile at a censored cell fails loudly") {
    const auto t = table_from_rows({{1, 900, 900}}, 900, 1);  // 2/3 censored
    CHECK_THROWS_AS(check_eps_delta_optimal(*t, 0, 0.2, 0.25), Error);
    // delta large enough to sit below the censored mass still works
    const auto w = check_eps_delta_optimal(*t, 0, 0.2, 0.7);
    CHECK(w.witness_tau.has_value());
}

TEST_CASE("streaming and full-scan row statistics agree") {
    Rng rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        const auto t = std::make_shared<RuntimeTable>(gen_synthetic(
            {SyntheticModel::log_normal(rng.uniform01(), 0.5 + rng.uniform01())}, 1, 512, 1e6, 0.1,
            rng.next_u64()));
        const std::span<const double> row(t->values.data(), 512);
        const double tau = 0.5 + 10.0 * rng.uniform01();
        detail::StreamingRowStats stream(tau);
        for (double v : row) stream.add(v);
        CHECK(stream.capped_mean() ==
              doctest::Approx(detail::row_capped_mean(row, tau)).epsilon(1e-13));
        CHECK(stream.tail_prob() == detail::row_tail_prob(row, tau));
    }
}

TEST_CASE("zero-variance radius reduces to the linear term") {
    // sigma=0: C = 3 tau ln(6 n k (k+1)/zeta) / b
    const double log_term = std::log(6.0 * 4 * 1 * 2 / 0.1);
    const double c = bernstein_radius(0.0, 12.0, 100, log_term);
    CHECK(c == doctest::Approx(3.0 * 12.0 * log_term / 100.0).epsilon(1e-14));
}

TEST_CASE("event harness sees no violations on a deterministic table") {
    const auto t = table_from_rows({{2, 2, 2, 2}, {5, 5, 5, 5}}, 900, 1);
    SearchParams p;
    p.epsilon = 0.25;
    p.delta = 0.3;
    p.zeta = 0.1;
    p.kappa0 = 1.0;
    const auto stats = event_harness(t, p, 20, 99);
    CHECK(stats.trials == 20);
    CHECK(stats.e1_violations == 0);
    CHECK(stats.e2_violations == 0);
    CHECK(stats.violated_trials == 0);
    CHECK(stats.checks > 0);
    CHECK(!stats.radii.empty());
}

TEST_CASE("event harness violation rate respects the union bound on noisy tables") {
    std::vector<SyntheticModel> models;
    for (int i = 0; i < 5; ++i) models.push_back(SyntheticModel::log_normal(0.5 + 0.2 * i, 0.8));
    const auto t = std::make_shared<RuntimeTable>(gen_synthetic(models, 5, 2000, 1e6, 0.5, 1234));
    SearchParams p;
    p.epsilon = 0.25;
    p.delta = 0.25;
    p.zeta = 0.1;
    p.kappa0 = 0.5;
    const std::int64_t trials = 100;
    const auto stats = event_harness(t, p, trials, 7);
    const double freq =
        static_cast<double>(stats.violated_trials) / static_cast<double>(trials);
    const double bound = 0.1 + 3.0 * std::sqrt(0.1 * 0.9 / static_cast<double>(trials));
    CHECK(freq <= bound);
}

TEST_CASE("curve output is sorted ascending by value") {
    std::vector<SyntheticModel> models = {SyntheticModel::constant(5.0),
                                          SyntheticModel::constant(2.0),
                                          SyntheticModel::constant(9.0)};
    const auto t = gen_synthetic(models, 3, 50, 900, 1, 3);
    std::ostringstream out;
    write_curve_csv(out, t, 0.1);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "config_rank,config_id,value");
    double prev = -1;
    int rows = 0;
    while (std::getline(in, line)) {
        const auto c1 = line.find(','), c2 = line.rfind(',');
        const double value = std::stod(line.substr(c2 + 1));
        CHECK(value >= prev);
        prev = value;
        ++rows;
    }
    CHECK(rows == 3);
}
