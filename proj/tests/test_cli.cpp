#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "capsearch/report.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("capsearch_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
};

struct CmdResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CmdResult run_cli(const std::string& args, const fs::path& dir) {
    const auto out_f = dir / "stdout.txt";
    const auto err_f = dir / "stderr.txt";
    const std::string cmd = std::string(CAPSEARCH_CLI_PATH) + " " + args + " > " +
                            out_f.string() + " 2> " + err_f.string();
    const int rc = std::system(cmd.c_str());
    CmdResult r;
    r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    r.out = slurp(out_f);
    r.err = slurp(err_f);
    return r;
}

// Generates the shared three-config table once per binary run.
const fs::path& shared_table(const TempDir& dir) {
    static fs::path table;
    if (table.empty()) {
        table = dir.path / "t.csv";
        const auto r = run_cli("gen --out " + table.string() +
                                   " --n-configs 3 --n-instances 60"
                                   " --model lognormal:0.2:0.4 --model lognormal:0.8:0.4"
                                   " --model lognormal:1.4:0.4 --cap 1000 --kappa0 0.1 --seed 5",
                               dir.path);
        REQUIRE(r.code == 0);
    }
    return table;
}

TempDir& tmp() {
    static TempDir dir;
    return dir;
}

}  // namespace

TEST_CASE("run emits a parseable deterministic report") {
    const auto& table = shared_table(tmp());
    const std::string base = "run --table " + table.string() +
                             " --epsilon 0.2 --delta 0.2 --zeta 0.1 --multiplier 1.25"
                             " --stopping ebg --seed 7 --out ";
    const auto r1 = run_cli(base + (tmp().path / "r1.json").string(), tmp().path);
    CHECK(r1.code == 0);
    const auto r2 = run_cli(base + (tmp().path / "r2.json").string(), tmp().path);
    CHECK(r2.code == 0);

    const auto doc1 = nlohmann::ordered_json::parse(slurp(tmp().path / "r1.json"));
    const auto doc2 = nlohmann::ordered_json::parse(slurp(tmp().path / "r2.json"));
    CHECK(doc1.at("schema_version").get<int>() == capsearch::kReportSchemaVersion);
    CHECK(doc1.at("chosen_config").is_number());
    CHECK(doc1.at("params").at("multiplier").get<double>() == 1.25);
    CHECK(doc1.at("phases").is_array());
    CHECK(!doc1.at("phases").empty());
    const auto& totals = doc1.at("totals");
    CHECK(totals.at("resume_seconds").get<double>() <=
          totals.at("no_resume_seconds").get<double>());
    CHECK(totals.at("no_resume_cpu_days").get<double>() ==
          doctest::Approx(totals.at("no_resume_seconds").get<double>() / 86400.0));

    // byte-for-byte deterministic once timestamps are stripped
    CHECK(capsearch::algorithmic_fields(doc1).dump() == capsearch::algorithmic_fields(doc2).dump());
}

TEST_CASE("run writes a per-phase trace when asked") {
    const auto& table = shared_table(tmp());
    const auto trace = tmp().path / "trace.csv";
    const auto r = run_cli("run --table " + table.string() +
                               " --epsilon 0.25 --delta 0.25 --seed 3 --out " +
                               (tmp().path / "rt.json").string() + " --trace " + trace.string(),
                           tmp().path);
    CHECK(r.code == 0);
    std::ifstream in(trace);
    std::string header;
    std::getline(in, header);
    CHECK(header == "k,theta,tau,b,config,label,value,reason,samples,work_seconds");
    std::string line;
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows >= 3);  // at least one phase x three configs
}

TEST_CASE("epsilon outside (0, 1/3) is rejected") {
    const auto& table = shared_table(tmp());
    const auto r = run_cli("run --table " + table.string() + " --epsilon 0.4", tmp().path);
    CHECK(r.code != 0);
    CHECK(r.err.find("epsilon") != std::string::npos);
}

TEST_CASE("missing table file is an error") {
    const auto r = run_cli("run --table /nonexistent.csv", tmp().path);
    CHECK(r.code != 0);
}

TEST_CASE("sweep emits one row per multiplier with the ledger invariant") {
    const auto& table = shared_table(tmp());
    const auto csv = tmp().path / "sweep.csv";
    const auto r = run_cli("sweep --table " + table.string() +
                               " --epsilon 0.25 --delta 0.25 --seed 11"
                               " --multipliers 1.1,1.25,1.5,2.0 --out " +
                               csv.string(),
                           tmp().path);
    CHECK(r.code == 0);
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "multiplier,total_resume,total_no_resume,chosen_config,phases");
    std::string line;
    int rows = 0;
    std::map<std::string, int> chosen_counts;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++rows;
        std::stringstream ss(line);
        std::string mult, resume, no_resume, chosen, phases;
        std::getline(ss, mult, ',');
        std::getline(ss, resume, ',');
        std::getline(ss, no_resume, ',');
        std::getline(ss, chosen, ',');
        std::getline(ss, phases, ',');
        CHECK(std::stod(resume) <= std::stod(no_resume));
        ++chosen_counts[chosen];
    }
    CHECK(rows == 4);
    int max_same = 0;
    for (const auto& [k, v] : chosen_counts) max_same = std::max(max_same, v);
    CHECK(max_same >= 3);  // well-separated table picks the same winner
}

TEST_CASE("degenerate sweep equals a single run") {
    const auto& table = shared_table(tmp());
    const auto csv = tmp().path / "sweep1.csv";
    const std::string common =
        " --table " + table.string() + " --epsilon 0.25 --delta 0.25 --seed 19 --stopping fixed";
    REQUIRE(run_cli("sweep" + common + " --multipliers 2.0 --out " + csv.string(), tmp().path)
                .code == 0);
    REQUIRE(run_cli("run" + common + " --multiplier 2.0 --out " +
                        (tmp().path / "single.json").string(),
                    tmp().path)
                .code == 0);
    const auto doc = nlohmann::ordered_json::parse(slurp(tmp().path / "single.json"));

    std::ifstream in(csv);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    std::stringstream ss(row);
    std::string mult, resume, no_resume, chosen, phases;
    std::getline(ss, mult, ',');
    std::getline(ss, resume, ',');
    std::getline(ss, no_resume, ',');
    std::getline(ss, chosen, ',');
    std::getline(ss, phases, ',');
    CHECK(std::stod(chosen) == doc.at("chosen_config").get<double>());
    CHECK(std::stod(resume) == doc.at("totals").at("resume_seconds").get<double>());
    CHECK(std::stod(no_resume) == doc.at("totals").at("no_resume_seconds").get<double>());
    CHECK(std::stoi(phases) == doc.at("final_phase").get<int>());
}

TEST_CASE("verify reports optimality of the argmin-mean configuration") {
    const auto& table = shared_table(tmp());
    const auto r = run_cli("verify --table " + table.string() +
                               " --config 0 --epsilon 0.25 --delta 0.2",
                           tmp().path);
    CHECK(r.code == 0);
    const auto doc = nlohmann::ordered_json::parse(r.out);
    CHECK(doc.at("is_optimal").get<bool>());
    CHECK(doc.at("opt").is_number());
}

TEST_CASE("verify accepts a report file and emits curves") {
    const auto& table = shared_table(tmp());
    REQUIRE(run_cli("run --table " + table.string() + " --epsilon 0.25 --delta 0.25 --seed 7 --out " +
                        (tmp().path / "vr.json").string(),
                    tmp().path)
                .code == 0);
    const std::string prefix = (tmp().path / "cv_").string();
    const auto r = run_cli("verify --table " + table.string() + " --report " +
                               (tmp().path / "vr.json").string() +
                               " --epsilon 0.25 --delta 0.25 --curve --deltas 0,0.1,0.25 --out " +
                               prefix,
                           tmp().path);
    CHECK(r.code == 0);
    for (const std::string d : {"0", "0.1", "0.25"}) {
        const fs::path f = prefix + "curve_delta_" + d + ".csv";
        CHECK(fs::exists(f));
        std::ifstream in(f);
        std::string header;
        std::getline(in, header);
        CHECK(header == "config_rank,config_id,value");
        double prev = -1.0;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const double value = std::stod(line.substr(line.rfind(',') + 1));
            CHECK(value >= prev);
            prev = value;
        }
    }
}

TEST_CASE("strict censoring aborts with a precise diagnostic") {
    TempDir dir;
    const auto table = dir.path / "censored.csv";
    REQUIRE(run_cli("gen --out " + table.string() +
                        " --n-configs 1 --n-instances 30 --model constant:60 --cap 50"
                        " --kappa0 1 --seed 2",
                    dir.path)
                .code == 0);
    const std::string common = " --table " + table.string() + " --epsilon 0.25 --delta 0.25";
    const auto strict = run_cli("run" + common + " --censoring strict", dir.path);
    CHECK(strict.code != 0);
    CHECK(strict.err.find("phase k=") != std::string::npos);
    CHECK(strict.err.find("tau_k=") != std::string::npos);
    CHECK(strict.err.find("cap=50") != std::string::npos);

    const auto clamp = run_cli("run" + common + " --censoring clamp --out " +
                                   (dir.path / "clamp.json").string(),
                               dir.path);
    CHECK(clamp.code == 0);
}

TEST_CASE("gen rejects bad model specs") {
    const auto r = run_cli("gen --out /tmp/x.csv --model nonsense:1", tmp().path);
    CHECK(r.code == 2);
}

TEST_CASE("subprocess mode validates its flag set") {
    SUBCASE("exec-cmd without instances or configs") {
        const auto r = run_cli("run --exec-cmd 'solver {instance}' --kappa0 1", tmp().path);
        CHECK(r.code == 2);
    }
    SUBCASE("exec-cmd without kappa0") {
        const auto r = run_cli("run --exec-cmd 'solver {instance}' --instances-dir /tmp"
                               " --configs-json /tmp/x.json",
                               tmp().path);
        CHECK(r.code == 2);
        CHECK(r.err.find("kappa0") != std::string::npos);
    }
    SUBCASE("neither table nor exec-cmd") {
        const auto r = run_cli("run --epsilon 0.2", tmp().path);
        CHECK(r.code == 2);
    }
}

TEST_CASE("run without --out prints the report on stdout") {
    const auto& table = shared_table(tmp());
    const auto r = run_cli("run --table " + table.string() + " --epsilon 0.25 --delta 0.25 --seed 1",
                           tmp().path);
    CHECK(r.code == 0);
    const auto doc = nlohmann::ordered_json::parse(r.out);
    CHECK(doc.contains("chosen_config"));
    CHECK(doc.contains("totals"));
}
