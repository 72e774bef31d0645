/*
   Copyright 2026 The circulant_clt Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <catch_amalgamated.hpp>

#include "circulant_clt/cli.hpp"

using namespace circulant_clt;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::StartsWith;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run cli_run(std::vector<std::string> args) {
    args.insert(args.begin(), "circulant-clt");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(int(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::filesystem::path scratch(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("circulant_clt_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("config grammar", "[cli]") {
    const auto cfg = parse_config_text(
        "# header\n"
        "name = demo   # trailing comment\n"
        "law = uniform\n"
        "n = 63, 64 128\n"
        "powers = 2,3\n"
        "polynomial = 0, 1, 1\n"
        "polynomial = 1, 0, 0, 2\n"
        "\n"
        "replicates = 5000\n"
        "seed = 18446744073709551615\n"
        "threads = 2\n"
        "tolerance_se = 4\n"
        "theory = reversal_corrected\n",
        "demo.cfg");
    CHECK(cfg.name == "demo");
    CHECK(cfg.law == "uniform");
    CHECK(cfg.n_list == std::vector<long>{63, 64, 128});
    CHECK(cfg.powers == std::vector<int>{2, 3});
    REQUIRE(cfg.polynomials.size() == 2);
    CHECK(cfg.polynomials[1].degree() == 4);
    CHECK(cfg.replicates == 5000);
    CHECK(cfg.seed == 18446744073709551615ull);
    CHECK(cfg.parallel_width == 2);
    CHECK(cfg.tolerance_se == 4.0);
    CHECK(cfg.form == CovarianceForm::reversal_corrected);
}

TEST_CASE("config errors name the line", "[cli]") {
    CHECK_THROWS_WITH(parse_config_text("name = x\nbogus = 1\n", "f.cfg"), ContainsSubstring("f.cfg:2: bogus"));
    CHECK_THROWS_WITH(parse_config_text("n = 12a\n", "f.cfg"), ContainsSubstring("f.cfg:1: n"));
    CHECK_THROWS_WITH(parse_config_text("\n\nreplicates\n", "f.cfg"), ContainsSubstring("f.cfg:3"));
    CHECK_THROWS_WITH(parse_config_text("theory = exact\n", "f.cfg"), ContainsSubstring("closed_form"));
    CHECK_THROWS_WITH(parse_config_text("polynomial = 1\n", "f.cfg"), ContainsSubstring("degree"));
    CHECK_THROWS_AS(load_config("/nonexistent/x.cfg"), config_error);
}

TEST_CASE("bundled quickcheck preset", "[cli]") {
    const auto cfg = load_config("quickcheck");
    CHECK(cfg.n_list == std::vector<long>{256});
    CHECK(cfg.powers == std::vector<int>{2, 3});
    CHECK(cfg.replicates == 2000);
    CHECK(cfg.law == "gaussian");
    const auto file = load_config(std::string(CIRCULANT_CLT_SOURCE_DIR) + "/configs/quickcheck.cfg");
    CHECK(file.n_list == cfg.n_list);
    CHECK(file.powers == cfg.powers);
    CHECK(file.replicates == cfg.replicates);
    CHECK(file.seed == cfg.seed);
}

TEST_CASE("seed precedence: flag, environment, file", "[cli]") {
    auto cfg = load_config("quickcheck");
    const auto file_seed = cfg.seed;
    ::unsetenv(kSeedEnvironment);
    resolve_seed(cfg, std::nullopt);
    CHECK(cfg.seed == file_seed);
    ::setenv(kSeedEnvironment, "99", 1);
    resolve_seed(cfg, std::nullopt);
    CHECK(cfg.seed == 99);
    resolve_seed(cfg, 7);
    CHECK(cfg.seed == 7);
    ::setenv(kSeedEnvironment, "x1", 1);
    CHECK_THROWS_AS(resolve_seed(cfg, std::nullopt), config_error);
    ::unsetenv(kSeedEnvironment);
}

TEST_CASE("CSV tables round-trip", "[cli]") {
    ExperimentConfig cfg = load_config("quickcheck");
    cfg.polynomials.emplace_back(std::vector<double>{0.0, 1.0, 1.0});
    cfg.replicates = 1500;
    const auto result = run_experiment(cfg);
    for (const auto& r : result.reports) {
        const CsvTable t{stable_manifest("simulate", cfg), report_rows(r)};
        const std::string text = to_csv(t);
        CHECK(parse_csv(text) == t);
        CHECK(to_csv(parse_csv(text)) == text);
    }
    CsvTable odd{{{"k", "v"}}, {{3, "a,\"b\"", 0.1, std::nullopt, -1e-300, 1.0 / 3.0, "info"}}};
    CHECK(parse_csv(to_csv(odd)) == odd);
    CHECK_THROWS(parse_csv("n,statistic\n"));
}

TEST_CASE("sigma command", "[cli]") {
    auto r = cli_run({"sigma", "--powers", "2,3", "--m4", "3"});
    CHECK(r.code == 0);
    CHECK_THAT(r.out, ContainsSubstring("p,2,3\n2,2,0\n3,0,15\n"));
    r = cli_run({"sigma", "--powers", "2", "--m4", "1"});
    CHECK_THAT(r.out, ContainsSubstring("p,2\n2,0\n"));
    r = cli_run({"sigma", "--powers", "2", "--m4", "3", "--poly", "0,1"});
    CHECK_THAT(r.out, ContainsSubstring("Q=x^2,2\n"));
    r = cli_run({"--format", "json", "sigma", "--powers", "2,4", "--form", "reversal_corrected"});
    CHECK(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["sigma"][0][1].get<double>() == 24.0);
    r = cli_run({"sigma", "--powers", "2,21"});
    CHECK(r.code == 2);
    CHECK_THAT(r.err, ContainsSubstring("21"));
    CHECK(cli_run({"sigma", "--powers", "1"}).code == 2);
    CHECK(cli_run({"sigma", "--powers", "2", "--m4", "0.5"}).code == 2);
}

TEST_CASE("count command", "[cli]") {
    CHECK(cli_run({"count", "--variant", "A", "--n", "7", "--p", "2", "--k", "1"}).out == "3, ratio 0.428571, h=0.5\n");
    CHECK(cli_run({"count", "--variant", "A", "--n", "7", "--p", "2", "--k", "2"}).out == "0, ratio 0, h=0\n");
    CHECK(cli_run({"count", "--variant", "A_tilde", "--n", "8", "--k", "1"}).out == "1\n");
    CHECK(cli_run({"count", "--n", "101", "--p", "3"}).code == 0);
    CHECK(cli_run({"count", "--n", "11", "--p", "4", "--k", "4", "--distinct"}).out ==
          std::to_string(oracle::naive_distinct_prefix(11, 4, 4)) + "\n");
    CHECK(cli_run({"count", "--variant", "A_tilde", "--n", "7", "--k", "1"}).code == 2);
    CHECK(cli_run({"count", "--variant", "B", "--n", "7", "--p", "1"}).code == 2);
    CHECK(cli_run({"count", "--n", "7"}).code == 2);
    CHECK(cli_run({"count", "--n", "200001", "--p", "2"}).code == 2);
}

TEST_CASE("simulate command", "[cli]") {
    const auto dir = scratch("simulate");
    auto r = cli_run({"--out", dir.string(), "--seed", "5", "simulate", "quickcheck"});
    CHECK(r.code <= 1);
    std::vector<std::string> names;
    for (const auto& e : std::filesystem::directory_iterator(dir)) names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    CHECK(names == std::vector<std::string>{"quickcheck_n256_w2.csv", "quickcheck_n256_w3.csv",
                                            "quickcheck_summary.json"});
    const std::string csv = slurp(dir / "quickcheck_n256_w2.csv");
    CHECK_THAT(csv, StartsWith("# command: simulate\n"));
    CHECK_THAT(csv, ContainsSubstring("# seed: 5\n"));
    CHECK_THAT(csv, ContainsSubstring(std::string(kCsvHeader) + "\n256,var(w2),"));
    const auto summary = nlohmann::json::parse(slurp(dir / "quickcheck_summary.json"));
    CHECK(summary["manifest"]["seed"] == "5");
    CHECK(summary["manifest"]["outputs"].size() == 3);
    CHECK(summary["manifest"].contains("started"));

    const auto cfg = dir / "p1.cfg";
    std::ofstream(cfg) << "n = 64\npowers = 1, 2\nreplicates = 100\n";
    r = cli_run({"--out", dir.string(), "simulate", cfg.string()});
    CHECK(r.code == 2);
    CHECK_THAT(r.err, ContainsSubstring("p=1 is excluded"));
    std::ofstream(cfg) << "n = 64\npowers = 2\nreplicates = 1\n";
    r = cli_run({"--out", dir.string(), "simulate", cfg.string()});
    CHECK(r.code == 2);
    CHECK_THAT(r.err, ContainsSubstring("replicates must be >= 2"));
    std::ofstream(cfg) << "n = 64\npowers = 2\nreplicates = 10\nfrobnicate = 3\n";
    r = cli_run({"--out", dir.string(), "simulate", cfg.string()});
    CHECK(r.code == 2);
    CHECK_THAT(r.err, ContainsSubstring(":4: frobnicate"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("simulate output is byte-identical across runs and thread counts", "[cli]") {
    std::vector<std::string> texts;
    for (const char* threads : {"1", "1", "4"}) {
        const auto dir = scratch(std::string("det") + threads + std::to_string(texts.size()));
        REQUIRE(cli_run({"--out", dir.string(), "--threads", threads, "simulate", "quickcheck"}).code <= 1);
        texts.push_back(slurp(dir / "quickcheck_n256_w2.csv") + slurp(dir / "quickcheck_n256_w3.csv"));
        std::filesystem::remove_all(dir);
    }
    CHECK(texts[0] == texts[1]);
    CHECK(texts[0] == texts[2]);
}

TEST_CASE("accept command plumbing and usage errors", "[cli]") {
    const auto r = cli_run({"accept", "--list"});
    CHECK(r.code == 0);
    CHECK_THAT(r.out, StartsWith("1  "));
    CHECK_THAT(r.out, ContainsSubstring("\n11  "));
    CHECK(cli_run({"accept", "--only", "1,2"}).code == 0);
    CHECK(cli_run({"accept", "--only", "12"}).code == 2);
    CHECK(cli_run({}).code == 2);
    CHECK(cli_run({"frobnicate"}).code == 2);
    CHECK(cli_run({"--format", "xml", "sigma", "--powers", "2"}).code == 2);
}
