#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "support/mock_llm_server.hpp"

namespace fs = std::filesystem;
using minerlink::testing::MockLlmServer;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / "minerlink_cli_stdout.txt";
  const std::string cmd = std::string(MINERLINK_CLI_PATH) + " " + args + " > " + log.string() +
                          " 2>&1";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const fs::path& p) {
  const auto s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

// 24 rows, two per district; rows of one district sit ~100 m apart.
fs::path make_workspace(const std::string& name, const std::string& base_url) {
  const fs::path dir = fs::temp_directory_path() / ("minerlink_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream csv(dir / "sites.csv");
  csv << "id,site_name,district,latitude,longitude,commod1\n";
  for (int i = 0; i < 24; ++i) {
    const int d = i / 2;
    csv << "S" << i << ",Site " << d << (i % 2 ? " Mine" : "") << ",D" << d << ","
        << 40.0 + d * 0.5 << "," << -115.0 + d * 0.3 + (i % 2) * 0.001 << ",Gold\n";
  }
  const nlohmann::json cfg{
      {"datasets",
       {{{"path", "sites.csv"},
         {"source_id", "sites"},
         {"schema",
          {{"id_column", "id"}, {"lat_column", "latitude"}, {"lon_column", "longitude"}}}}}},
      {"labeler", {{"base_url", base_url}, {"max_retries", 0}, {"timeout_s", 5}}},
      {"matcher", {{"hyper", {{"epochs", 30}, {"class_weighting", true}}}}},
      {"split", {{"fractions", {0.6, 0.2, 0.2}}, {"seed", 1}}},
      {"output_dir", "out"}};
  std::ofstream(dir / "config.json") << cfg.dump(2);
  return dir;
}

std::string district(const std::string& line) {
  static const std::regex re("district:(D[0-9]+)");
  std::smatch m;
  return std::regex_search(line, m, re) ? m[1].str() : "";
}

std::string same_district(const std::string& prompt) {
  const auto a_end = prompt.find('\n');
  const auto b_end = prompt.find('\n', a_end + 1);
  const auto a = district(prompt.substr(0, a_end));
  const auto b = district(prompt.substr(a_end + 1, b_end - a_end - 1));
  return !a.empty() && a == b ? "Yes" : "No";
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit 1") {
    CHECK(run("").code == 1);
    CHECK(run("frobnicate").code == 1);
    CHECK(run("--config /nonexistent/config.json ingest").code == 1);
    CHECK(run("--help").code == 0);
  }

  TEST_CASE("evaluate scores raw counts") {
    const auto dir = fs::temp_directory_path() / "minerlink_cli_counts";
    const auto r = run("--output-dir " + dir.string() + " evaluate --counts 18,51,74617,5");
    CHECK(r.code == 0);
    CHECK(r.out.find("39.13 99.96 69.55") != std::string::npos);
    CHECK(run("--output-dir " + dir.string() + " evaluate --counts 1,2,3").code == 1);
  }

  TEST_CASE("ingest and pairs over 24 records") {
    const auto dir = make_workspace("pairs", "http://127.0.0.1:1");
    const std::string cfg = "--config " + (dir / "config.json").string();
    REQUIRE(run(cfg + " ingest").code == 0);
    CHECK(line_count(dir / "out" / "records.jsonl") == 24);
    REQUIRE(run(cfg + " pairs").code == 0);
    CHECK(line_count(dir / "out" / "pairs.jsonl") == 276);
  }

  TEST_CASE("unreachable endpoint exits 3 without writing labels") {
    const auto dir = make_workspace("unreachable", "http://127.0.0.1:1");
    const std::string cfg = "--config " + (dir / "config.json").string();
    REQUIRE(run(cfg + " ingest").code == 0);
    REQUIRE(run(cfg + " pairs").code == 0);
    const auto r = run(cfg + " label");
    CHECK(r.code == 3);
    CHECK_FALSE(fs::exists(dir / "out" / "labeled.jsonl"));
  }

  TEST_CASE("missing inputs are reported as usage errors") {
    const auto dir = make_workspace("missing", "http://127.0.0.1:1");
    const std::string cfg = "--config " + (dir / "config.json").string();
    CHECK(run(cfg + " pairs").code == 1);
    CHECK(run(cfg + " train").code == 1);
  }

  TEST_CASE("full pipeline against a local endpoint is reproducible") {
    MockLlmServer server(same_district);
    const auto dir = make_workspace("pipeline", server.base_url());
    const fs::path out = dir / "out";
    const std::string cfg = "--config " + (dir / "config.json").string();
    REQUIRE(run(cfg + " ingest").code == 0);
    REQUIRE(run(cfg + " pairs").code == 0);
    const auto labeled = run(cfg + " label");
    REQUIRE(labeled.code == 0);
    CHECK(server.requests() == 276);
    CHECK(line_count(out / "labeled.jsonl") == 276);
    const auto summary = nlohmann::json::parse(slurp(out / "label_summary.json"));
    CHECK(summary["matches"] == 12);

    REQUIRE(run(cfg + " train").code == 0);
    CHECK(fs::exists(out / "model.json"));
    REQUIRE(run(cfg + " predict").code == 0);
    CHECK(line_count(out / "predictions.jsonl") == 276);
    const auto eval = run(cfg + " evaluate --truth " + (out / "labeled.jsonl").string());
    REQUIRE(eval.code == 0);
    const auto report = nlohmann::json::parse(slurp(out / "eval_report.json"));
    CHECK(report["macro_f1"].get<double>() >= 0.9);

    REQUIRE(run(cfg + " cluster").code == 0);
    CHECK(line_count(out / "clusters.jsonl") >= 12);
    REQUIRE(run(cfg + " predict --rule").code == 0);
    REQUIRE(run(cfg + " sweep --truth " + (out / "labeled.jsonl").string() +
                " --mode BalancedGrowth --grid 4,8")
                .code == 0);
    CHECK(line_count(out / "sweep_results.csv") == 3);
    REQUIRE(run(cfg + " runtime --benchmark 6,12 --linker rule --extrapolate 300000").code == 0);
    CHECK(line_count(out / "measurements.csv") == 3);
    const auto rt = run(cfg + " runtime --k 0.073 --extrapolate 300000");
    REQUIRE(rt.code == 0);
    CHECK(rt.out.find("76041.4 days") != std::string::npos);

    // second pass: cached labels, same bytes everywhere
    const std::string labels_before = slurp(out / "labeled.jsonl");
    const std::string model_before = slurp(out / "model.json");
    REQUIRE(run(cfg + " label").code == 0);
    CHECK(server.requests() == 276);
    CHECK(slurp(out / "labeled.jsonl") == labels_before);
    REQUIRE(run(cfg + " train").code == 0);
    CHECK(slurp(out / "model.json") == model_before);
    REQUIRE(run(cfg + " --seed 5 train").code == 0);
    CHECK(slurp(out / "model.json") != model_before);
  }
}
