#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "vrclip/cli.hpp"
#include "vrclip/config.hpp"
#include "vrclip/serialize.hpp"

using namespace vrclip;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("vrclip_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::string write_config(const fs::path& dir, const json& doc) {
  const auto p = (dir / "config.json").string();
  write_file(p, doc.dump(2));
  return p;
}

json minimal_quadratic_config(const fs::path& out) {
  json doc;
  doc["problem"] = {{"name", "quadratic"}, {"seed", 4}, {"n", 16}, {"d", 3}};
  doc["algorithm"] = {{"kind", "clipped_gd"}, {"setting", "finite_sum"}};
  doc["params"] = {{"source", "theorem"}, {"epsilon", 0.1}, {"K_cap", 50}};
  doc["run"] = {{"seeds", {1}}, {"diagnostics", "light"}, {"x0_radius", 2.0}};
  doc["output"] = {{"dir", out.string()}};
  return doc;
}

fs::path single_subdir(const fs::path& out) {
  for (const auto& e : fs::directory_iterator(out)) {
    if (e.is_directory()) return e.path();
  }
  FAIL("no output subdirectory created");
  return {};
}

}  // namespace

TEST_CASE("cmd_run: minimal config produces a trace with K rows and exit 0") {
  TempDir tmp;
  const json doc = minimal_quadratic_config(tmp.path / "out");
  CHECK(cmd_run(write_config(tmp.path, doc)) == 0);

  const fs::path dir = single_subdir(tmp.path / "out");
  const auto trace = trace_from_csv(read_file((dir / "trace_seed1.csv").string()));
  CHECK(trace.size() == 50);  // K_cap rows
  const json summary = json::parse(read_file((dir / "summary.json").string()));
  CHECK(summary.at("version") == kToolkitVersion);
  CHECK(summary.at("config") == doc);  // replayable echo
  CHECK(summary.at("runs").size() == 1);
}

TEST_CASE("cmd_run: misspelled key fails with exit 2 before any computation") {
  TempDir tmp;
  json doc = minimal_quadratic_config(tmp.path / "out");
  doc["params"]["epsilonn"] = 0.1;
  CHECK(cmd_run(write_config(tmp.path, doc)) == 2);
  CHECK_FALSE(fs::exists(tmp.path / "out"));
}

TEST_CASE("cmd_run: inadmissible theorem epsilon exits 2 with the range") {
  TempDir tmp;
  json doc = minimal_quadratic_config(tmp.path / "out");
  doc["problem"]["name"] = "cosh";
  doc["problem"]["constants"] = {{"L0", 1.0}, {"L1", 1.0}, {"certified", true}};
  doc["params"]["epsilon"] = 0.1;  // L0/(10 L1) > admissible cap 0.05
  CHECK(cmd_run(write_config(tmp.path, doc)) == 2);
}

TEST_CASE("cmd_run: rerun gives byte-identical files") {
  TempDir tmp;
  const json doc = minimal_quadratic_config(tmp.path / "out");
  const auto cfg = write_config(tmp.path, doc);
  REQUIRE(cmd_run(cfg) == 0);
  const fs::path dir = single_subdir(tmp.path / "out");
  const std::string trace1 = read_file((dir / "trace_seed1.csv").string());
  const std::string summary1 = read_file((dir / "summary.json").string());
  REQUIRE(cmd_run(cfg) == 0);
  CHECK(read_file((dir / "trace_seed1.csv").string()) == trace1);
  CHECK(read_file((dir / "summary.json").string()) == summary1);
}

TEST_CASE("cmd_sweep: 3 points flag insufficiency; clipped GD n-sweep slope ~1") {
  TempDir tmp;
  json doc = minimal_quadratic_config(tmp.path / "out");
  doc["params"].erase("K_cap");
  doc["params"]["epsilon"] = 0.05;
  doc["run"]["x0_radius"] = 4.0;
  doc["sweep"] = {{"axis", "n"}, {"values", {32, 64, 128}}};
  CHECK(cmd_sweep(write_config(tmp.path, doc)) == 0);
  {
    const fs::path dir = single_subdir(tmp.path / "out");
    const json out = json::parse(read_file((dir / "scaling.json").string()));
    CHECK(out.at("scaling").at("has_slope") == false);
    CHECK(fs::exists(dir / "scaling_points.csv"));
    fs::remove_all(tmp.path / "out");
  }

  doc["sweep"]["values"] = {32, 64, 128, 256, 512};
  CHECK(cmd_sweep(write_config(tmp.path, doc)) == 0);
  const fs::path dir = single_subdir(tmp.path / "out");
  const json out = json::parse(read_file((dir / "scaling.json").string()));
  REQUIRE(out.at("scaling").at("has_slope") == true);
  // Up to instance-realization noise across n; the acceptance fixture pins
  // the tight window.
  CHECK(std::abs(out.at("scaling").at("slope").get<double>() - 1.0) <= 0.2);
}

TEST_CASE("cmd_sweep: config without sweep section exits 2") {
  TempDir tmp;
  const json doc = minimal_quadratic_config(tmp.path / "out");
  CHECK(cmd_sweep(write_config(tmp.path, doc)) == 2);
}

TEST_CASE("cmd_sweep: epsilon axis fits a slope and lists censored points") {
  TempDir tmp;
  json doc = minimal_quadratic_config(tmp.path / "out");
  doc["problem"]["n"] = 32;
  doc["problem"]["d"] = 4;
  doc["params"]["K_cap"] = 400;  // too short for the tightest accuracy
  doc["run"]["x0_radius"] = 20.0;
  doc["sweep"] = {{"axis", "epsilon"}, {"values", {0.8, 0.4, 0.2, 0.1, 0.0004}}};
  REQUIRE(cmd_sweep(write_config(tmp.path, doc)) == 0);
  const fs::path dir = single_subdir(tmp.path / "out");
  const json scaling = json::parse(read_file((dir / "scaling.json").string())).at("scaling");
  REQUIRE(scaling.at("has_slope") == true);
  CHECK(std::isfinite(scaling.at("slope").get<double>()));
  int censored = 0;
  for (const auto& pt : scaling.at("points")) {
    if (pt.at("censored").get<bool>()) ++censored;
  }
  CHECK(censored == 1);
}

TEST_CASE("cmd_run: every seed escaping the oracle domain exits 3") {
  TempDir tmp;
  json doc;
  doc["problem"] = {{"name", "cosh"}, {"seed", 5}, {"n", 8}, {"d", 2}};
  doc["algorithm"] = {{"kind", "clipped_gd"}, {"setting", "finite_sum"}};
  doc["params"] = {{"source", "explicit"}, {"rule", "theorem"}, {"epsilon", 0.25}, {"K", 5}};
  doc["run"] = {{"seeds", {1}}, {"diagnostics", "light"}, {"x0_radius", 5000.0}};
  doc["output"] = {{"dir", (tmp.path / "out").string()}};
  CHECK(cmd_run(write_config(tmp.path, doc)) == 3);
}

TEST_CASE("cmd_audit: quadratic prop1 passes; falsified descent fails; mlp exits 2") {
  TempDir tmp;
  json doc = minimal_quadratic_config(tmp.path / "out");
  doc["problem"]["d"] = 4;
  doc["audit"] = {{"kinds", {"prop1"}}, {"points", 10}, {"pairs", 10}};
  CHECK(cmd_audit(write_config(tmp.path, doc)) == 0);
  fs::remove_all(tmp.path / "out");

  json bad = minimal_quadratic_config(tmp.path / "out");
  bad["params"]["epsilon"] = 0.2;
  bad["params"]["K_cap"] = 30;
  bad["run"]["diagnostics"] = "full";
  bad["audit"] = {{"kinds", {"descent"}}, {"falsify_L0_factor", 0.01}};
  CHECK(cmd_audit(write_config(tmp.path, bad)) == 1);
  {
    const fs::path dir = single_subdir(tmp.path / "out");
    const json out = json::parse(read_file((dir / "audit.json").string()));
    CHECK(out.at("descent").at("violations").get<int>() > 0);
    fs::remove_all(tmp.path / "out");
  }

  json mlp = minimal_quadratic_config(tmp.path / "out");
  mlp["problem"] = {{"name", "mlp"}, {"seed", 2}, {"n", 12},
                    {"d_in", 3},     {"d_hidden", 4}, {"classes", 2}};
  mlp["params"]["source"] = "explicit";
  mlp["params"]["K"] = 5;
  mlp["audit"] = {{"kinds", {"prop1"}}};
  CHECK(cmd_audit(write_config(tmp.path, mlp)) == 2);
}

TEST_CASE("cmd_report: tables, ordering, and the fit cross-check") {
  TempDir tmp;
  const fs::path out = tmp.path / "out";

  // Two methods over the same cosh fixture, full diagnostics. The long
  // clipped GD run spans a wide gradient range so a trajectory fit exists.
  json doc;
  doc["problem"] = {{"name", "cosh"}, {"seed", 5}, {"n", 64}, {"d", 4}};
  doc["algorithm"] = {{"kind", "l0l1_spider"}, {"setting", "finite_sum"}};
  doc["params"] = {{"source", "theorem"}, {"epsilon", 0.1}, {"K_cap", 4000}};
  doc["run"] = {{"seeds", {1}}, {"diagnostics", "full"}, {"x0_radius", 4.0}};
  doc["output"] = {{"dir", out.string()}};
  REQUIRE(cmd_run(write_config(tmp.path, doc)) == 0);
  doc["algorithm"]["kind"] = "clipped_gd";
  REQUIRE(cmd_run(write_config(tmp.path, doc)) == 0);

  CHECK(cmd_report(out.string()) == 0);
  CHECK(fs::exists(out / "smoothness_vs_gradnorm.csv"));
  CHECK(fs::exists(out / "loss_vs_calls.csv"));
  CHECK(fs::exists(out / "est_err_vs_k.csv"));
  const std::string table = read_file((out / "summary_table.txt").string());
  const auto pos_gd = table.find("clipped_gd");
  const auto pos_spider = table.find("l0l1_spider");
  REQUIRE(pos_gd != std::string::npos);
  REQUIRE(pos_spider != std::string::npos);
  CHECK(pos_gd < pos_spider);  // rows sorted by method name

  // Cross-check: the smoothness table re-fit matches the stored fit closely.
  std::optional<L0L1Fit> stored;
  for (const auto& e : fs::directory_iterator(out)) {
    if (!e.is_directory()) continue;
    const json summary = json::parse(read_file((e.path() / "summary.json").string()));
    if (summary.contains("trajectory_fit") &&
        summary.at("params").at("kind") == "clipped_gd") {
      stored = fit_from_json(summary.at("trajectory_fit"));
    }
  }
  REQUIRE(stored.has_value());

  std::ifstream smooth((out / "smoothness_vs_gradnorm.csv").string());
  std::string line;
  std::getline(smooth, line);  // header
  std::vector<SmoothnessSample> samples;
  while (std::getline(smooth, line)) {
    const auto c1 = line.find(','), c2 = line.find(',', c1 + 1),
               c3 = line.find(',', c2 + 1);
    if (line.substr(0, c1) != "clipped_gd") continue;
    SmoothnessSample s;
    s.grad_norm_at_x = std::stod(line.substr(c2 + 1, c3 - c2 - 1));
    s.averaged_slope = std::stod(line.substr(c3 + 1));
    samples.push_back(s);
  }
  const L0L1Fit refit = fit_constants(samples);
  CHECK(std::abs(refit.L0_hat - stored->L0_hat) <= 1e-9);
  CHECK(std::abs(refit.L1_hat - stored->L1_hat) <= 1e-9);
}

TEST_CASE("cmd_report: empty directory exits 2") {
  TempDir tmp;
  fs::create_directories(tmp.path / "empty");
  CHECK(cmd_report((tmp.path / "empty").string()) == 2);
}

TEST_CASE("summary round-trip: parse(serialize(s)) == s") {
  RunSummary s;
  s.seed = 9;
  s.K = 100;
  s.k_tilde = 42;
  s.grad_norm_at_x_tilde = 0.125;
  s.first_hit = 17;
  s.first_hit_calls_paper = 1234;
  s.first_hit_calls_eval = 2468;
  s.oracle_calls_total = 9999;
  s.oracle_calls_eval = 19998;
  s.success = true;
  s.success_threshold = 6.0;
  s.budget_bound = 1e6;
  s.F_final = 1.5;
  s.grad_norm_final = 0.01;
  s.k_best = 99;
  s.grad_norm_best = 0.005;
  s.delta = 3.25;

  const RunSummary t = summary_from_json(summary_to_json(s));
  CHECK(t.seed == s.seed);
  CHECK(t.K == s.K);
  CHECK(t.k_tilde == s.k_tilde);
  CHECK(t.grad_norm_at_x_tilde == s.grad_norm_at_x_tilde);
  CHECK(t.first_hit == s.first_hit);
  CHECK(t.first_hit_calls_paper == s.first_hit_calls_paper);
  CHECK(t.oracle_calls_total == s.oracle_calls_total);
  CHECK(t.success == s.success);
  CHECK(t.success_threshold == s.success_threshold);
  CHECK(t.budget_bound == s.budget_bound);
  CHECK(t.F_final == s.F_final);
  CHECK(t.grad_norm_final == s.grad_norm_final);
  CHECK(t.k_best == s.k_best);
  CHECK(t.grad_norm_best == s.grad_norm_best);
  CHECK(t.delta == s.delta);
  CHECK(t.failed == s.failed);
}

TEST_CASE("trace csv: header is pinned and parsing is strict") {
  CHECK(std::string(kTraceHeader) ==
        "k,F,grad_norm,v_norm,eta,calls_paper,calls_eval,est_err_sq,local_smoothness");
  CHECK_THROWS_AS(trace_from_csv("k,F\n0,1\n"), ParamError);

  IterationRecord r;
  r.k = 0;
  r.F_x = 1.0 / 3.0;
  r.v_norm = 0.1;
  r.eta = 0.2;
  r.calls_paper = 5;
  r.calls_eval = 10;
  const auto back = trace_from_csv(trace_to_csv({r}));
  REQUIRE(back.size() == 1);
  CHECK(back[0].F_x == r.F_x);  // round-trip exact
  CHECK(std::isnan(back[0].grad_norm));
}
