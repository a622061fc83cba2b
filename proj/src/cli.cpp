#include "vrclip/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "vrclip/config.hpp"
#include "vrclip/errors.hpp"
#include "vrclip/problems.hpp"
#include "vrclip/serialize.hpp"
#include "vrclip/smoothlab.hpp"

namespace vrclip {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json problem_echo(const Problem& p) {
  json j;
  j["name"] = p.name();
  j["n"] = p.n();
  j["d"] = p.d();
  j["L0"] = p.meta().L0;
  j["L1"] = p.meta().L1;
  j["sigma"] = p.meta().sigma;
  j["f_star"] = p.meta().f_star;
  j["constants_certified"] = p.meta().constants_certified;
  return j;
}

json params_echo(const AlgorithmParams& params) {
  json j;
  j["kind"] = to_string(params.kind);
  j["setting"] = to_string(params.setting);
  j["S"] = params.S;
  j["S1"] = params.S1;
  j["S2"] = params.S2;
  j["q"] = params.q;
  j["K"] = params.K;
  j["epsilon"] = params.epsilon;
  return j;
}

fs::path prepare_out_dir(const CliConfig& cfg) {
  const fs::path dir = fs::path(cfg.output_dir) / config_hash(cfg.echo);
  fs::create_directories(dir);
  return dir;
}

// Trajectory smoothness fit from full-diagnostics trace columns
// (local_smoothness vs grad_norm). Empty when too few usable rows.
std::optional<L0L1Fit> trajectory_fit(const std::vector<IterationRecord>& trace) {
  std::vector<SmoothnessSample> samples;
  for (const auto& r : trace) {
    if (!r.has_grad_norm() || std::isnan(r.local_smoothness)) continue;
    SmoothnessSample s;
    s.grad_norm_at_x = r.grad_norm;
    s.averaged_slope = r.local_smoothness;
    s.local_slope = r.local_smoothness;
    samples.push_back(s);
  }
  if (samples.size() < 10) return std::nullopt;
  try {
    return fit_constants(samples);
  } catch (const ParamError&) {
    return std::nullopt;
  }
}

struct LoadedRun {
  json summary;
  std::vector<std::pair<std::uint64_t, std::vector<IterationRecord>>> traces;
};

std::vector<LoadedRun> load_runs(const fs::path& dir) {
  std::vector<fs::path> candidates;
  if (fs::exists(dir / "summary.json")) candidates.push_back(dir);
  if (fs::is_directory(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_directory() && fs::exists(entry.path() / "summary.json")) {
        candidates.push_back(entry.path());
      }
    }
  }
  std::sort(candidates.begin(), candidates.end());

  std::vector<LoadedRun> runs;
  for (const auto& c : candidates) {
    LoadedRun run;
    run.summary = json::parse(read_file((c / "summary.json").string()));
    for (const auto& entry : fs::directory_iterator(c)) {
      const std::string fname = entry.path().filename().string();
      if (fname.rfind("trace_seed", 0) == 0 && entry.path().extension() == ".csv") {
        const std::uint64_t seed =
            std::stoull(fname.substr(10, fname.size() - 14));
        run.traces.emplace_back(seed, trace_from_csv(read_file(entry.path().string())));
      }
    }
    std::sort(run.traces.begin(), run.traces.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    runs.push_back(std::move(run));
  }
  return runs;
}

int usage_error(const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  return 2;
}

}  // namespace

int cmd_run(const std::string& config_path) {
  CliConfig cfg;
  try {
    cfg = parse_config_file(config_path);
  } catch (const ParamError& e) {
    return usage_error(e.what());
  }

  try {
    const Problem p = build_problem(cfg.run.problem);
    const fs::path dir = prepare_out_dir(cfg);

    json out;
    out["version"] = kToolkitVersion;
    out["config"] = cfg.echo;
    out["problem"] = problem_echo(p);

    json runs = json::array();
    std::vector<RunResult> results;
    std::size_t fit_source = 0;
    std::optional<L0L1Fit> fit;
    for (const std::uint64_t seed : cfg.run.seeds) {
      RunResult r = run_one(cfg.run, p, seed);
      if (results.empty()) out["params"] = params_echo(r.params);
      write_file((dir / ("trace_seed" + std::to_string(seed) + ".csv")).string(),
                 trace_to_csv(r.trace));
      runs.push_back(summary_to_json(r.summary));
      if (!fit && cfg.run.diagnostics == Diagnostics::full) {
        fit = trajectory_fit(r.trace);
        fit_source = runs.size() - 1;
      }
      results.push_back(std::move(r));
    }
    out["runs"] = runs;
    if (fit) {
      out["trajectory_fit"] = fit_to_json(*fit);
      out["trajectory_fit_seed"] = cfg.run.seeds[fit_source];
    }

    if (results.size() >= 2) {
      const EnsembleResult ens = aggregate_runs(results);
      json ej;
      ej["success_rate"] = ens.success_rate;
      ej["max_pooled_mean_est_err"] = ens.max_pooled_mean_est_err;
      ej["max_est_err_at_refresh"] = ens.max_est_err_at_refresh;
      ej["max_est_err"] = ens.max_est_err;
      out["ensemble"] = ej;
    }

    write_file((dir / "summary.json").string(), out.dump(2) + "\n");
    std::cout << dir.string() << "\n";

    // Seeds that escape the oracle domain mid-run still produce traces and a
    // summary; only a fully failed invocation is a runtime failure.
    const bool all_failed =
        std::all_of(results.begin(), results.end(),
                    [](const RunResult& r) { return r.summary.failed; });
    if (all_failed) {
      std::cerr << "oracle failure: every seed escaped the oracle domain\n";
      return 3;
    }
    return 0;
  } catch (const ParamError& e) {
    return usage_error(e.what());
  } catch (const OracleError& e) {
    std::cerr << "oracle failure: " << e.what() << "\n";
    return 3;
  }
}

int cmd_sweep(const std::string& config_path) {
  CliConfig cfg;
  try {
    cfg = parse_config_file(config_path);
  } catch (const ParamError& e) {
    return usage_error(e.what());
  }
  if (!cfg.sweep) return usage_error("config has no 'sweep' section");

  try {
    const fs::path dir = prepare_out_dir(cfg);
    const ScalingReport report =
        sweep_scaling(cfg.run, cfg.sweep->axis, cfg.sweep->values, cfg.run.seeds);

    json out;
    out["version"] = kToolkitVersion;
    out["config"] = cfg.echo;
    out["scaling"] = scaling_to_json(report);
    write_file((dir / "scaling.json").string(), out.dump(2) + "\n");

    std::ostringstream csv;
    csv << "axis_value,median_calls,hits,seeds,censored\n";
    for (const auto& pt : report.points) {
      csv << format_double(pt.axis_value) << ',' << format_double(pt.median_calls)
          << ',' << pt.hits << ',' << pt.seeds << ',' << (pt.censored ? 1 : 0)
          << "\n";
    }
    write_file((dir / "scaling_points.csv").string(), csv.str());
    std::cout << dir.string() << "\n";
    return 0;
  } catch (const ParamError& e) {
    return usage_error(e.what());
  } catch (const OracleError& e) {
    std::cerr << "oracle failure: " << e.what() << "\n";
    return 3;
  }
}

int cmd_audit(const std::string& config_path) {
  CliConfig cfg;
  try {
    cfg = parse_config_file(config_path);
  } catch (const ParamError& e) {
    return usage_error(e.what());
  }
  if (!cfg.audit) return usage_error("config has no 'audit' section");

  try {
    Problem p = build_problem(cfg.run.problem);
    const fs::path dir = prepare_out_dir(cfg);

    json out;
    out["version"] = kToolkitVersion;
    out["config"] = cfg.echo;
    int violations = 0;

    for (const std::string& kind : cfg.audit->kinds) {
      if (kind == "prop1") {
        RngStream rng(cfg.run.problem.seed, 7000);
        const std::vector<double> radii = {0.5, 1.0, 2.0, 4.0, 8.0};
        json points = json::array();
        int total = 0;
        double worst = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < cfg.audit->points; ++i) {
          Vec x(p.d());
          for (int j = 0; j < p.d(); ++j) x[j] = rng.normal();
          const double nrm = x.norm();
          const double r = radii[static_cast<std::size_t>(i) % radii.size()];
          if (nrm > 0.0) x *= r / nrm;
          const Prop1Report rep = check_prop1(p, x, p.meta().L0, p.meta().L1, rng,
                                              cfg.audit->pairs);
          total += rep.violations();
          worst = std::max(worst, rep.worst_excess);
        }
        json j;
        j["points"] = cfg.audit->points;
        j["pairs_per_point"] = cfg.audit->pairs;
        j["violations"] = total;
        j["worst_excess"] = worst;
        out["prop1"] = j;
        violations += total;
      } else if (kind == "fit") {
        RngStream rng(cfg.run.problem.seed, 7001);
        const auto samples =
            radial_smoothness_samples(p, rng, {0.5, 1.0, 2.0, 4.0, 8.0}, 60);
        out["fit"] = fit_to_json(fit_constants(samples));
      } else if (kind == "descent") {
        RunConfig rc = cfg.run;
        rc.diagnostics = Diagnostics::full;
        rc.stride = 1;
        rc.falsify_L0_factor = cfg.audit->falsify_L0_factor;
        const RunResult r = run_one(rc, p, cfg.run.seeds.front());
        const int v = descent_audit(r);
        json j;
        j["violations"] = v;
        j["iterations"] = static_cast<std::int64_t>(r.trace.size());
        j["falsify_L0_factor"] = cfg.audit->falsify_L0_factor;
        j["run_failed"] = r.summary.failed;
        out["descent"] = j;
        violations += v;
      }
    }

    out["total_violations"] = violations;
    write_file((dir / "audit.json").string(), out.dump(2) + "\n");
    std::cout << dir.string() << "\n";
    return violations == 0 ? 0 : 1;
  } catch (const ParamError& e) {
    return usage_error(e.what());
  } catch (const OracleError& e) {
    std::cerr << "oracle failure: " << e.what() << "\n";
    return 3;
  }
}

int cmd_report(const std::string& run_dir) {
  try {
    const fs::path dir(run_dir);
    if (!fs::exists(dir)) return usage_error("no such directory: " + run_dir);
    const auto runs = load_runs(dir);
    if (runs.empty()) return usage_error("no run outputs under: " + run_dir);

    std::ostringstream smooth, loss, est;
    smooth << "method,seed,grad_norm,local_smoothness\n";
    loss << "method,seed,calls_paper,F\n";
    est << "method,seed,k,est_err_sq\n";

    struct Row {
      std::string method, problem;
      int seeds = 0;
      double success = 0.0, final_grad = 0.0, calls = 0.0;
    };
    std::vector<Row> rows;

    for (const auto& run : runs) {
      const std::string method = run.summary.at("params").at("kind").get<std::string>();
      const std::string problem = run.summary.at("problem").at("name").get<std::string>();
      for (const auto& [seed, trace] : run.traces) {
        for (const auto& r : trace) {
          if (r.has_grad_norm() && !std::isnan(r.local_smoothness)) {
            smooth << method << ',' << seed << ',' << format_double(r.grad_norm)
                   << ',' << format_double(r.local_smoothness) << "\n";
          }
          if (!std::isnan(r.F_x)) {
            loss << method << ',' << seed << ',' << r.calls_paper << ','
                 << format_double(r.F_x) << "\n";
          }
          if (r.has_est_err()) {
            est << method << ',' << seed << ',' << r.k << ','
                << format_double(r.est_err_sq) << "\n";
          }
        }
      }
      Row row;
      row.method = method;
      row.problem = problem;
      int successes = 0;
      double grad_sum = 0.0, call_sum = 0.0;
      for (const auto& sj : run.summary.at("runs")) {
        const RunSummary s = summary_from_json(sj);
        ++row.seeds;
        if (s.success) ++successes;
        grad_sum += std::isnan(s.grad_norm_final) ? 0.0 : s.grad_norm_final;
        call_sum += static_cast<double>(s.oracle_calls_total);
      }
      if (row.seeds > 0) {
        row.success = static_cast<double>(successes) / row.seeds;
        row.final_grad = grad_sum / row.seeds;
        row.calls = call_sum / row.seeds;
      }
      rows.push_back(std::move(row));
    }

    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      return std::tie(a.method, a.problem) < std::tie(b.method, b.problem);
    });

    std::ostringstream table;
    table << "method            problem     seeds  success_rate  mean_final_grad  mean_calls_paper\n";
    for (const auto& r : rows) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%-17s %-11s %5d  %12.3f  %15.6g  %16.6g\n",
                    r.method.c_str(), r.problem.c_str(), r.seeds, r.success,
                    r.final_grad, r.calls);
      table << buf;
    }

    write_file((dir / "smoothness_vs_gradnorm.csv").string(), smooth.str());
    write_file((dir / "loss_vs_calls.csv").string(), loss.str());
    write_file((dir / "est_err_vs_k.csv").string(), est.str());
    write_file((dir / "summary_table.txt").string(), table.str());
    std::cout << dir.string() << "\n";
    return 0;
  } catch (const ParamError& e) {
    return usage_error(e.what());
  } catch (const std::exception& e) {
    return usage_error(e.what());
  }
}

}  // namespace vrclip
