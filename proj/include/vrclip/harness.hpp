#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vrclip/optimizers.hpp"
#include "vrclip/problem.hpp"

namespace vrclip {

enum class Diagnostics { none, light, full };

std::string to_string(Diagnostics d);
Diagnostics diagnostics_from_string(const std::string& s);

struct ProblemSpec {
  std::string name = "quadratic";
  std::uint64_t seed = 1;
  int n = 1;
  int d = 1;
  double condition = 10.0;  // quadratic
  double margin = 1.0;      // logistic
  int d_in = 4;             // mlp
  int d_hidden = 8;         // mlp
  int classes = 3;          // mlp
  // Tuned-constant mode: explicit overrides of the certified constants.
  std::optional<double> L0, L1, sigma, f_star;
  std::optional<bool> certified;
};

Problem build_problem(const ProblemSpec& spec);

enum class ParamsSource { theorem, explicit_params };

struct RunConfig {
  ProblemSpec problem;
  Kind kind = Kind::l0l1_spider;
  Setting setting = Setting::finite_sum;
  ParamsSource source = ParamsSource::theorem;
  double epsilon = 0.1;

  // Explicit-parameter mode (and baselines).
  std::int64_t S = 0, S1 = 0, S2 = 0, q = 1, K = 1;
  std::string rule = "theorem";  // theorem | practical | constant
  double eta0 = 0.0, c1 = 0.0, c2 = 0.0;

  std::optional<std::int64_t> K_cap;  // truncate theorem K (diagnostics runs)

  // Falsification fixture: scales the stepsize rule's L0 after parameter
  // derivation, leaving K and the admissibility check on the honest values.
  double falsify_L0_factor = 1.0;

  std::vector<std::uint64_t> seeds = {1};
  Diagnostics diagnostics = Diagnostics::light;
  std::int64_t stride = 1;
  double x0_radius = 3.0;
  // When set, the starting radius is solved per instance so that
  // ||grad F(x0)|| matches this target; keeps sweep instances comparable.
  std::optional<double> x0_grad_target;
  std::optional<double> threshold;  // success / first-hit override (absolute)
  bool stop_at_first_hit = false;
};

// Success threshold of the governing theorem: 24 eps for SPIDER kinds,
// 12 eps (stochastic) or 5 eps (finite-sum) for clipped SGD/GD; baselines
// default to 5 eps unless overridden.
double default_threshold(Kind kind, Setting setting, double epsilon);

struct RunSummary {
  std::uint64_t seed = 0;
  std::int64_t K = 0;
  std::int64_t k_tilde = 0;
  double grad_norm_at_x_tilde = std::numeric_limits<double>::quiet_NaN();
  std::optional<std::int64_t> first_hit;
  std::int64_t first_hit_calls_paper = -1;
  std::int64_t first_hit_calls_eval = -1;
  std::int64_t oracle_calls_total = 0;  // paper convention
  std::int64_t oracle_calls_eval = 0;
  bool success = false;
  double success_threshold = 0.0;
  double budget_bound = std::numeric_limits<double>::infinity();
  double F_final = std::numeric_limits<double>::quiet_NaN();
  double grad_norm_final = std::numeric_limits<double>::quiet_NaN();
  std::int64_t k_best = -1;
  double grad_norm_best = std::numeric_limits<double>::quiet_NaN();
  double delta = 0.0;
  bool failed = false;
  std::string failure;
};

struct RunResult {
  std::vector<IterationRecord> trace;
  RunSummary summary;
  AlgorithmParams params;
};

// One deterministic run for the given seed. Theorem-mode preconditions are
// checked before any oracle call; an oracle domain escape is recorded as a
// failed run with the trace retained.
RunResult run_one(const RunConfig& config, const Problem& p, std::uint64_t seed);

// Convenience: builds the problem and runs config.seeds.front().
RunResult run(const RunConfig& config);

struct EnsembleResult {
  std::vector<RunSummary> summaries;
  double success_rate = 0.0;
  // Pooled realized estimator error by iteration (full diagnostics only).
  std::vector<double> mean_est_err_by_k;
  double max_pooled_mean_est_err = 0.0;
  double max_est_err_at_refresh = 0.0;
  double max_est_err = 0.0;
};

EnsembleResult ensemble(const RunConfig& config, const Problem& p,
                        const std::vector<std::uint64_t>& seeds);

// Aggregate already-executed runs into the ensemble statistics.
EnsembleResult aggregate_runs(const std::vector<RunResult>& runs);

struct ScalingPoint {
  double axis_value = 0.0;
  double median_calls = std::numeric_limits<double>::quiet_NaN();
  int hits = 0;
  int seeds = 0;
  bool censored = false;
};

struct ScalingReport {
  std::string axis;  // "epsilon" | "n"
  std::vector<ScalingPoint> points;
  bool has_slope = false;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double slope_half_width = std::numeric_limits<double>::quiet_NaN();
  std::string note;
};

// Median first-hit oracle calls (paper convention) per axis value and the
// log-log OLS slope over uncensored points. Needs >= 4 uncensored points
// spanning a ratio >= 8 before a slope is emitted.
ScalingReport sweep_scaling(const RunConfig& base, const std::string& axis,
                            const std::vector<double>& values,
                            const std::vector<std::uint64_t>& seeds);

// Count of iterations violating
//   F(x_{k+1}) <= F(x_k) - 1/8 eta ||v||^2 + 5/8 eta ||v - grad F||^2
// up to tolerance 1e-9 (1 + |F(x_k)|). Requires a full-diagnostics,
// unthinned trace.
int descent_audit(const std::vector<IterationRecord>& trace, double final_F);
int descent_audit(const RunResult& result);

}  // namespace vrclip
