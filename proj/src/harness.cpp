#include "vrclip/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vrclip/errors.hpp"
#include "vrclip/problems.hpp"
#include "vrclip/smoothlab.hpp"

namespace vrclip {

namespace {

// Fixed stream ids so every consumer draws from its own substream.
constexpr std::uint64_t kStreamProblem = 0;
constexpr std::uint64_t kStreamX0 = 1;
constexpr std::uint64_t kStreamBatches = 100;
constexpr std::uint64_t kStreamOutput = 101;

constexpr std::int64_t kMaxStoredEntries = 10'000'000;  // K*d cap for iterates

Vec unit_direction(const ProblemSpec& spec, int d) {
  RngStream rng(spec.seed, kStreamX0);
  Vec u(d);
  double nrm = 0.0;
  do {
    for (int i = 0; i < d; ++i) u[i] = rng.normal();
    nrm = u.norm();
  } while (nrm == 0.0);
  return u / nrm;
}

Vec initial_point(const RunConfig& config, const Problem& p) {
  const int d = p.d();
  if (!config.x0_grad_target && config.x0_radius == 0.0) return Vec::Zero(d);
  const Vec u = unit_direction(config.problem, d);
  if (!config.x0_grad_target) return config.x0_radius * u;

  // Solve ||grad F(r u)|| = target by bisection; the suite's gradients grow
  // with radius on these scales. Falls back to the bracket edge.
  const double target = *config.x0_grad_target;
  double lo = 1e-3, hi = 1.0;
  const double hi_max = 64.0;
  while (hi < hi_max && p.full_grad(hi * u).norm() < target) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (p.full_grad(mid * u).norm() < target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-12 * hi) break;
  }
  return (0.5 * (lo + hi)) * u;
}

AlgorithmParams build_params(const RunConfig& config, const Problem& p,
                             const Vec& x0) {
  const ProblemMeta& meta = p.meta();
  if (config.source == ParamsSource::theorem) {
    if (!meta.constants_certified) {
      throw ParamError("theorem-mode run needs certified problem constants");
    }
    const double delta = p.delta(x0);
    AlgorithmParams params =
        derive_params(config.setting, config.kind, meta.L0, meta.L1, meta.sigma,
                      delta, p.n(), config.epsilon);
    if (config.K_cap && *config.K_cap < params.K) params.K = *config.K_cap;
    params.clip.L0 *= config.falsify_L0_factor;
    return params;
  }

  AlgorithmParams params;
  params.kind = config.kind;
  params.setting = config.setting;
  params.epsilon = config.epsilon;
  params.S = config.S > 0 ? config.S : p.n();
  params.S1 = config.S1 > 0 ? config.S1 : p.n();
  params.S2 = config.S2 > 0 ? config.S2 : 1;
  params.q = config.q > 0 ? config.q : 1;
  if (config.K < 1) throw ParamError("explicit parameters need K >= 1");
  params.K = config.K;

  if (config.rule == "theorem") {
    if (!(meta.L0 > 0.0)) {
      throw ParamError("theorem stepsize rule needs a positive L0 constant");
    }
    const auto mode = (config.kind == Kind::clipped_sgd || config.kind == Kind::clipped_gd)
                          ? ClipRule::Mode::theorem_sgd
                          : ClipRule::Mode::theorem_spider;
    const double rule_L1 = config.kind == Kind::l0l1_spider ? meta.L1 : 0.0;
    params.clip = ClipRule{mode, meta.L0 * config.falsify_L0_factor, rule_L1,
                           config.epsilon, 0, 0, 0};
  } else if (config.rule == "practical") {
    if (!(config.eta0 > 0.0) || !(config.c1 > 0.0) || !(config.c2 > 0.0)) {
      throw ParamError("practical rule needs positive eta0, c1, c2");
    }
    params.clip = ClipRule{ClipRule::Mode::practical, 1.0, 0.0, 0.0,
                           config.eta0, config.c1, config.c2};
  } else if (config.rule == "constant") {
    if (!(config.eta0 > 0.0)) throw ParamError("constant rule needs positive eta0");
    params.clip = ClipRule{ClipRule::Mode::constant, 1.0, 0.0, 0.0,
                           config.eta0, 0.0, 0.0};
  } else {
    throw ParamError("unknown stepsize rule '" + config.rule + "'");
  }
  return params;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  if (m == 0) return std::numeric_limits<double>::quiet_NaN();
  return m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

}  // namespace

std::string to_string(Diagnostics d) {
  switch (d) {
    case Diagnostics::none: return "none";
    case Diagnostics::light: return "light";
    case Diagnostics::full: return "full";
  }
  return "?";
}

Diagnostics diagnostics_from_string(const std::string& s) {
  if (s == "none") return Diagnostics::none;
  if (s == "light") return Diagnostics::light;
  if (s == "full") return Diagnostics::full;
  throw ParamError("unknown diagnostics level '" + s + "'");
}

Problem build_problem(const ProblemSpec& spec) {
  RngStream rng(spec.seed, kStreamProblem);
  Problem p;
  if (spec.name == "quadratic") {
    p = make_quadratic(rng, spec.n, spec.d, spec.condition);
  } else if (spec.name == "quartic") {
    p = make_quartic(rng, spec.n, spec.d);
  } else if (spec.name == "cosh") {
    p = make_cosh(rng, spec.n, spec.d);
  } else if (spec.name == "logistic") {
    p = make_logistic(rng, spec.n, spec.d, spec.margin);
  } else if (spec.name == "mlp") {
    p = make_mlp(rng, spec.n, spec.d_in, spec.d_hidden, spec.classes);
  } else {
    throw ParamError("unknown problem '" + spec.name + "'");
  }
  if (spec.L0) p.meta().L0 = *spec.L0;
  if (spec.L1) p.meta().L1 = *spec.L1;
  if (spec.sigma) p.meta().sigma = *spec.sigma;
  if (spec.f_star) p.meta().f_star = *spec.f_star;
  if (spec.certified) p.meta().constants_certified = *spec.certified;
  return p;
}

double default_threshold(Kind kind, Setting setting, double epsilon) {
  switch (kind) {
    case Kind::spider:
    case Kind::l0l1_spider:
      return 24.0 * epsilon;
    case Kind::clipped_sgd:
      return setting == Setting::stochastic ? 12.0 * epsilon : 5.0 * epsilon;
    case Kind::clipped_gd:
      return 5.0 * epsilon;
    default:
      return 5.0 * epsilon;
  }
}

RunResult run_one(const RunConfig& config, const Problem& p, std::uint64_t seed) {
  const Vec x0 = initial_point(config, p);

  RunResult result;
  result.params = build_params(config, p, x0);
  const AlgorithmParams& params = result.params;

  RunSummary& summary = result.summary;
  summary.seed = seed;
  summary.K = params.K;
  summary.success_threshold =
      config.threshold ? *config.threshold
                       : default_threshold(config.kind, config.setting, config.epsilon);
  summary.delta = p.delta(x0);
  if (config.source == ParamsSource::theorem) {
    summary.budget_bound = theorem_budget(params, p.meta().L0, p.meta().L1,
                                          p.meta().sigma, summary.delta, p.n());
  }

  // Full diagnostics evaluate n-sized oracles several times per iteration;
  // cap the implied work so a theorem-sized K cannot silently schedule hours
  // of measurement (K_cap / stride are the knobs).
  if (config.diagnostics == Diagnostics::full &&
      static_cast<double>(params.K) * p.n() > 5e9) {
    throw ParamError(
        "full diagnostics over K = " + std::to_string(params.K) +
        " iterations exceeds the measurement budget; set K_cap or lower diagnostics");
  }

  RngStream batch_rng(seed, kStreamBatches);
  RngStream output_rng(seed, kStreamOutput);

  const bool store_all = params.K * static_cast<std::int64_t>(p.d()) <= kMaxStoredEntries;
  std::vector<Vec> iterates;
  if (store_all) iterates.reserve(static_cast<std::size_t>(params.K));

  Vec reservoir_x = x0;
  std::int64_t reservoir_k = 0;

  EstimatorState state;
  state.v = Vec::Zero(p.d());
  state.x_prev = x0;
  OracleCounter calls;

  Vec x = x0;
  std::int64_t prev_paper = 0, prev_eval = 0;
  const bool want_light = config.diagnostics != Diagnostics::none;
  const bool want_full = config.diagnostics == Diagnostics::full;

  for (std::int64_t k = 0; k < params.K; ++k) {
    if (store_all) {
      iterates.push_back(x);
    } else if (k > 0 && output_rng.uniform_int(k + 1) == 0) {
      reservoir_x = x;
      reservoir_k = k;
    }

    IterationRecord rec;
    Vec grad;
    bool have_grad = false;
    try {
      if (want_light) {
        rec.F_x = p.value(x);
        grad = p.full_grad(x);
        have_grad = true;
        rec.grad_norm = grad.norm();
      }
      const Vec x_next = step(p, x, k, params, batch_rng, state, calls, rec);
      if (want_full && have_grad) {
        rec.est_err_sq = (state.v - grad).squaredNorm();
        const double vn = state.v.norm();
        if (vn > 0.0) {
          rec.local_smoothness =
              local_smoothness(p, x, state.v / vn, default_probe_step(x)).local_slope;
        }
      }
      x = x_next;
    } catch (const OracleError& e) {
      summary.failed = true;
      summary.failure = e.what();
      break;
    }

    if (want_light && !summary.first_hit && rec.grad_norm <= summary.success_threshold) {
      summary.first_hit = k;
      summary.first_hit_calls_paper = prev_paper;
      summary.first_hit_calls_eval = prev_eval;
    }
    prev_paper = calls.paper;
    prev_eval = calls.eval;

    const bool keep = (k % config.stride == 0) || (params.uses_estimator() && k % params.q == 0) ||
                      k == params.K - 1;
    if (keep) result.trace.push_back(rec);

    if (config.stop_at_first_hit && summary.first_hit) break;
  }

  summary.oracle_calls_total = calls.paper;
  summary.oracle_calls_eval = calls.eval;

  if (!summary.failed && want_light) {
    try {
      summary.F_final = p.value(x);
      summary.grad_norm_final = p.full_grad(x).norm();
    } catch (const OracleError&) {
      summary.F_final = std::numeric_limits<double>::quiet_NaN();
    }
  }

  // Output iterate, uniform over x_0..x_{K-1} (reservoir when not stored).
  OutputChoice choice;
  if (store_all && !iterates.empty()) {
    choice = select_output(iterates, result.trace, output_rng);
  } else {
    choice.k_tilde = reservoir_k;
    choice.x_tilde = reservoir_x;
  }
  summary.k_tilde = choice.k_tilde;
  summary.k_best = choice.k_best;
  if (choice.k_best >= 0) {
    for (const auto& rec : result.trace) {
      if (rec.k == choice.k_best) summary.grad_norm_best = rec.grad_norm;
    }
  }
  if (choice.x_tilde.size() == p.d()) {
    try {
      summary.grad_norm_at_x_tilde = p.full_grad(choice.x_tilde).norm();
      summary.success = summary.grad_norm_at_x_tilde <= summary.success_threshold;
    } catch (const OracleError&) {
      summary.success = false;
    }
  }
  return result;
}

RunResult run(const RunConfig& config) {
  if (config.seeds.empty()) throw ParamError("run: config needs at least one seed");
  const Problem p = build_problem(config.problem);
  return run_one(config, p, config.seeds.front());
}

EnsembleResult aggregate_runs(const std::vector<RunResult>& runs) {
  EnsembleResult out;
  std::vector<double> sum_by_k;
  std::vector<int> count_by_k;

  int successes = 0;
  for (const RunResult& r : runs) {
    if (r.summary.success) ++successes;
    for (const auto& rec : r.trace) {
      if (!rec.has_est_err()) continue;
      const auto k = static_cast<std::size_t>(rec.k);
      if (sum_by_k.size() <= k) {
        sum_by_k.resize(k + 1, 0.0);
        count_by_k.resize(k + 1, 0);
      }
      sum_by_k[k] += rec.est_err_sq;
      ++count_by_k[k];
      out.max_est_err = std::max(out.max_est_err, rec.est_err_sq);
      if (r.params.uses_estimator() && rec.k % r.params.q == 0) {
        out.max_est_err_at_refresh = std::max(out.max_est_err_at_refresh, rec.est_err_sq);
      }
    }
    out.summaries.push_back(r.summary);
  }
  if (!runs.empty()) {
    out.success_rate = static_cast<double>(successes) / static_cast<double>(runs.size());
  }

  out.mean_est_err_by_k.resize(sum_by_k.size(), 0.0);
  for (std::size_t k = 0; k < sum_by_k.size(); ++k) {
    if (count_by_k[k] > 0) {
      out.mean_est_err_by_k[k] = sum_by_k[k] / count_by_k[k];
      out.max_pooled_mean_est_err =
          std::max(out.max_pooled_mean_est_err, out.mean_est_err_by_k[k]);
    }
  }
  return out;
}

EnsembleResult ensemble(const RunConfig& config, const Problem& p,
                        const std::vector<std::uint64_t>& seeds) {
  if (seeds.size() < 2) throw ParamError("ensemble: need at least 2 seeds");
  std::vector<RunResult> runs;
  runs.reserve(seeds.size());
  for (const std::uint64_t seed : seeds) runs.push_back(run_one(config, p, seed));
  return aggregate_runs(runs);
}

ScalingReport sweep_scaling(const RunConfig& base, const std::string& axis,
                            const std::vector<double>& values,
                            const std::vector<std::uint64_t>& seeds) {
  if (axis != "epsilon" && axis != "n") {
    throw ParamError("sweep_scaling: axis must be 'epsilon' or 'n'");
  }
  if (seeds.empty()) throw ParamError("sweep_scaling: need seeds");

  ScalingReport report;
  report.axis = axis;

  for (const double value : values) {
    RunConfig config = base;
    config.stop_at_first_hit = true;
    if (config.diagnostics == Diagnostics::none) config.diagnostics = Diagnostics::light;
    if (axis == "epsilon") {
      config.epsilon = value;
    } else {
      config.problem.n = static_cast<int>(value);
    }
    const Problem p = build_problem(config.problem);

    ScalingPoint point;
    point.axis_value = value;
    point.seeds = static_cast<int>(seeds.size());
    std::vector<double> hit_calls;
    for (const std::uint64_t seed : seeds) {
      const RunResult r = run_one(config, p, seed);
      if (r.summary.first_hit) {
        ++point.hits;
        hit_calls.push_back(static_cast<double>(r.summary.first_hit_calls_paper));
      }
    }
    point.censored = point.hits == 0;
    if (!point.censored) point.median_calls = median_of(hit_calls);
    report.points.push_back(point);
  }

  std::vector<double> lx, ly;
  double vmin = std::numeric_limits<double>::infinity(), vmax = 0.0;
  for (const auto& pt : report.points) {
    if (pt.censored || !(pt.median_calls > 0.0)) continue;
    lx.push_back(std::log(pt.axis_value));
    ly.push_back(std::log(pt.median_calls));
    vmin = std::min(vmin, pt.axis_value);
    vmax = std::max(vmax, pt.axis_value);
  }
  if (lx.size() < 4) {
    report.note = "insufficient uncensored points for a slope (need >= 4)";
    return report;
  }
  if (vmax / vmin < 8.0) {
    report.note = "axis span ratio below 8; slope not fitted";
    return report;
  }

  const double m = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / m;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  report.slope = sxy / sxx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - my - report.slope * (lx[i] - mx);
    ss_res += r * r;
  }
  const double dof = std::max(1.0, m - 2.0);
  report.slope_half_width = 1.96 * std::sqrt(ss_res / dof / sxx);
  report.has_slope = true;
  return report;
}

int descent_audit(const std::vector<IterationRecord>& trace, double final_F) {
  if (trace.empty()) return 0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (!trace[i].has_est_err() || std::isnan(trace[i].F_x)) {
      throw ContractError("descent_audit: needs full diagnostics (F, est_err_sq)");
    }
    if (trace[i].k != static_cast<std::int64_t>(i)) {
      throw ContractError("descent_audit: trace must be unthinned");
    }
  }
  int violations = 0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& rec = trace[i];
    const double f_next = i + 1 < trace.size() ? trace[i + 1].F_x : final_F;
    if (std::isnan(f_next)) continue;
    const double rhs = rec.F_x - 0.125 * rec.eta * rec.v_norm * rec.v_norm +
                       0.625 * rec.eta * rec.est_err_sq +
                       1e-9 * (1.0 + std::abs(rec.F_x));
    if (f_next > rhs) ++violations;
  }
  return violations;
}

int descent_audit(const RunResult& result) {
  return descent_audit(result.trace, result.summary.F_final);
}

}  // namespace vrclip
