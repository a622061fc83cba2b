#include "vrclip/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vrclip/errors.hpp"

namespace vrclip {

namespace {

std::int64_t ceil_positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw ParamError(std::string(what) + ": formula value " + std::to_string(x) +
                     " is not a positive finite number");
  }
  // Formula values that are integral up to floating-point noise must not be
  // bumped to the next integer.
  const double nudged = x - 1e-9 - 1e-12 * x;
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(nudged)));
}

// Mini-batch for gradient estimation. Finite-sum full batches use the
// identity cover so a full refresh reproduces full_grad bit for bit;
// everything else samples with replacement (i.i.d. draws, as the variance
// lemmas assume).
BatchIndices draw_batch(RngStream& rng, const Problem& p, Setting setting,
                        std::int64_t size) {
  if (size < 1) throw ParamError("draw_batch: batch size must be >= 1");
  if (setting == Setting::finite_sum && size >= p.n()) {
    return sample_batch(rng, p.n(), p.n(), Sampling::without_replacement);
  }
  return sample_batch(rng, p.n(), static_cast<int>(size), Sampling::with_replacement);
}

void check_state_vs_k(const EstimatorState& state, std::int64_t k, std::int64_t q) {
  const std::int64_t expected = (k / q) * q;
  if (k % q != 0 && state.k_last_refresh != expected) {
    throw ContractError("step: estimator state refresh epoch " +
                        std::to_string(state.k_last_refresh) +
                        " inconsistent with k=" + std::to_string(k));
  }
}

Vec apply_update(const Vec& x, const Vec& v, const ClipRule& rule,
                 IterationRecord& rec) {
  rec.v_norm = v.norm();
  if (!std::isfinite(rec.v_norm)) {
    throw OracleError("update: gradient estimator diverged to a non-finite value");
  }
  rec.eta = clip_step(rule, rec.v_norm);
  Vec x_next = x - rec.eta * v;
  if (!x_next.allFinite()) {
    throw OracleError("update: iterate diverged to a non-finite value");
  }
  return x_next;
}

}  // namespace

std::string to_string(Kind k) {
  switch (k) {
    case Kind::sgd: return "sgd";
    case Kind::clipped_sgd: return "clipped_sgd";
    case Kind::clipped_gd: return "clipped_gd";
    case Kind::svrg: return "svrg";
    case Kind::sarah: return "sarah";
    case Kind::spider: return "spider";
    case Kind::l0l1_spider: return "l0l1_spider";
  }
  return "?";
}

std::string to_string(Setting s) {
  return s == Setting::stochastic ? "stochastic" : "finite_sum";
}

Kind kind_from_string(const std::string& s) {
  for (const Kind k : {Kind::sgd, Kind::clipped_sgd, Kind::clipped_gd, Kind::svrg,
                       Kind::sarah, Kind::spider, Kind::l0l1_spider}) {
    if (to_string(k) == s) return k;
  }
  throw ParamError("unknown algorithm kind '" + s + "'");
}

Setting setting_from_string(const std::string& s) {
  if (s == "stochastic") return Setting::stochastic;
  if (s == "finite_sum") return Setting::finite_sum;
  throw ParamError("unknown setting '" + s + "'");
}

double clip_step(const ClipRule& rule, double v_norm) {
  if (!(v_norm >= 0.0) || !std::isfinite(v_norm)) {
    throw ContractError("clip_step: v_norm must be finite and non-negative");
  }
  switch (rule.mode) {
    case ClipRule::Mode::theorem_sgd: {
      const double cap = 1.0 / (2.0 * rule.L0);
      if (v_norm == 0.0) return cap;
      return std::min(cap, rule.epsilon / (rule.L0 * v_norm));
    }
    case ClipRule::Mode::theorem_spider: {
      const double cap = 1.0 / (2.0 * rule.L0);
      if (v_norm == 0.0) return cap;
      double eta = std::min(cap, rule.epsilon / (rule.L0 * v_norm));
      if (rule.L1 > 0.0) {
        eta = std::min(eta, rule.epsilon / (rule.L1 * v_norm * v_norm));
      }
      return eta;
    }
    case ClipRule::Mode::practical: {
      if (v_norm == 0.0) return rule.eta0;
      const double t = std::min({1.0, rule.c1 / v_norm, rule.c2 / (v_norm * v_norm)});
      return rule.eta0 * t;
    }
    case ClipRule::Mode::constant:
      return rule.eta0;
  }
  throw ContractError("clip_step: unknown mode");
}

AlgorithmParams derive_params(Setting setting, Kind kind, double L0, double L1,
                              double sigma, double delta, std::int64_t n,
                              double epsilon) {
  if (!(epsilon > 0.0)) throw ParamError("derive_params: epsilon must be positive");
  if (!(L0 > 0.0)) throw ParamError("derive_params: L0 must be positive");
  if (L1 < 0.0) throw ParamError("derive_params: L1 must be non-negative");
  if (delta < 0.0) throw ParamError("derive_params: delta must be non-negative");
  if (L1 > 0.0 && !(epsilon < L0 / (20.0 * L1))) {
    throw ParamError("derive_params: epsilon " + std::to_string(epsilon) +
                     " inadmissible; theorem modes require epsilon < L0/(20 L1) = " +
                     std::to_string(L0 / (20.0 * L1)));
  }

  AlgorithmParams params;
  params.kind = kind;
  params.setting = setting;
  params.epsilon = epsilon;
  params.K = delta == 0.0
                 ? 1
                 : ceil_positive(16.0 * delta * L0 / (epsilon * epsilon), "K");

  switch (kind) {
    case Kind::clipped_sgd:
    case Kind::clipped_gd: {
      if (setting == Setting::finite_sum || kind == Kind::clipped_gd) {
        if (n < 1) throw ParamError("derive_params: finite-sum needs n >= 1");
        params.S = n;
      } else {
        params.S = std::max<std::int64_t>(
            1, ceil_positive(sigma * sigma / (epsilon * epsilon), "S"));
      }
      params.clip = ClipRule{ClipRule::Mode::theorem_sgd, L0, 0.0, epsilon, 0, 0, 0};
      return params;
    }
    case Kind::spider:
    case Kind::l0l1_spider: {
      if (setting == Setting::finite_sum) {
        if (n < 1) throw ParamError("derive_params: finite-sum needs n >= 1");
        const double root = std::sqrt(static_cast<double>(n));
        params.S1 = n;
        params.S2 = ceil_positive(12.0 * root, "S2");
        params.q = ceil_positive(root, "q");
      } else {
        if (!(sigma > 0.0)) {
          throw ParamError("derive_params: stochastic SPIDER needs sigma > 0");
        }
        if (!(L1 > 0.0)) {
          throw ParamError(
              "derive_params: stochastic SPIDER parameterization needs L1 > 0");
        }
        params.S1 = ceil_positive(4.0 * sigma * sigma / (epsilon * epsilon), "S1");
        params.S2 = ceil_positive(48.0 * (L0 / L1) * (sigma / epsilon), "S2");
        params.q = ceil_positive(2.0 * (L0 / L1) * (sigma / epsilon), "q");
      }
      const double rule_L1 = kind == Kind::l0l1_spider ? L1 : 0.0;
      params.clip =
          ClipRule{ClipRule::Mode::theorem_spider, L0, rule_L1, epsilon, 0, 0, 0};
      return params;
    }
    case Kind::sgd:
    case Kind::svrg:
    case Kind::sarah:
      throw ParamError("derive_params: no theorem parameterization for kind '" +
                       to_string(kind) + "'; use explicit parameters");
  }
  throw ParamError("derive_params: unknown kind");
}

double theorem_budget(const AlgorithmParams& p, double L0, double L1,
                      double sigma, double delta, std::int64_t n) {
  const double eps = p.epsilon;
  switch (p.kind) {
    case Kind::clipped_sgd:
    case Kind::clipped_gd:
      if (p.setting == Setting::stochastic && p.kind == Kind::clipped_sgd) {
        return (16.0 * delta * L0 / (eps * eps) + 1.0) * sigma * sigma / (eps * eps);
      }
      return (16.0 * delta * L0 / (eps * eps) + 1.0) * static_cast<double>(n);
    case Kind::spider:
    case Kind::l0l1_spider:
      if (p.setting == Setting::finite_sum) {
        const double root = std::sqrt(static_cast<double>(n));
        return 208.0 * delta * L0 * root / (eps * eps) + static_cast<double>(n) +
               13.0 * root;
      }
      return 32.0 * delta * sigma * (L1 + 24.0 * L0 * L0 / L1) / (eps * eps * eps) +
             4.0 * sigma * sigma / (eps * eps) +
             2.0 * sigma * (L1 / L0 + 24.0 * L0 / L1) / eps;
    default:
      return std::numeric_limits<double>::infinity();
  }
}

Vec step_clipped_sgd(const Problem& p, const Vec& x, std::int64_t k,
                     const AlgorithmParams& params, RngStream& rng,
                     EstimatorState& state, OracleCounter& calls,
                     IterationRecord& rec) {
  const auto batch = draw_batch(rng, p, params.setting, params.S);
  state.v = p.batch_mean_grad(batch.indices, x);
  state.x_prev = x;
  calls.paper += params.S;
  calls.eval += params.S;

  rec.k = k;
  rec.calls_paper = calls.paper;
  rec.calls_eval = calls.eval;
  return apply_update(x, state.v, params.clip, rec);
}

Vec step_spider(const Problem& p, const Vec& x, std::int64_t k,
                const AlgorithmParams& params, RngStream& rng,
                EstimatorState& state, OracleCounter& calls,
                IterationRecord& rec) {
  check_state_vs_k(state, k, params.q);

  if (k % params.q == 0) {
    const auto batch = draw_batch(rng, p, params.setting, params.S1);
    state.v = p.batch_mean_grad(batch.indices, x);
    state.k_last_refresh = k;
    calls.paper += params.S1 + params.S2;  // paper convention charges S2 every step
    calls.eval += params.S1;
  } else {
    // Accumulate the two anchors separately, in batch order, so a full-batch
    // correction telescopes bit-exactly against full_grad.
    const auto batch = draw_batch(rng, p, params.setting, params.S2);
    Vec acc_x = Vec::Zero(p.d());
    Vec acc_p = Vec::Zero(p.d());
    Vec tmp(p.d());
    for (const int i : batch.indices) {
      p.component_grad(i, x, tmp);
      acc_x += tmp;
      p.component_grad(i, state.x_prev, tmp);
      acc_p += tmp;
    }
    const double m = static_cast<double>(batch.indices.size());
    state.v += acc_x / m - acc_p / m;
    calls.paper += params.S2;
    calls.eval += 2 * static_cast<std::int64_t>(batch.indices.size());
  }
  state.x_prev = x;

  rec.k = k;
  rec.calls_paper = calls.paper;
  rec.calls_eval = calls.eval;

  ClipRule rule = params.clip;
  if (params.kind == Kind::sarah) rule.mode = ClipRule::Mode::constant;
  return apply_update(x, state.v, rule, rec);
}

Vec step_svrg(const Problem& p, const Vec& x, std::int64_t k,
              const AlgorithmParams& params, RngStream& rng,
              EstimatorState& state, OracleCounter& calls,
              IterationRecord& rec) {
  check_state_vs_k(state, k, params.q);

  if (k % params.q == 0) {
    // SVRG anchors on the full batch regardless of S1.
    state.anchor_x = x;
    state.anchor_grad = p.full_grad(x);
    state.v = state.anchor_grad;
    state.k_last_refresh = k;
    calls.paper += p.n() + params.S2;
    calls.eval += p.n();
  } else {
    const auto batch = draw_batch(rng, p, params.setting, params.S2);
    Vec diff = Vec::Zero(p.d());
    Vec gx(p.d()), ga(p.d());
    for (const int i : batch.indices) {
      p.component_grad(i, x, gx);
      p.component_grad(i, state.anchor_x, ga);
      diff += gx - ga;
    }
    diff /= static_cast<double>(batch.indices.size());
    state.v = state.anchor_grad + diff;
    calls.paper += params.S2;
    calls.eval += 2 * static_cast<std::int64_t>(batch.indices.size());
  }
  state.x_prev = x;

  rec.k = k;
  rec.calls_paper = calls.paper;
  rec.calls_eval = calls.eval;

  ClipRule rule;
  rule.mode = ClipRule::Mode::constant;
  rule.eta0 = params.clip.eta0;
  return apply_update(x, state.v, rule, rec);
}

Vec step(const Problem& p, const Vec& x, std::int64_t k,
         const AlgorithmParams& params, RngStream& rng, EstimatorState& state,
         OracleCounter& calls, IterationRecord& rec) {
  switch (params.kind) {
    case Kind::sgd:
    case Kind::clipped_sgd:
    case Kind::clipped_gd:
      return step_clipped_sgd(p, x, k, params, rng, state, calls, rec);
    case Kind::svrg:
      return step_svrg(p, x, k, params, rng, state, calls, rec);
    case Kind::sarah:
    case Kind::spider:
    case Kind::l0l1_spider:
      return step_spider(p, x, k, params, rng, state, calls, rec);
  }
  throw ContractError("step: unknown kind");
}

OutputChoice select_output(const std::vector<Vec>& iterates,
                           const std::vector<IterationRecord>& trace,
                           RngStream& rng) {
  if (iterates.empty()) throw ContractError("select_output: empty trace");

  OutputChoice out;
  out.k_tilde = rng.uniform_int(static_cast<std::int64_t>(iterates.size()));
  out.x_tilde = iterates[static_cast<std::size_t>(out.k_tilde)];

  double best = std::numeric_limits<double>::infinity();
  for (const auto& rec : trace) {
    if (rec.has_grad_norm() && rec.grad_norm < best &&
        rec.k < static_cast<std::int64_t>(iterates.size())) {
      best = rec.grad_norm;
      out.k_best = rec.k;
    }
  }
  return out;
}

}  // namespace vrclip
