#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vrclip/problem.hpp"
#include "vrclip/rng.hpp"

namespace vrclip {

enum class Setting { stochastic, finite_sum };
enum class Kind { sgd, clipped_sgd, clipped_gd, svrg, sarah, spider, l0l1_spider };

std::string to_string(Kind k);
std::string to_string(Setting s);
Kind kind_from_string(const std::string& s);
Setting setting_from_string(const std::string& s);

// Stepsize rule. Theorem modes implement the exact min-of-terms schedules;
// the practical mode is eta0 * min{1, c1/||v||, c2/||v||^2}. A zero-norm
// estimator gets the constant cap.
struct ClipRule {
  enum class Mode { theorem_sgd, theorem_spider, practical, constant };
  Mode mode = Mode::constant;
  double L0 = 1.0;
  double L1 = 0.0;
  double epsilon = 0.0;
  double eta0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
};

double clip_step(const ClipRule& rule, double v_norm);

struct AlgorithmParams {
  Kind kind = Kind::l0l1_spider;
  Setting setting = Setting::finite_sum;
  std::int64_t S = 0;   // ClippedSGD batch
  std::int64_t S1 = 0;  // refresh batch
  std::int64_t S2 = 0;  // inner batch
  std::int64_t q = 1;   // refresh period
  std::int64_t K = 1;   // iterations
  double epsilon = 0.0;
  ClipRule clip;

  bool uses_estimator() const {
    return kind == Kind::svrg || kind == Kind::sarah || kind == Kind::spider ||
           kind == Kind::l0l1_spider;
  }
};

// Integer parameters via ceiling of the governing theorem's real-valued
// formulas; K = ceil(16 delta L0 / eps^2) throughout. Theorem modes with
// L1 > 0 require eps < L0 / (20 L1).
AlgorithmParams derive_params(Setting setting, Kind kind, double L0, double L1,
                              double sigma, double delta, std::int64_t n,
                              double epsilon);

// Closed-form gradient-complexity budget of the governing theorem
// (paper-convention counting).
double theorem_budget(const AlgorithmParams& p, double L0, double L1,
                      double sigma, double delta, std::int64_t n);

struct EstimatorState {
  Vec v;             // current gradient estimator
  Vec x_prev;        // iterate the estimator was built against
  Vec anchor_x;      // SVRG snapshot
  Vec anchor_grad;   // SVRG snapshot gradient
  std::int64_t k_last_refresh = 0;
};

struct IterationRecord {
  std::int64_t k = 0;
  double F_x = std::numeric_limits<double>::quiet_NaN();
  double grad_norm = std::numeric_limits<double>::quiet_NaN();
  double v_norm = 0.0;
  double eta = 0.0;
  std::int64_t calls_paper = 0;  // cumulative, paper convention
  std::int64_t calls_eval = 0;   // cumulative, per-evaluation convention
  double est_err_sq = std::numeric_limits<double>::quiet_NaN();
  double local_smoothness = std::numeric_limits<double>::quiet_NaN();

  bool has_grad_norm() const { return !std::isnan(grad_norm); }
  bool has_est_err() const { return !std::isnan(est_err_sq); }
};

// Cumulative oracle counters shared across steps of one run.
struct OracleCounter {
  std::int64_t paper = 0;
  std::int64_t eval = 0;
};

// One ClippedSGD / ClippedGD / SGD step: g = mean gradient over the batch
// (full batch when S = n in the finite-sum setting), x_next = x - eta g.
Vec step_clipped_sgd(const Problem& p, const Vec& x, std::int64_t k,
                     const AlgorithmParams& params, RngStream& rng,
                     EstimatorState& state, OracleCounter& calls,
                     IterationRecord& rec);

// One SPIDER-family step (spider, l0l1_spider, sarah): refresh the estimator
// from S1 samples when q | k, otherwise apply the recursive correction from
// S2 samples; then x_next = x - eta v.
Vec step_spider(const Problem& p, const Vec& x, std::int64_t k,
                const AlgorithmParams& params, RngStream& rng,
                EstimatorState& state, OracleCounter& calls,
                IterationRecord& rec);

// One SVRG step: full-batch anchor every q iterations, inner steps use
// v = grad_B(x) - grad_B(anchor) + anchor_grad with constant stepsize.
Vec step_svrg(const Problem& p, const Vec& x, std::int64_t k,
              const AlgorithmParams& params, RngStream& rng,
              EstimatorState& state, OracleCounter& calls,
              IterationRecord& rec);

// Dispatch on params.kind.
Vec step(const Problem& p, const Vec& x, std::int64_t k,
         const AlgorithmParams& params, RngStream& rng, EstimatorState& state,
         OracleCounter& calls, IterationRecord& rec);

struct OutputChoice {
  std::int64_t k_tilde = 0;
  Vec x_tilde;
  std::int64_t k_best = -1;  // argmin recorded gradient norm, -1 if none
};

// Uniform pick from the stored iterates x_0..x_{K-1}; also reports the
// argmin-gradient-norm iterate when gradient norms were recorded.
OutputChoice select_output(const std::vector<Vec>& iterates,
                           const std::vector<IterationRecord>& trace,
                           RngStream& rng);

}  // namespace vrclip
