#pragma once

#include <vector>

#include "vrclip/problem.hpp"
#include "vrclip/rng.hpp"

namespace vrclip {

// One probe of the local smoothness at x along a unit direction:
// local_slope uses the mean gradient, averaged_slope the root-mean-square of
// component gradient differences (the stronger averaged notion). Jensen gives
// local_slope <= averaged_slope.
struct SmoothnessSample {
  double local_slope = 0.0;
  double averaged_slope = 0.0;
  double grad_norm_at_x = 0.0;
  double displacement = 0.0;
};

// Non-negative linear envelope averaged_slope <= L0_hat + L1_hat * grad_norm.
// L0_hat/L1_hat carry the 1.2x safety inflation applied after the fit is
// scaled up to cover every audited sample, so max_violation <= 0 by
// construction. r_squared describes the raw least-squares fit.
struct L0L1Fit {
  double L0_hat = 0.0;
  double L1_hat = 0.0;
  double r_squared = 0.0;
  int n_samples = 0;
  double max_violation = 0.0;
};

// Probe smoothness at x: y = x + h * direction with unit direction, both
// slope fields from exact oracles. Cost: 2n component gradients.
SmoothnessSample local_smoothness(const Problem& p, const Vec& x,
                                  const Vec& direction, double h);

// Default probe displacement, small enough to sit below 1/L1 for any sane L1.
inline double default_probe_step(const Vec& x) { return 1e-4 * (1.0 + x.norm()); }

// Non-negative least squares of averaged_slope on (1, grad_norm), then
// envelope-corrected and inflated 1.2x. Requires >= 10 samples whose gradient
// norms span a ratio >= 10.
L0L1Fit fit_constants(const std::vector<SmoothnessSample>& samples);

// Envelope certificate constrained to L0/L1 = min_ratio: the smallest such
// pair dominating every sample, inflated 1.2x. A larger ratio widens the
// admissible accuracy window eps < L0/(20 L1) at the cost of a more
// conservative L0.
L0L1Fit fit_constants_min_ratio(const std::vector<SmoothnessSample>& samples,
                                double min_ratio);

// Radial audit used to certify constants: probes along random directions at
// the given radii (several per radius), plus any caller-provided points.
std::vector<SmoothnessSample> radial_smoothness_samples(
    const Problem& p, RngStream& rng, const std::vector<double>& radii,
    int per_radius);

struct Prop1Report {
  int checked_hessian = 0;
  int hessian_violations = 0;
  int checked_pairs = 0;
  int pair_violations = 0;
  double worst_excess = 0.0;  // max of lhs - rhs over all checks
  int violations() const { return hessian_violations + pair_violations; }
};

// Checks at x: (a) ||hess F(x)|| <= L0 + L1 ||grad F(x)|| via exact spectral
// norm, and (b) for `pairs` random y with ||x - y|| below the admissible
// radius, ||grad F(x) - grad F(y)|| <= (2 L0 + 2 L1 ||grad F(x)||) ||x - y||.
Prop1Report check_prop1(const Problem& p, const Vec& x, double L0, double L1,
                        RngStream& rng, int pairs = 20);

// ||v - grad F(x)||^2. Diagnostic: costs n oracle calls that are never
// charged to algorithm complexity.
double estimator_error(const Problem& p, const Vec& v, const Vec& x);

// Exact spectral norm of a symmetric matrix (d <= 50 regime).
double spectral_norm(const Mat& symmetric);

}  // namespace vrclip
