#include "vrclip/smoothlab.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "vrclip/errors.hpp"

namespace vrclip {

namespace {

Vec random_unit(RngStream& rng, int d) {
  Vec u(d);
  double nrm = 0.0;
  do {
    for (int i = 0; i < d; ++i) u[i] = rng.normal();
    nrm = u.norm();
  } while (nrm == 0.0);
  return u / nrm;
}

}  // namespace

double spectral_norm(const Mat& symmetric) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetric, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return std::max(std::abs(ev.minCoeff()), std::abs(ev.maxCoeff()));
}

SmoothnessSample local_smoothness(const Problem& p, const Vec& x,
                                  const Vec& direction, double h) {
  if (h <= 0.0) throw ParamError("local_smoothness: h must be positive");
  if (std::abs(direction.norm() - 1.0) > 1e-8) {
    throw ParamError("local_smoothness: direction must be unit length");
  }
  const Vec y = x + h * direction;

  SmoothnessSample s;
  s.displacement = h;

  Vec gx(p.d()), gy(p.d());
  Vec mean_x = Vec::Zero(p.d());
  Vec mean_y = Vec::Zero(p.d());
  double sq_acc = 0.0;
  for (int i = 0; i < p.n(); ++i) {
    p.component_grad(i, x, gx);
    p.component_grad(i, y, gy);
    mean_x += gx;
    mean_y += gy;
    sq_acc += (gx - gy).squaredNorm();
  }
  const double n = static_cast<double>(p.n());
  mean_x /= n;
  mean_y /= n;

  s.grad_norm_at_x = mean_x.norm();
  s.local_slope = (mean_x - mean_y).norm() / h;
  s.averaged_slope = std::sqrt(sq_acc / n) / h;
  return s;
}

L0L1Fit fit_constants(const std::vector<SmoothnessSample>& samples) {
  if (samples.size() < 10) {
    throw ParamError("fit_constants: need at least 10 samples");
  }
  double gmin = samples.front().grad_norm_at_x;
  double gmax = gmin;
  for (const auto& s : samples) {
    gmin = std::min(gmin, s.grad_norm_at_x);
    gmax = std::max(gmax, s.grad_norm_at_x);
  }
  if (gmax <= 0.0 || gmax == gmin) {
    throw ParamError("fit_constants: degenerate design, gradient norms do not vary");
  }
  if (gmin > 0.0 && gmax / gmin < 10.0) {
    throw ParamError("fit_constants: gradient norm range ratio below 10");
  }

  // Unconstrained normal equations for y = a + b g, then clamp to the
  // non-negative orthant (two-variable active set).
  const double m = static_cast<double>(samples.size());
  double sg = 0.0, sgg = 0.0, sy = 0.0, sgy = 0.0;
  for (const auto& s : samples) {
    sg += s.grad_norm_at_x;
    sgg += s.grad_norm_at_x * s.grad_norm_at_x;
    sy += s.averaged_slope;
    sgy += s.grad_norm_at_x * s.averaged_slope;
  }
  const double det = m * sgg - sg * sg;
  double a = 0.0, b = 0.0;
  if (det > 0.0) {
    a = (sgg * sy - sg * sgy) / det;
    b = (m * sgy - sg * sy) / det;
  }
  if (b < 0.0) {
    b = 0.0;
    a = sy / m;
  }
  if (a <= 0.0) {
    // Intercept hit the boundary; pin it to the smallest observed slope so
    // L0 stays strictly positive for downstream stepsizes (raising the
    // intercept keeps the envelope valid).
    double ymin = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) {
      if (s.averaged_slope > 0.0) ymin = std::min(ymin, s.averaged_slope);
    }
    a = std::isfinite(ymin) ? ymin : 1e-12;
    b = sgg > 0.0 ? std::max(0.0, (sgy - a * sg) / sgg) : 0.0;
  }

  L0L1Fit fit;
  fit.n_samples = static_cast<int>(samples.size());

  double ss_res = 0.0, ss_tot = 0.0;
  const double ybar = sy / m;
  for (const auto& s : samples) {
    const double pred = a + b * s.grad_norm_at_x;
    ss_res += (s.averaged_slope - pred) * (s.averaged_slope - pred);
    ss_tot += (s.averaged_slope - ybar) * (s.averaged_slope - ybar);
  }
  fit.r_squared = ss_tot > 0.0 ? std::max(0.0, 1.0 - ss_res / ss_tot) : 0.0;

  // Scale the fitted line up until it dominates every audited sample, then
  // apply the 1.2x safety factor.
  double envelope = 1.0;
  for (const auto& s : samples) {
    const double pred = a + b * s.grad_norm_at_x;
    if (pred > 0.0) envelope = std::max(envelope, s.averaged_slope / pred);
  }
  fit.L0_hat = 1.2 * envelope * a;
  fit.L1_hat = 1.2 * envelope * b;

  fit.max_violation = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    fit.max_violation =
        std::max(fit.max_violation, s.averaged_slope -
                                        (fit.L0_hat + fit.L1_hat * s.grad_norm_at_x));
  }
  return fit;
}

L0L1Fit fit_constants_min_ratio(const std::vector<SmoothnessSample>& samples,
                                double min_ratio) {
  if (samples.size() < 10) {
    throw ParamError("fit_constants_min_ratio: need at least 10 samples");
  }
  if (!(min_ratio > 0.0)) {
    throw ParamError("fit_constants_min_ratio: ratio must be positive");
  }
  double b = 0.0;
  for (const auto& s : samples) {
    b = std::max(b, s.averaged_slope / (min_ratio + s.grad_norm_at_x));
  }
  if (b == 0.0) b = 1e-12;

  L0L1Fit fit;
  fit.n_samples = static_cast<int>(samples.size());
  fit.L0_hat = 1.2 * min_ratio * b;
  fit.L1_hat = 1.2 * b;

  double ss_res = 0.0, ss_tot = 0.0, ybar = 0.0;
  for (const auto& s : samples) ybar += s.averaged_slope;
  ybar /= static_cast<double>(samples.size());
  fit.max_violation = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    const double pred = fit.L0_hat + fit.L1_hat * s.grad_norm_at_x;
    ss_res += (s.averaged_slope - pred) * (s.averaged_slope - pred);
    ss_tot += (s.averaged_slope - ybar) * (s.averaged_slope - ybar);
    fit.max_violation = std::max(fit.max_violation, s.averaged_slope - pred);
  }
  fit.r_squared = ss_tot > 0.0 ? std::max(0.0, 1.0 - ss_res / ss_tot) : 0.0;
  return fit;
}

std::vector<SmoothnessSample> radial_smoothness_samples(
    const Problem& p, RngStream& rng, const std::vector<double>& radii,
    int per_radius) {
  std::vector<SmoothnessSample> out;
  out.reserve(radii.size() * static_cast<std::size_t>(per_radius));
  for (const double r : radii) {
    for (int j = 0; j < per_radius; ++j) {
      const Vec x = r * random_unit(rng, p.d());
      const Vec dir = random_unit(rng, p.d());
      out.push_back(local_smoothness(p, x, dir, default_probe_step(x)));
    }
  }
  return out;
}

Prop1Report check_prop1(const Problem& p, const Vec& x, double L0, double L1,
                        RngStream& rng, int pairs) {
  if (!p.has_hessian()) {
    throw ParamError("check_prop1: problem '" + p.name() +
                     "' provides no exact hessian");
  }
  if (p.d() > 50) throw ParamError("check_prop1: requires d <= 50");

  Prop1Report report;
  const Vec gx = p.full_grad(x);
  const double gnorm = gx.norm();

  const double hess_norm = spectral_norm(p.hessian(x));
  const double hess_bound = L0 + L1 * gnorm;
  report.checked_hessian = 1;
  report.worst_excess = hess_norm - hess_bound;
  if (hess_norm > hess_bound) report.hessian_violations = 1;

  const double radius_cap = L1 > 0.0 ? 1.0 / L1 : 1.0 + x.norm();
  const double pair_bound_coeff = 2.0 * L0 + 2.0 * L1 * gnorm;
  for (int j = 0; j < pairs; ++j) {
    const double r = radius_cap * rng.uniform();
    if (r == 0.0) continue;
    const Vec y = x + r * random_unit(rng, p.d());
    const Vec gy = p.full_grad(y);
    const double lhs = (gx - gy).norm();
    const double rhs = pair_bound_coeff * r;
    ++report.checked_pairs;
    report.worst_excess = std::max(report.worst_excess, lhs - rhs);
    if (lhs > rhs) ++report.pair_violations;
  }
  return report;
}

double estimator_error(const Problem& p, const Vec& v, const Vec& x) {
  return (v - p.full_grad(x)).squaredNorm();
}

}  // namespace vrclip
