#include "vrclip/problems.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <utility>

#include "vrclip/errors.hpp"
#include "vrclip/smoothlab.hpp"

namespace vrclip {

namespace {

using detail::ProblemImpl;

Vec gaussian_vec(RngStream& rng, int d, double scale) {
  Vec v(d);
  for (int i = 0; i < d; ++i) v[i] = scale * rng.normal();
  return v;
}

// ---------------------------------------------------------------------------
// Quadratic: f_i(x) = 1/2 ||A_i x - b_i||^2
// ---------------------------------------------------------------------------

class QuadraticImpl final : public ProblemImpl {
 public:
  QuadraticImpl(std::vector<Mat> As, std::vector<Vec> bs)
      : As_(std::move(As)), bs_(std::move(bs)) {
    if (As_.empty() || As_.size() != bs_.size()) {
      throw ParamError("quadratic: need matching non-empty A/b lists");
    }
    d_ = static_cast<int>(As_.front().cols());
    mean_hessian_ = Mat::Zero(d_, d_);
    for (const auto& A : As_) mean_hessian_ += A.transpose() * A;
    mean_hessian_ /= static_cast<double>(As_.size());
  }

  int n() const override { return static_cast<int>(As_.size()); }
  int d() const override { return d_; }
  std::string name() const override { return "quadratic"; }

  double component_value(int i, const Vec& x) const override {
    return 0.5 * (As_[i] * x - bs_[i]).squaredNorm();
  }

  void component_grad(int i, const Vec& x, Vec& out) const override {
    out.noalias() = As_[i].transpose() * (As_[i] * x - bs_[i]);
  }

  bool has_hessian() const override { return true; }
  Mat hessian(const Vec&) const override { return mean_hessian_; }

  const Mat& mean_hessian() const { return mean_hessian_; }
  const std::vector<Mat>& As() const { return As_; }
  const std::vector<Vec>& bs() const { return bs_; }

 private:
  std::vector<Mat> As_;
  std::vector<Vec> bs_;
  int d_ = 0;
  Mat mean_hessian_;
};

// ---------------------------------------------------------------------------
// Quartic: f_i(x) = 1/4 (w_i.x - c_i)^4
// ---------------------------------------------------------------------------

class QuarticImpl final : public ProblemImpl {
 public:
  QuarticImpl(std::vector<Vec> ws, Vec cs) : ws_(std::move(ws)), cs_(std::move(cs)) {
    if (ws_.empty() || static_cast<int>(ws_.size()) != cs_.size()) {
      throw ParamError("quartic: need matching non-empty w/c lists");
    }
    d_ = static_cast<int>(ws_.front().size());
  }

  int n() const override { return static_cast<int>(ws_.size()); }
  int d() const override { return d_; }
  std::string name() const override { return "quartic"; }

  double component_value(int i, const Vec& x) const override {
    const double u = ws_[i].dot(x) - cs_[i];
    return 0.25 * u * u * u * u;
  }

  void component_grad(int i, const Vec& x, Vec& out) const override {
    const double u = ws_[i].dot(x) - cs_[i];
    out.noalias() = (u * u * u) * ws_[i];
  }

  bool has_hessian() const override { return true; }
  Mat hessian(const Vec& x) const override {
    Mat h = Mat::Zero(d_, d_);
    for (int i = 0; i < n(); ++i) {
      const double u = ws_[i].dot(x) - cs_[i];
      h.noalias() += (3.0 * u * u) * (ws_[i] * ws_[i].transpose());
    }
    return h / static_cast<double>(n());
  }

 private:
  std::vector<Vec> ws_;
  Vec cs_;
  int d_ = 0;
};

// ---------------------------------------------------------------------------
// Cosh: f_i(x) = cosh(w_i.x - c_i), overflow-guarded
// ---------------------------------------------------------------------------

class CoshImpl final : public ProblemImpl {
 public:
  CoshImpl(std::vector<Vec> ws, Vec cs) : ws_(std::move(ws)), cs_(std::move(cs)) {
    if (ws_.empty() || static_cast<int>(ws_.size()) != cs_.size()) {
      throw ParamError("cosh: need matching non-empty w/c lists");
    }
    d_ = static_cast<int>(ws_.front().size());
  }

  int n() const override { return static_cast<int>(ws_.size()); }
  int d() const override { return d_; }
  std::string name() const override { return "cosh"; }

  double component_value(int i, const Vec& x) const override {
    return std::cosh(guarded_u(i, x));
  }

  void component_grad(int i, const Vec& x, Vec& out) const override {
    out.noalias() = std::sinh(guarded_u(i, x)) * ws_[i];
  }

  bool has_hessian() const override { return true; }
  Mat hessian(const Vec& x) const override {
    Mat h = Mat::Zero(d_, d_);
    for (int i = 0; i < n(); ++i) {
      h.noalias() += std::cosh(guarded_u(i, x)) * (ws_[i] * ws_[i].transpose());
    }
    return h / static_cast<double>(n());
  }

 private:
  double guarded_u(int i, const Vec& x) const {
    const double u = ws_[i].dot(x) - cs_[i];
    if (std::abs(u) > 700.0 || !std::isfinite(u)) {
      throw OracleError("cosh oracle: |w.x - c| = " + std::to_string(u) +
                        " escaped the admissible domain");
    }
    return u;
  }

  std::vector<Vec> ws_;
  Vec cs_;
  int d_ = 0;
};

// ---------------------------------------------------------------------------
// Logistic: f_i(x) = log(1 + exp(-y_i a_i.x))
// ---------------------------------------------------------------------------

class LogisticImpl final : public ProblemImpl {
 public:
  LogisticImpl(std::vector<Vec> as, std::vector<double> ys)
      : as_(std::move(as)), ys_(std::move(ys)) {
    d_ = static_cast<int>(as_.front().size());
  }

  int n() const override { return static_cast<int>(as_.size()); }
  int d() const override { return d_; }
  std::string name() const override { return "logistic"; }

  double component_value(int i, const Vec& x) const override {
    const double m = -ys_[i] * as_[i].dot(x);
    // log(1 + e^m), stable on both sides
    return m > 0.0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
  }

  void component_grad(int i, const Vec& x, Vec& out) const override {
    const double m = -ys_[i] * as_[i].dot(x);
    const double s = 1.0 / (1.0 + std::exp(-m));  // sigmoid(m)
    out.noalias() = (-ys_[i] * s) * as_[i];
  }

  bool has_hessian() const override { return false; }

  double max_sq_feature_norm() const {
    double m = 0.0;
    for (const auto& a : as_) m = std::max(m, a.squaredNorm());
    return m;
  }

 private:
  std::vector<Vec> as_;
  std::vector<double> ys_;
  int d_ = 0;
};

// ---------------------------------------------------------------------------
// MLP: one tanh hidden layer + softmax cross-entropy on blob data
// ---------------------------------------------------------------------------

class MlpImpl final : public ProblemImpl {
 public:
  MlpImpl(Mat data, std::vector<int> labels, int d_hidden, int classes)
      : data_(std::move(data)),
        labels_(std::move(labels)),
        din_(static_cast<int>(data_.cols())),
        h_(d_hidden),
        c_(classes) {
    if (d_hidden < 1 || classes < 2) {
      throw ParamError("mlp: need d_hidden >= 1 and classes >= 2");
    }
    if (data_.rows() != static_cast<Eigen::Index>(labels_.size())) {
      throw ParamError("mlp: data/label count mismatch");
    }
    for (const int y : labels_) {
      if (y < 0 || y >= classes) throw ParamError("mlp: label out of range");
    }
  }

  int n() const override { return static_cast<int>(labels_.size()); }
  int d() const override { return h_ * din_ + h_ + c_ * h_ + c_; }
  std::string name() const override { return "mlp"; }

  double component_value(int i, const Vec& x) const override {
    Vec z2(c_), a1(h_);
    forward(i, x, a1, z2);
    const double m = z2.maxCoeff();
    const double lse = m + std::log((z2.array() - m).exp().sum());
    return lse - z2[labels_[static_cast<std::size_t>(i)]];
  }

  void component_grad(int i, const Vec& x, Vec& out) const override {
    Vec z2(c_), a1(h_);
    forward(i, x, a1, z2);

    const double m = z2.maxCoeff();
    Vec p = (z2.array() - m).exp();
    p /= p.sum();
    p[labels_[static_cast<std::size_t>(i)]] -= 1.0;  // dL/dz2

    const auto W2 = map_w2(x);
    const Vec a0 = data_.row(i).transpose();
    const Vec da1 = W2.transpose() * p;
    const Vec dz1 = (1.0 - a1.array().square()).matrix().cwiseProduct(da1);

    out.resize(d());
    auto dW1 = Eigen::Map<RowMat>(out.data(), h_, din_);
    auto db1 = Eigen::Map<Vec>(out.data() + h_ * din_, h_);
    auto dW2 = Eigen::Map<RowMat>(out.data() + h_ * din_ + h_, c_, h_);
    auto db2 = Eigen::Map<Vec>(out.data() + h_ * din_ + h_ + c_ * h_, c_);
    dW1.noalias() = dz1 * a0.transpose();
    db1 = dz1;
    dW2.noalias() = p * a1.transpose();
    db2 = p;
  }

  bool has_hessian() const override { return false; }

  const Mat& data() const { return data_; }
  const std::vector<int>& labels() const { return labels_; }

 private:
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Eigen::Map<const RowMat> map_w1(const Vec& x) const {
    return {x.data(), h_, din_};
  }
  Eigen::Map<const RowMat> map_w2(const Vec& x) const {
    return {x.data() + h_ * din_ + h_, c_, h_};
  }

  void forward(int i, const Vec& x, Vec& a1, Vec& z2) const {
    const auto W1 = map_w1(x);
    const auto b1 = Eigen::Map<const Vec>(x.data() + h_ * din_, h_);
    const auto W2 = map_w2(x);
    const auto b2 = Eigen::Map<const Vec>(x.data() + h_ * din_ + h_ + c_ * h_, c_);
    const Vec a0 = data_.row(i).transpose();
    a1 = ((W1 * a0 + b1).array().tanh()).matrix();
    z2.noalias() = W2 * a1 + b2;
  }

  Mat data_;
  std::vector<int> labels_;
  int din_, h_, c_;
};

// ---------------------------------------------------------------------------
// Shared certification helpers
// ---------------------------------------------------------------------------

constexpr int kSigmaXSamples = 8;
constexpr int kSigmaComponents = 256;

void fill_sigma(Problem& p, RngStream& rng) {
  p.meta().sigma =
      empirical_sigma(p, rng, kSigmaXSamples, std::min(p.n(), kSigmaComponents));
}

// Certified L0/L1 ratio: admits theorem-mode accuracies eps < ratio/20.
constexpr double kCertifyRatio = 12.0;

// Audit-based (L0, L1) for problems without closed-form constants. Probes
// both random directions and the local top-curvature direction, then takes
// the ratio-constrained envelope so theorem-mode runs keep a usable
// accuracy window. The certified region (radius <= 3) covers the default
// starting radii; trajectories only descend inward from there. Runs started
// further out need explicitly audited constants.
void certify_by_audit(Problem& p, RngStream& rng) {
  const std::vector<double> radii = {0.5, 1.0, 2.0, 3.0};
  auto samples = radial_smoothness_samples(p, rng, radii, 60);
  if (p.has_hessian()) {
    for (const double r : radii) {
      for (int j = 0; j < 20; ++j) {
        Vec x = gaussian_vec(rng, p.d(), 1.0);
        if (x.norm() > 0.0) x *= r / x.norm();
        Eigen::SelfAdjointEigenSolver<Mat> es(p.hessian(x));
        const Vec dir = es.eigenvectors().col(p.d() - 1);
        samples.push_back(local_smoothness(p, x, dir, default_probe_step(x)));
      }
    }
  }
  const L0L1Fit fit = fit_constants_min_ratio(samples, kCertifyRatio);
  p.meta().L0 = fit.L0_hat;
  p.meta().L1 = fit.L1_hat;
}

}  // namespace

Problem make_quadratic(const std::vector<Mat>& As, const std::vector<Vec>& bs) {
  auto impl = std::make_shared<QuadraticImpl>(As, bs);

  ProblemMeta meta;
  meta.L1 = 0.0;
  // Averaged bound: (1/n sum ||H_i u||^2)^{1/2} <= sqrt(||mean H_i^2||).
  const int d = impl->d();
  Mat mean_sq = Mat::Zero(d, d);
  for (const auto& A : impl->As()) {
    const Mat h = A.transpose() * A;
    mean_sq.noalias() += h * h;
  }
  mean_sq /= static_cast<double>(impl->n());
  meta.L0 = std::sqrt(spectral_norm(mean_sq));

  // f_star from the normal equations of the pooled least-squares problem.
  // If the mean hessian is singular and the solve misses the minimizer,
  // fall back to 0, which lower-bounds any sum of squares.
  Vec c = Vec::Zero(d);
  for (std::size_t i = 0; i < As.size(); ++i) c += As[i].transpose() * bs[i];
  c /= static_cast<double>(As.size());
  const Vec x_star = impl->mean_hessian().ldlt().solve(c);

  Problem p(impl, meta);
  const double residual = (impl->mean_hessian() * x_star - c).norm();
  p.meta().f_star =
      x_star.allFinite() && residual <= 1e-8 * (1.0 + c.norm()) ? p.value(x_star) : 0.0;
  p.meta().constants_certified = true;
  return p;
}

Problem make_quadratic(RngStream& rng, int n, int d, double condition) {
  if (n < 1 || d < 1) throw ParamError("make_quadratic: n, d must be >= 1");
  if (condition < 1.0) throw ParamError("make_quadratic: condition must be >= 1");

  Vec scales(d);
  for (int j = 0; j < d; ++j) {
    const double t = d > 1 ? static_cast<double>(j) / (d - 1) : 0.0;
    scales[j] = std::pow(condition, -t);
  }
  std::vector<Mat> As;
  std::vector<Vec> bs;
  As.reserve(static_cast<std::size_t>(n));
  bs.reserve(static_cast<std::size_t>(n));
  const double g_scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (int i = 0; i < n; ++i) {
    Mat A(d, d);
    for (int r = 0; r < d; ++r)
      for (int col = 0; col < d; ++col) A(r, col) = g_scale * rng.normal() * scales[col];
    As.push_back(std::move(A));
    bs.push_back(gaussian_vec(rng, d, 1.0));
  }
  Problem p = make_quadratic(As, bs);
  fill_sigma(p, rng);
  return p;
}

Problem make_quartic(const std::vector<Vec>& ws, const Vec& cs) {
  ProblemMeta meta;
  meta.f_star = 0.0;
  return Problem(std::make_shared<QuarticImpl>(ws, cs), meta);
}

Problem make_quartic(RngStream& rng, int n, int d) {
  if (n < 1 || d < 1) throw ParamError("make_quartic: n, d must be >= 1");
  std::vector<Vec> ws;
  ws.reserve(static_cast<std::size_t>(n));
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (int i = 0; i < n; ++i) ws.push_back(gaussian_vec(rng, d, scale));
  Problem p = make_quartic(ws, gaussian_vec(rng, n, 0.5));
  certify_by_audit(p, rng);
  fill_sigma(p, rng);
  p.meta().constants_certified = true;
  return p;
}

Problem make_cosh(const std::vector<Vec>& ws, const Vec& cs) {
  ProblemMeta meta;
  meta.f_star = 1.0;  // cosh >= 1 per component
  return Problem(std::make_shared<CoshImpl>(ws, cs), meta);
}

Problem make_cosh(RngStream& rng, int n, int d) {
  if (n < 1 || d < 1) throw ParamError("make_cosh: n, d must be >= 1");
  std::vector<Vec> ws;
  ws.reserve(static_cast<std::size_t>(n));
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (int i = 0; i < n; ++i) ws.push_back(gaussian_vec(rng, d, scale));
  Problem p = make_cosh(ws, gaussian_vec(rng, n, 0.5));
  certify_by_audit(p, rng);
  fill_sigma(p, rng);
  p.meta().constants_certified = true;
  return p;
}

Problem make_logistic(RngStream& rng, int n, int d, double margin) {
  if (n < 1 || d < 1) throw ParamError("make_logistic: n, d must be >= 1");
  if (margin <= 0.0) throw ParamError("make_logistic: margin must be positive");

  Vec separator = gaussian_vec(rng, d, 1.0);
  if (separator.norm() == 0.0) separator[0] = 1.0;
  separator.normalize();

  std::vector<Vec> as;
  std::vector<double> ys;
  as.reserve(static_cast<std::size_t>(n));
  ys.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double y = rng.uniform() < 0.5 ? -1.0 : 1.0;
    Vec z = gaussian_vec(rng, d, 1.0);
    z -= z.dot(separator) * separator;  // orthogonal scatter
    const double along = margin + std::abs(rng.normal());
    as.push_back(z + y * along * separator);
    ys.push_back(y);
  }

  auto impl = std::make_shared<LogisticImpl>(std::move(as), std::move(ys));
  ProblemMeta meta;
  meta.L0 = 0.25 * impl->max_sq_feature_norm();
  meta.L1 = 0.0;
  meta.f_star = 0.0;
  Problem p(impl, meta);
  fill_sigma(p, rng);
  p.meta().constants_certified = true;
  return p;
}

Problem make_mlp(const Mat& data, const std::vector<int>& labels, int d_hidden,
                 int classes) {
  ProblemMeta meta;
  meta.f_star = 0.0;
  meta.constants_certified = false;
  return Problem(std::make_shared<MlpImpl>(data, labels, d_hidden, classes), meta);
}

Problem make_mlp(RngStream& rng, int n_samples, int d_in, int d_hidden,
                 int classes) {
  if (n_samples < 1 || d_in < 1) throw ParamError("make_mlp: sizes must be >= 1");
  if (classes < 2) throw ParamError("make_mlp: classes must be >= 2");

  // Class means: scaled axis directions (random units once axes run out),
  // re-centered so the blob cloud is mean-zero.
  const double blob_scale = 3.0;
  Mat means(classes, d_in);
  for (int c = 0; c < classes; ++c) {
    if (c < d_in) {
      means.row(c).setZero();
      means(c, c) = blob_scale;
    } else {
      Vec u = gaussian_vec(rng, d_in, 1.0);
      u.normalize();
      means.row(c) = blob_scale * u.transpose();
    }
  }
  const Eigen::RowVectorXd centroid = means.colwise().mean();
  means.rowwise() -= centroid;

  Mat data(n_samples, d_in);
  std::vector<int> labels(static_cast<std::size_t>(n_samples));
  for (int s = 0; s < n_samples; ++s) {
    const int y = s % classes;
    labels[static_cast<std::size_t>(s)] = y;
    for (int j = 0; j < d_in; ++j) data(s, j) = means(y, j) + rng.normal();
  }
  Problem p = make_mlp(data, labels, d_hidden, classes);
  fill_sigma(p, rng);
  return p;
}

double empirical_sigma(const Problem& p, RngStream& rng, int x_samples,
                       int per_x_components) {
  if (x_samples < 1 || per_x_components < 1) {
    throw ParamError("empirical_sigma: sample counts must be >= 1");
  }
  const std::vector<double> radii = {0.5, 1.0, 2.0, 3.0};
  double worst = 0.0;
  Vec gi(p.d());
  for (int k = 0; k < x_samples; ++k) {
    const double r = radii[static_cast<std::size_t>(k) % radii.size()];
    Vec x = gaussian_vec(rng, p.d(), 1.0);
    const double nrm = x.norm();
    if (nrm > 0.0) x *= r / nrm;
    const Vec g = p.full_grad(x);
    double acc = 0.0;
    for (int j = 0; j < per_x_components; ++j) {
      const int i = static_cast<int>(rng.uniform_int(p.n()));
      p.component_grad(i, x, gi);
      acc += (gi - g).squaredNorm();
    }
    worst = std::max(worst, acc / static_cast<double>(per_x_components));
  }
  return std::sqrt(worst);
}

}  // namespace vrclip
