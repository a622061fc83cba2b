#pragma once

#include <memory>
#include <string>
#include <vector>

#include "vrclip/vec.hpp"

namespace vrclip {

// Certified or empirically fitted problem constants. L0/L1 bound the averaged
// smoothness, sigma bounds the component-gradient noise, f_star is a lower
// bound on F. constants_certified marks L0/L1/sigma as audited upper bounds
// safe for theorem-mode parameter derivation.
struct ProblemMeta {
  double L0 = 0.0;
  double L1 = 0.0;
  double sigma = 0.0;
  double f_star = 0.0;
  bool constants_certified = false;
};

namespace detail {

class ProblemImpl {
 public:
  virtual ~ProblemImpl() = default;
  virtual int n() const = 0;
  virtual int d() const = 0;
  virtual std::string name() const = 0;
  virtual double component_value(int i, const Vec& x) const = 0;
  virtual void component_grad(int i, const Vec& x, Vec& out) const = 0;
  virtual bool has_hessian() const = 0;
  virtual Mat hessian(const Vec& x) const;
};

}  // namespace detail

// Finite-sum objective F(x) = (1/n) sum_i f_i(x) with analytic component
// gradients. Oracles are pure; the meta block is the only mutable part.
class Problem {
 public:
  Problem() = default;
  Problem(std::shared_ptr<const detail::ProblemImpl> impl, ProblemMeta meta)
      : impl_(std::move(impl)), meta_(std::move(meta)) {}

  bool valid() const { return impl_ != nullptr; }
  int n() const { return impl_->n(); }
  int d() const { return impl_->d(); }
  std::string name() const { return impl_->name(); }

  double component_value(int i, const Vec& x) const;
  double value(const Vec& x) const;  // F(x), mean of component values

  void component_grad(int i, const Vec& x, Vec& out) const;
  Vec component_grad(int i, const Vec& x) const;

  // Mean of component gradients over `indices`, accumulated in order.
  Vec batch_mean_grad(const std::vector<int>& indices, const Vec& x) const;

  // Mean of all component gradients, accumulated in index order 0..n-1 so
  // that a full-batch refresh reproduces it bit for bit.
  Vec full_grad(const Vec& x) const;

  bool has_hessian() const { return impl_->has_hessian(); }
  Mat hessian(const Vec& x) const { return impl_->hessian(x); }

  const ProblemMeta& meta() const { return meta_; }
  ProblemMeta& meta() { return meta_; }

  double delta(const Vec& x0) const { return value(x0) - meta_.f_star; }

 private:
  void check_x(const Vec& x) const;

  std::shared_ptr<const detail::ProblemImpl> impl_;
  ProblemMeta meta_;
};

}  // namespace vrclip
