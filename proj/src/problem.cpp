#include "vrclip/problem.hpp"

#include "vrclip/errors.hpp"

namespace vrclip {

namespace detail {

Mat ProblemImpl::hessian(const Vec&) const {
  throw ContractError("hessian: not provided by problem '" + name() + "'");
}

}  // namespace detail

void Problem::check_x(const Vec& x) const {
  if (x.size() != d()) {
    throw ContractError("problem oracle: x has length " +
                        std::to_string(x.size()) + ", expected " +
                        std::to_string(d()));
  }
}

double Problem::component_value(int i, const Vec& x) const {
  check_x(x);
  if (i < 0 || i >= n()) throw ContractError("component index out of range");
  return impl_->component_value(i, x);
}

double Problem::value(const Vec& x) const {
  check_x(x);
  double acc = 0.0;
  for (int i = 0; i < n(); ++i) acc += impl_->component_value(i, x);
  return acc / static_cast<double>(n());
}

void Problem::component_grad(int i, const Vec& x, Vec& out) const {
  check_x(x);
  if (i < 0 || i >= n()) throw ContractError("component index out of range");
  impl_->component_grad(i, x, out);
}

Vec Problem::component_grad(int i, const Vec& x) const {
  Vec out(d());
  component_grad(i, x, out);
  return out;
}

Vec Problem::batch_mean_grad(const std::vector<int>& indices, const Vec& x) const {
  check_x(x);
  if (indices.empty()) throw ContractError("batch_mean_grad: empty batch");
  Vec acc = Vec::Zero(d());
  Vec tmp(d());
  for (const int i : indices) {
    impl_->component_grad(i, x, tmp);
    acc += tmp;
  }
  acc /= static_cast<double>(indices.size());
  return acc;
}

Vec Problem::full_grad(const Vec& x) const {
  check_x(x);
  Vec acc = Vec::Zero(d());
  Vec tmp(d());
  for (int i = 0; i < n(); ++i) {
    impl_->component_grad(i, x, tmp);
    acc += tmp;
  }
  acc /= static_cast<double>(n());
  return acc;
}

}  // namespace vrclip
