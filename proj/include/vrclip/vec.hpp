#pragma once

#include <Eigen/Core>
#include <cmath>

#include "vrclip/errors.hpp"

namespace vrclip {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline bool all_finite(const Vec& v) { return v.allFinite(); }

inline double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) {
    throw ContractError("dot: length mismatch (" + std::to_string(a.size()) +
                        " vs " + std::to_string(b.size()) + ")");
  }
  return a.dot(b);
}

inline double norm2(const Vec& a) { return a.norm(); }

}  // namespace vrclip
