#pragma once

#include <vector>

#include "vrclip/problem.hpp"
#include "vrclip/rng.hpp"

namespace vrclip {

// F(x) = (1/n) sum_i 1/2 ||A_i x - b_i||^2. L1 = 0; L0 is the exact averaged
// spectral bound sqrt(||mean_i H_i^2||); f_star solves the normal equations.
Problem make_quadratic(RngStream& rng, int n, int d, double condition);
Problem make_quadratic(const std::vector<Mat>& As, const std::vector<Vec>& bs);

// F(x) = (1/n) sum_i 1/4 (w_i.x - c_i)^4. No global gradient Lipschitz
// constant exists; L0/L1 are certified by the smoothness audit.
Problem make_quartic(RngStream& rng, int n, int d);
Problem make_quartic(const std::vector<Vec>& ws, const Vec& cs);

// F(x) = (1/n) sum_i cosh(w_i.x - c_i). Smoothness tracks the gradient norm
// with asymptotic slope ~1; |w_i.x - c_i| > 700 trips the overflow guard.
Problem make_cosh(RngStream& rng, int n, int d);
Problem make_cosh(const std::vector<Vec>& ws, const Vec& cs);

// Logistic loss on synthetic separable-with-margin data. L-smooth baseline:
// L0 = max_i ||a_i||^2 / 4, L1 = 0, f_star = 0.
Problem make_logistic(RngStream& rng, int n, int d, double margin);

// One-hidden-layer tanh network with softmax cross-entropy on Gaussian blob
// data placed at scaled simplex vertices; component i is the loss on sample
// i. Constants are empirical only (constants_certified stays false).
Problem make_mlp(RngStream& rng, int n_samples, int d_in, int d_hidden,
                 int classes);
Problem make_mlp(const Mat& data, const std::vector<int>& labels, int d_hidden,
                 int classes);

// Max over sampled points x of the empirical mean of
// ||grad f_i(x) - grad F(x)||^2; returns the noise bound sigma (the root).
double empirical_sigma(const Problem& p, RngStream& rng, int x_samples,
                       int per_x_components);

}  // namespace vrclip
