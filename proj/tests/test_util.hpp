#ifndef MSDA_TEST_UTIL_HPP
#define MSDA_TEST_UTIL_HPP

// Shared oracles for the test suite. The coefficient oracles re-derive the
// closed forms by enumerating every witness directly from the mask-sampler
// semantics (box placements over (n-s)^2 offsets, snapped Gaussian centers),
// deliberately sharing no code with the closed-form implementations.

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "msda/mask.hpp"

namespace testutil {

inline Eigen::VectorXd fd_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x;
    Eigen::VectorXd xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& xs) {
  const auto n = static_cast<double>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / n;
  double sq = 0.0;
  for (double x : xs) sq += (x - mean) * (x - mean);
  return {mean, std::sqrt(sq / n / n)};
}

// 0-based flat pixel p inside the s x s box at (row0, col0)?
inline bool in_box(Eigen::Index p, int n, int row0, int col0, int s) {
  const int row = static_cast<int>(p) / n;
  const int col = static_cast<int>(p) % n;
  return row >= row0 && row < row0 + s && col >= col0 && col < col0 + s;
}

// E[(1-M_j)(1-M_k)] for a binary box mask, enumerating all placements.
inline double brute_cutmix_coeff(int n, int s, Eigen::Index j, Eigen::Index k) {
  if (s <= 0) return 0.0;
  if (s >= n) return 1.0;
  const int places = n - s;
  int hits = 0;
  for (int row0 = 0; row0 < places; ++row0)
    for (int col0 = 0; col0 < places; ++col0)
      hits += in_box(j, n, row0, col0, s) && in_box(k, n, row0, col0, s) ? 1 : 0;
  return static_cast<double>(hits) / (static_cast<double>(places) * places);
}

// Same for the hmix mask: 1-M is 1 inside the box and 1-c outside.
inline double brute_hmix_coeff(int n, double lambda, double r, Eigen::Index j,
                               Eigen::Index k) {
  const int s = msda::hmix_side(lambda, r, n);
  const double c = msda::hmix_outside_value(lambda, r);
  if (s >= n) return 1.0;
  if (s <= 0) return (1.0 - c) * (1.0 - c);
  const int places = n - s;
  double acc = 0.0;
  for (int row0 = 0; row0 < places; ++row0)
    for (int col0 = 0; col0 < places; ++col0) {
      const double wj = in_box(j, n, row0, col0, s) ? 1.0 : 1.0 - c;
      const double wk = in_box(k, n, row0, col0, s) ? 1.0 : 1.0 - c;
      acc += wj * wk;
    }
  return acc / (static_cast<double>(places) * places);
}

// Same for gmix: 1-M_p = exp(-|p - center|^2 pi / (2(1-lambda)n^2)), center
// snapped uniformly to the n^2 grid points.
inline double brute_gmix_coeff(int n, double lambda, Eigen::Index j,
                               Eigen::Index k) {
  if (lambda >= 1.0) return 0.0;
  const double scale = M_PI / (2.0 * (1.0 - lambda) * n * n);
  const double rj = static_cast<int>(j) / n + 1.0;
  const double cj = static_cast<int>(j) % n + 1.0;
  const double rk = static_cast<int>(k) / n + 1.0;
  const double ck = static_cast<int>(k) % n + 1.0;
  double acc = 0.0;
  for (int row = 1; row <= n; ++row)
    for (int col = 1; col <= n; ++col) {
      const double dj = (rj - row) * (rj - row) + (cj - col) * (cj - col);
      const double dk = (rk - row) * (rk - row) + (ck - col) * (ck - col);
      acc += std::exp(-(dj + dk) * scale);
    }
  return acc / (static_cast<double>(n) * n);
}

}  // namespace testutil

#endif
