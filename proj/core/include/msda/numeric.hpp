#ifndef MSDA_NUMERIC_HPP
#define MSDA_NUMERIC_HPP

#include <functional>
#include <span>
#include <vector>

namespace msda {

// Pairwise (cascade) summation: the reduction order is a fixed balanced tree,
// so results are independent of how callers partition the work.
double pairwise_sum(std::span<const double> v);

// Nodes/weights of the n-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussLegendreRule& gauss_legendre_rule(int n);

// Integral of f over [a, b] with the n-point rule.
double gauss_legendre(const std::function<double(double)>& f, double a, double b,
                      int n);

// Gauss-Legendre with node doubling until the relative change is <= rel_tol.
// Starts at `n` nodes; throws NumericError if not converged by max_nodes.
double integrate_to_tolerance(const std::function<double(double)>& f, double a,
                              double b, int n, double rel_tol, int max_nodes = 4096);

}  // namespace msda

#endif
