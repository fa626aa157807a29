#ifndef MSDA_SYNTHESIS_HPP
#define MSDA_SYNTHESIS_HPP

#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "msda/mask.hpp"
#include "msda/rng.hpp"

namespace msda {

// Target coefficient matrix for mask synthesis. Admissible iff
// S = A - (1-lambda)^2 11^T is positive semidefinite (checked at
// construction, not assumed).
struct TargetSpec {
  double lambda = 0.5;  // in (0,1)
  Eigen::MatrixXd a;

  // Throws ParameterError/ShapeError: lambda in (0,1); A square, symmetric
  // within 1e-10, d <= 256 (dense eigendecomposition cap).
  void validate() const;
};

// Symmetric PSD square root by eigendecomposition (handles rank-deficient
// inputs, unlike Cholesky). Eigenvalues in [-tol, 0) clamp to 0; below -tol
// throws NumericError reporting the offending eigenvalue.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& s, double tol);

// Draws M = lambda*1 + R*Z with Z standard normal and R = psd_sqrt(S), so
// E[M] = lambda*1 and E[(1-M_j)(1-M_k)] = (1-lambda)^2 + (RR)_jk = A_jk.
// Mask values are real and may lie outside [0,1].
class SynthesizedMaskSampler {
 public:
  // tol defaults to 1e-8 * max diagonal of S (0 when that is not positive).
  explicit SynthesizedMaskSampler(const TargetSpec& target,
                                  std::optional<double> tol = {});

  Eigen::Index dim() const { return root_.rows(); }
  double lambda() const { return lambda_; }
  const Eigen::MatrixXd& target() const { return target_; }
  const Eigen::MatrixXd& root() const { return root_; }
  // Smallest eigenvalue of S before clamping (the PSD margin; >= -tol).
  double psd_margin() const { return margin_; }

  // Consumes dim() normal draws (2*dim() uniforms).
  Mask draw(RngStream& rng) const;

 private:
  double lambda_;
  Eigen::MatrixXd target_;
  Eigen::MatrixXd root_;
  double margin_ = 0.0;
};

// Empirical check of the synthesized sampler against its target: coefficient
// law per entry and mean law per coordinate, with standard errors.
struct SynthesisReport {
  std::int64_t samples = 0;
  double psd_margin = 0.0;
  double max_abs_error = 0.0;  // max_jk |empirical_jk - A_jk|
  Eigen::Index worst_j = 0;
  Eigen::Index worst_k = 0;
  double worst_empirical = 0.0;
  double worst_target = 0.0;
  double max_error_in_se = 0.0;       // max_jk |error| / SE_jk
  double max_mean_abs_error = 0.0;    // max_j |mean M_j - lambda|
  double max_mean_error_in_se = 0.0;  // same, in per-coordinate SEs
};

SynthesisReport verify_synthesis(RngStream& rng,
                                 const SynthesizedMaskSampler& sampler,
                                 std::int64_t samples);

}  // namespace msda

#endif
