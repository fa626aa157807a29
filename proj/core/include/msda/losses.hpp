#ifndef MSDA_LOSSES_HPP
#define MSDA_LOSSES_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "msda/coefficients.hpp"
#include "msda/mask.hpp"
#include "msda/mix.hpp"
#include "msda/models.hpp"
#include "msda/rng.hpp"

namespace msda {

// Sample set with the cached input statistics the approximate loss needs:
// mean and the raw second moment (1/m) sum x x^T.
struct Dataset {
  std::vector<Sample> samples;
  Eigen::VectorXd mean;
  Eigen::MatrixXd second_moment;

  Eigen::Index size() const { return static_cast<Eigen::Index>(samples.size()); }
  Eigen::Index dim() const { return mean.size(); }

  // Approximate-loss ops require this (mean within 1e-9 of 0 per coordinate).
  bool centered(double tol = 1e-9) const;
};

// The positive-class probability of a binary sample; requires a length-1
// label vector (the multiclass mixer stays untouched).
double binary_label(const Sample& s);

// Computes the caches; samples must be nonempty with equal input lengths and
// length-1 labels in [0,1].
Dataset make_dataset(std::vector<Sample> samples);

// Subtracts `offset` from every input (for mapping held-out data into the
// coordinates of a centered training set) and recomputes the caches.
Dataset shift_dataset(const Dataset& d, const Eigen::VectorXd& offset);

// Shifts by the dataset's own mean; idempotent on centered data.
Dataset center_dataset(const Dataset& d);

// The lambda-integrated quantities of the approximate loss: kappa1 is
// E[1-lambda] and abar_jk = E[a_jk(lambda)], both under the tilde mixture.
// Build once per (spec, shape) and reuse; the loss ops only read it.
struct ExpectedCoeffs {
  double kappa1 = 0.0;
  Eigen::MatrixXd abar;
};

ExpectedCoeffs expected_coeffs(const MaskSpec& spec);

struct EmpiricalLoss {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t draws = 0;
};

// Monte-Carlo estimate of the mixed-sample loss
//   E_{i,j} E_lambda E_M [ l(model, mix(z_i, z_j; lambda, M)) ].
// Tuple t pairs i = t mod m (a cyclic sweep, uniform over i whenever draws is
// a multiple of m and exact in the no-mixing limit) with j uniform on [m]
// (replacement, i = j allowed) and a fresh (lambda, M) from the spec;
// `lambda_override` pins lambda and keeps the witness draws random.
EmpiricalLoss msda_empirical_loss(RngStream& rng, const GlmModel& model,
                                  const LossFamily& family, const Dataset& d,
                                  const MaskSpec& spec, std::int64_t draws,
                                  std::optional<double> lambda_override = {});

// The quadratic-approximation decomposition of the mixed-sample loss:
//   l_m: unmixed empirical loss,
//   r1:  kappa1 * (1/m) sum (y_i - h'(f_i)) * (grad f . x_i),
//   r2:  (1/2m) sum h''(f_i) * sum_jk abar_jk df_j df_k (E[r_j r_k] + x_ij x_ik),
//   r3:  the second-derivative term; identically 0 for the linear predictor.
struct LossBreakdown {
  double l_m = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
  double r3 = 0.0;
  double total = 0.0;
};

LossBreakdown approx_loss(const GlmModel& model, const LossFamily& family,
                          const Dataset& d, const ExpectedCoeffs& coeffs);

// Exact gradient of approx_loss.total for the GLM: entries 0..d-1 are
// d/d theta, entry d is d/d bias.
Eigen::VectorXd approx_loss_grad(const GlmModel& model, const LossFamily& family,
                                 const Dataset& d, const ExpectedCoeffs& coeffs);

}  // namespace msda

#endif
