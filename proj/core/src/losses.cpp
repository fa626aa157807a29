#include "msda/losses.hpp"

#include <cmath>

#include "msda/numeric.hpp"

namespace msda {

bool Dataset::centered(double tol) const {
  return mean.size() > 0 && mean.cwiseAbs().maxCoeff() <= tol;
}

double binary_label(const Sample& s) {
  if (s.y.size() != 1)
    throw ShapeError("binary label must be a length-1 probability vector");
  return s.y[0];
}

Dataset make_dataset(std::vector<Sample> samples) {
  if (samples.empty()) throw ParameterError("make_dataset: empty sample set");
  const Eigen::Index d = samples.front().x.size();
  if (d < 1) throw ShapeError("make_dataset: zero-length inputs");
  for (const Sample& s : samples) {
    if (s.x.size() != d) throw ShapeError("make_dataset: ragged input lengths");
    const double y = binary_label(s);
    if (!s.x.allFinite() || !std::isfinite(y))
      throw ParameterError("make_dataset: non-finite sample");
    if (y < 0.0 || y > 1.0)
      throw ParameterError("make_dataset: label outside [0,1]");
  }
  Dataset out;
  out.samples = std::move(samples);
  const double m = static_cast<double>(out.samples.size());
  out.mean = Eigen::VectorXd::Zero(d);
  for (const Sample& s : out.samples) out.mean += s.x;
  out.mean /= m;
  out.second_moment = Eigen::MatrixXd::Zero(d, d);
  for (const Sample& s : out.samples)
    out.second_moment.selfadjointView<Eigen::Lower>().rankUpdate(s.x, 1.0 / m);
  out.second_moment.triangularView<Eigen::StrictlyUpper>() =
      out.second_moment.transpose();
  return out;
}

Dataset shift_dataset(const Dataset& d, const Eigen::VectorXd& offset) {
  if (offset.size() != d.dim())
    throw ShapeError("shift_dataset: offset length does not match inputs");
  std::vector<Sample> shifted = d.samples;
  for (Sample& s : shifted) s.x -= offset;
  return make_dataset(std::move(shifted));
}

Dataset center_dataset(const Dataset& d) { return shift_dataset(d, d.mean); }

ExpectedCoeffs expected_coeffs(const MaskSpec& spec) {
  spec.validate();
  ExpectedCoeffs out;
  out.kappa1 = tilde_lambda_moment(spec.lambda, 1);
  out.abar = coeff_closed_expected_matrix(spec);
  return out;
}

EmpiricalLoss msda_empirical_loss(RngStream& rng, const GlmModel& model,
                                  const LossFamily& family, const Dataset& d,
                                  const MaskSpec& spec, std::int64_t draws,
                                  std::optional<double> lambda_override) {
  if (draws < 1) throw ParameterError("msda_empirical_loss: draws must be >= 1");
  spec.validate();
  if (spec.shape.dim() != d.dim())
    throw ShapeError("msda_empirical_loss: mask shape does not match inputs");
  if (model.theta.size() != d.dim())
    throw ShapeError("msda_empirical_loss: theta does not match inputs");
  const std::uint64_t m = static_cast<std::uint64_t>(d.size());

  std::vector<double> losses(static_cast<std::size_t>(draws));
  for (std::int64_t t = 0; t < draws; ++t) {
    const Sample& a = d.samples[static_cast<std::size_t>(t % d.size())];
    const Sample& b = d.samples[rng.next_below(m)];
    const Mask mask = lambda_override
                          ? sample_mask_at(rng, spec, *lambda_override)
                          : sample_mask(rng, spec);
    const Sample mixed = mix_pair(a, b, mask);
    losses[static_cast<std::size_t>(t)] =
        point_loss(family, glm_predict(model, mixed.x), binary_label(mixed));
  }

  EmpiricalLoss out;
  out.draws = draws;
  out.mean = pairwise_sum(losses) / static_cast<double>(draws);
  std::vector<double> sq(losses.size());
  for (std::size_t t = 0; t < losses.size(); ++t) {
    const double dev = losses[t] - out.mean;
    sq[t] = dev * dev;
  }
  const double var = pairwise_sum(sq) / static_cast<double>(draws);
  out.std_error = std::sqrt(var / static_cast<double>(draws));
  return out;
}

namespace {

void check_approx_inputs(const GlmModel& model, const Dataset& d,
                         const ExpectedCoeffs& coeffs) {
  model.validate();
  if (model.theta.size() != d.dim())
    throw ShapeError("approx_loss: theta does not match inputs");
  if (coeffs.abar.rows() != d.dim() || coeffs.abar.cols() != d.dim())
    throw ShapeError("approx_loss: coefficient matrix does not match inputs");
  if (!d.centered())
    throw ParameterError("approx_loss: dataset must be centered first");
}

}  // namespace

LossBreakdown approx_loss(const GlmModel& model, const LossFamily& family,
                          const Dataset& d, const ExpectedCoeffs& coeffs) {
  check_approx_inputs(model, d, coeffs);
  const std::size_t m = d.samples.size();
  const Eigen::MatrixXd c0 = coeffs.abar.cwiseProduct(d.second_moment);
  const double qc = model.theta.dot(c0 * model.theta);

  std::vector<double> lm_terms(m), r1_terms(m), r2_terms(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Sample& s = d.samples[i];
    const double y = binary_label(s);
    const double f = glm_predict(model, s.x);
    const double score = model.theta.dot(s.x);
    lm_terms[i] = point_loss(family, f, y);
    r1_terms[i] = (y - family.dh(f)) * score;
    const Eigen::VectorXd u = model.theta.cwiseProduct(s.x);
    r2_terms[i] = family.d2h(f) * (qc + u.dot(coeffs.abar * u));
  }

  LossBreakdown out;
  const double inv_m = 1.0 / static_cast<double>(m);
  out.l_m = pairwise_sum(lm_terms) * inv_m;
  out.r1 = coeffs.kappa1 * pairwise_sum(r1_terms) * inv_m;
  out.r2 = 0.5 * pairwise_sum(r2_terms) * inv_m;
  out.r3 = 0.0;  // grad^2 f = 0 for the linear predictor
  out.total = out.l_m + out.r1 + out.r2 + out.r3;
  return out;
}

Eigen::VectorXd approx_loss_grad(const GlmModel& model, const LossFamily& family,
                                 const Dataset& d, const ExpectedCoeffs& coeffs) {
  check_approx_inputs(model, d, coeffs);
  const std::size_t m = d.samples.size();
  const Eigen::Index dim = d.dim();
  const Eigen::MatrixXd c0 = coeffs.abar.cwiseProduct(d.second_moment);
  const Eigen::VectorXd c0_theta = c0 * model.theta;
  const double qc = model.theta.dot(c0_theta);

  Eigen::VectorXd g_theta = Eigen::VectorXd::Zero(dim);
  double g_bias = 0.0;
  Eigen::VectorXd r2_theta = Eigen::VectorXd::Zero(dim);
  double r2_bias = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const Sample& s = d.samples[i];
    const double y = binary_label(s);
    const double f = glm_predict(model, s.x);
    const double score = model.theta.dot(s.x);
    const double sig = family.dh(f);
    const double sp = family.d2h(f);
    const double spp = family_d3(family, f);

    // d L_m: (h'(f) - y) per sample.
    g_theta += (sig - y) * s.x;
    g_bias += sig - y;
    // d R1 of (y - h'(f)) * score.
    g_theta += coeffs.kappa1 * (y - sig - sp * score) * s.x;
    g_bias += coeffs.kappa1 * (-sp * score);
    // d R2 of h''(f) * theta^T C_i theta with C_i = abar o (S + x x^T).
    const Eigen::VectorXd u = model.theta.cwiseProduct(s.x);
    const Eigen::VectorXd au = coeffs.abar * u;
    const double q = qc + u.dot(au);
    r2_theta += spp * q * s.x + 2.0 * sp * (c0_theta + s.x.cwiseProduct(au));
    r2_bias += spp * q;
  }

  const double inv_m = 1.0 / static_cast<double>(m);
  Eigen::VectorXd grad(dim + 1);
  grad.head(dim) = inv_m * g_theta + 0.5 * inv_m * r2_theta;
  grad[dim] = inv_m * g_bias + 0.5 * inv_m * r2_bias;
  return grad;
}

}  // namespace msda
