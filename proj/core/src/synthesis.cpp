#include "msda/synthesis.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

namespace msda {

void TargetSpec::validate() const {
  if (!(lambda > 0.0 && lambda < 1.0))
    throw ParameterError("TargetSpec: lambda must lie strictly inside (0,1)");
  if (a.rows() < 1 || a.rows() != a.cols())
    throw ShapeError("TargetSpec: target matrix must be square and nonempty");
  if (a.rows() > 256)
    throw ParameterError("TargetSpec: dense synthesis capped at d = 256");
  if (!a.allFinite()) throw ParameterError("TargetSpec: non-finite target entry");
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10)
    throw ParameterError("TargetSpec: target asymmetry " + std::to_string(asym) +
                         " exceeds 1e-10");
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& s, double tol) {
  if (s.rows() != s.cols() || s.rows() < 1)
    throw ShapeError("psd_sqrt: matrix must be square and nonempty");
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw ParameterError("psd_sqrt: matrix is not symmetric");
  if (!(tol >= 0.0)) throw ParameterError("psd_sqrt: tol must be >= 0");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (s + s.transpose()));
  if (es.info() != Eigen::Success)
    throw NumericError("psd_sqrt: eigendecomposition failed");
  Eigen::VectorXd ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < -tol)
      throw NumericError("psd_sqrt: matrix is not PSD (eigenvalue " +
                         std::to_string(ev[i]) + " below -" +
                         std::to_string(tol) + ")");
    ev[i] = std::sqrt(std::max(0.0, ev[i]));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

SynthesizedMaskSampler::SynthesizedMaskSampler(const TargetSpec& target,
                                               std::optional<double> tol)
    : lambda_(target.lambda), target_(target.a) {
  target.validate();
  const Eigen::Index d = target.a.rows();
  const double om = 1.0 - target.lambda;
  const Eigen::MatrixXd s =
      target.a - om * om * Eigen::MatrixXd::Ones(d, d);
  const double eff_tol =
      tol ? *tol : 1e-8 * std::max(0.0, s.diagonal().maxCoeff());
  root_ = psd_sqrt(s, eff_tol);
  margin_ = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s,
                                                           Eigen::EigenvaluesOnly)
                .eigenvalues()
                .minCoeff();
}

Mask SynthesizedMaskSampler::draw(RngStream& rng) const {
  Mask mask;
  mask.shape = GridShape::flat(dim());
  mask.lambda = lambda_;
  mask.values =
      (lambda_ + (root_ * std_normal_vector(rng, dim())).array()).matrix();
  return mask;
}

SynthesisReport verify_synthesis(RngStream& rng,
                                 const SynthesizedMaskSampler& sampler,
                                 std::int64_t samples) {
  if (samples < 2) throw ParameterError("verify_synthesis: samples must be >= 2");
  const Eigen::Index d = sampler.dim();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd sumsq = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd msum = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd msumsq = Eigen::VectorXd::Zero(d);
  for (std::int64_t t = 0; t < samples; ++t) {
    const Mask mask = sampler.draw(rng);
    const Eigen::VectorXd v = (1.0 - mask.values.array()).matrix();
    const Eigen::VectorXd w = v.cwiseProduct(v);
    sum.selfadjointView<Eigen::Lower>().rankUpdate(v, 1.0);
    sumsq.selfadjointView<Eigen::Lower>().rankUpdate(w, 1.0);
    msum += mask.values;
    msumsq += mask.values.cwiseProduct(mask.values);
  }

  SynthesisReport rep;
  rep.samples = samples;
  rep.psd_margin = sampler.psd_margin();
  const double n = static_cast<double>(samples);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index k = 0; k <= j; ++k) {
      const double mean = sum(j, k) / n;
      const double var = std::max(0.0, sumsq(j, k) / n - mean * mean);
      const double se = std::sqrt(var / n);
      const double err = std::abs(mean - sampler.target()(j, k));
      if (err > rep.max_abs_error || (j == 0 && k == 0)) {
        rep.max_abs_error = err;
        rep.worst_j = j;
        rep.worst_k = k;
        rep.worst_empirical = mean;
        rep.worst_target = sampler.target()(j, k);
      }
      if (se > 0.0)
        rep.max_error_in_se = std::max(rep.max_error_in_se, err / se);
      else if (err > 1e-12 * (1.0 + std::abs(sampler.target()(j, k))))
        rep.max_error_in_se = std::numeric_limits<double>::infinity();
    }
  for (Eigen::Index j = 0; j < d; ++j) {
    const double mean = msum[j] / n;
    const double var = std::max(0.0, msumsq[j] / n - mean * mean);
    const double se = std::sqrt(var / n);
    const double err = std::abs(mean - sampler.lambda());
    rep.max_mean_abs_error = std::max(rep.max_mean_abs_error, err);
    if (se > 0.0)
      rep.max_mean_error_in_se = std::max(rep.max_mean_error_in_se, err / se);
    else if (err > 1e-12 * (1.0 + sampler.lambda()))
      rep.max_mean_error_in_se = std::numeric_limits<double>::infinity();
  }
  return rep;
}

}  // namespace msda
