#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "msda/coefficients.hpp"
#include "msda/synthesis.hpp"
#include "test_util.hpp"

using msda::GridShape;
using msda::RngStream;
using msda::TargetSpec;

namespace {

Eigen::MatrixXd random_psd(RngStream& rng, Eigen::Index d, int rank) {
  Eigen::MatrixXd b(d, rank);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = msda::std_normal(rng);
  return b * b.transpose();
}

}  // namespace

TEST_CASE("synthesis: psd_sqrt squares back to the input") {
  RngStream rng(1);
  for (const int rank : {1, 3, 6}) {
    const Eigen::MatrixXd s = random_psd(rng, 6, rank);
    const Eigen::MatrixXd r = msda::psd_sqrt(s, 1e-10);
    CHECK((r - r.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((r * r - s).cwiseAbs().maxCoeff() < 1e-10 * (1.0 + s.norm()));
  }
  CHECK(msda::psd_sqrt(Eigen::MatrixXd::Zero(4, 4), 1e-10).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("synthesis: psd_sqrt clamps only eigenvalues within tolerance") {
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(3, 3);
  s(2, 2) = -1e-12;  // rounding-level negativity: clamped
  CHECK_NOTHROW(msda::psd_sqrt(s, 1e-8));
  s(2, 2) = -1e-3;  // genuine negativity: rejected
  CHECK_THROWS_AS(msda::psd_sqrt(s, 1e-8), msda::NumericError);
}

TEST_CASE("synthesis: target validation") {
  TargetSpec t;
  t.lambda = 0.5;
  t.a = Eigen::MatrixXd::Constant(3, 3, 0.25);
  CHECK_NOTHROW(t.validate());
  t.lambda = 0.0;
  CHECK_THROWS_AS(t.validate(), msda::ParameterError);
  t.lambda = 1.0;
  CHECK_THROWS_AS(t.validate(), msda::ParameterError);
  t.lambda = 0.5;
  t.a = Eigen::MatrixXd::Constant(3, 2, 0.25);
  CHECK_THROWS_AS(t.validate(), msda::ShapeError);
  t.a = Eigen::MatrixXd::Constant(3, 3, 0.25);
  t.a(0, 1) = 0.3;  // asymmetric
  CHECK_THROWS_AS(t.validate(), msda::ParameterError);
  t.a = Eigen::MatrixXd::Constant(300, 300, 0.25);
  CHECK_THROWS_AS(t.validate(), msda::ParameterError);
}

TEST_CASE("synthesis: constant mixup target degenerates to the constant mask") {
  TargetSpec t;
  t.lambda = 0.3;
  // (1-lambda)^2 in the exact arithmetic the sampler subtracts, so the
  // residual S is the zero matrix rather than an ulp-sized rank-1 speck.
  t.a = Eigen::MatrixXd::Constant(5, 5, (1.0 - t.lambda) * (1.0 - t.lambda));
  const msda::SynthesizedMaskSampler sampler(t);
  RngStream rng(2);
  for (int it = 0; it < 10; ++it) {
    const msda::Mask m = sampler.draw(rng);
    CHECK(m.lambda == 0.3);
    CHECK(m.values.size() == 5);
    CHECK((m.values.array() - 0.3).abs().maxCoeff() < 1e-9);
  }
  const auto rep = msda::verify_synthesis(rng, sampler, 1000);
  CHECK(rep.max_abs_error < 1e-9);
  CHECK(rep.max_mean_abs_error < 1e-9);
}

TEST_CASE("synthesis: bernoulli target is reproduced within Monte-Carlo error") {
  msda::MaskSpec spec;
  spec.method = msda::MaskMethod::bernoulli;
  spec.shape = GridShape::flat(6);
  TargetSpec t;
  t.lambda = 0.5;
  t.a = msda::coeff_closed_matrix(spec, t.lambda);
  const msda::SynthesizedMaskSampler sampler(t);
  CHECK(sampler.dim() == 6);
  CHECK(sampler.lambda() == 0.5);

  RngStream rng(3);
  const auto rep = msda::verify_synthesis(rng, sampler, 200000);
  CHECK(rep.samples == 200000);
  CHECK(rep.max_error_in_se <= 5.0);
  CHECK(rep.max_mean_error_in_se <= 5.0);
  CHECK(rep.worst_j >= 0);
  CHECK(rep.worst_j < 6);
  CHECK(rep.max_abs_error ==
        std::abs(rep.worst_empirical - rep.worst_target));
}

TEST_CASE("synthesis: handles targets with a slightly indefinite surplus") {
  // An analytic Gaussian-kernel target truncated to a strip is indefinite at
  // the 1e-5 level; an explicit tolerance absorbs it.
  const int d = 16;
  const double lambda = 0.5;
  TargetSpec t;
  t.lambda = lambda;
  t.a.resize(d, d);
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k)
      t.a(j, k) = (1.0 - lambda) *
                  std::exp(-M_PI * (j - k) * (j - k) /
                           (4.0 * (1.0 - lambda) * d * d));
  CHECK_THROWS_AS(msda::SynthesizedMaskSampler{t}, msda::NumericError);
  const msda::SynthesizedMaskSampler sampler(t, 1e-4);
  CHECK(sampler.psd_margin() >= -1e-4);
  RngStream rng(4);
  const auto rep = msda::verify_synthesis(rng, sampler, 100000);
  CHECK(rep.max_error_in_se <= 5.0);
}

TEST_CASE("synthesis: draws are deterministic per seed") {
  TargetSpec t;
  t.lambda = 0.5;
  t.a = Eigen::MatrixXd::Identity(4, 4) * 0.3 +
        Eigen::MatrixXd::Constant(4, 4, 0.25);
  const msda::SynthesizedMaskSampler sampler(t);
  RngStream a(9);
  RngStream b(9);
  for (int it = 0; it < 5; ++it)
    CHECK(sampler.draw(a).values == sampler.draw(b).values);
}

TEST_CASE("synthesis: empirical second moments track the root identity") {
  // E[(1-M)(1-M)^T] = S + (1-lambda)^2 with M = lambda + R Z: check through
  // the sampler accessor rather than sampling.
  TargetSpec t;
  t.lambda = 0.4;
  t.a = Eigen::MatrixXd::Identity(5, 5) * 0.4 +
        Eigen::MatrixXd::Constant(5, 5, 0.36);
  const msda::SynthesizedMaskSampler sampler(t);
  const Eigen::MatrixXd r = sampler.root();
  const Eigen::MatrixXd rebuilt =
      r * r + Eigen::MatrixXd::Constant(5, 5, 0.36);
  CHECK((rebuilt - t.a).cwiseAbs().maxCoeff() < 1e-10);
}
