// Microbenchmarks for the hot paths: mask sampling, coefficient estimation
// (closed and Monte-Carlo), offset heatmaps, and the approximate loss.

#include <benchmark/benchmark.h>

#include <optional>

#include "msda/coefficients.hpp"
#include "msda/losses.hpp"
#include "msda/mask.hpp"
#include "msda/models.hpp"
#include "msda/rng.hpp"

namespace {

msda::MaskSpec make_spec(msda::MaskMethod method, const msda::GridShape& shape) {
  msda::MaskSpec spec;
  spec.method = method;
  spec.lambda = msda::BetaParams{1.0, 1.0};
  spec.shape = shape;
  spec.r = 0.5;
  spec.q = 0.5;
  return spec;
}

void bm_sample_mask(benchmark::State& state) {
  const auto method = static_cast<msda::MaskMethod>(state.range(0));
  const msda::MaskSpec spec = make_spec(method, msda::GridShape::square(32));
  msda::RngStream rng(1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(msda::sample_mask(rng, spec));
  }
  state.SetItemsProcessed(state.iterations());
}

void bm_coeff_closed_matrix(benchmark::State& state) {
  const msda::MaskSpec spec = make_spec(msda::MaskMethod::hmix,
                                        msda::GridShape::square(
                                            static_cast<int>(state.range(0))));
  for (auto _ : state) {
    benchmark::DoNotOptimize(msda::coeff_closed_matrix(spec, 0.6));
  }
}

void bm_coeff_monte_carlo(benchmark::State& state) {
  const msda::MaskSpec spec =
      make_spec(msda::MaskMethod::cutmix, msda::GridShape::square(16));
  const int threads = static_cast<int>(state.range(0));
  const std::int64_t draws = 20000;
  const msda::RngStream rng(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        msda::coeff_monte_carlo(rng, spec, 0.5, draws, threads));
  }
  state.SetItemsProcessed(state.iterations() * draws);
}

void bm_offset_heatmap_mc(benchmark::State& state) {
  const msda::MaskSpec spec =
      make_spec(msda::MaskMethod::gmix,
                msda::GridShape::square(static_cast<int>(state.range(0))));
  const std::int64_t draws = 20000;
  const msda::RngStream rng(3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        msda::offset_heatmap_mc(rng, spec, 0.5, draws, 4));
  }
  state.SetItemsProcessed(state.iterations() * draws);
}

void bm_approx_loss_grad(benchmark::State& state) {
  msda::RngStream rng(4);
  const Eigen::Index d = state.range(0);
  std::vector<msda::Sample> samples;
  for (int i = 0; i < 256; ++i)
    samples.push_back({msda::std_normal_vector(rng, d),
                       Eigen::VectorXd::Constant(1, i % 2)});
  const msda::Dataset centered =
      msda::center_dataset(msda::make_dataset(std::move(samples)));
  const msda::MaskSpec spec =
      make_spec(msda::MaskMethod::bernoulli, msda::GridShape::flat(d));
  const msda::ExpectedCoeffs coeffs = msda::expected_coeffs(spec);
  msda::GlmModel model;
  model.theta = msda::std_normal_vector(rng, d);
  model.bias = 0.1;
  const msda::LossFamily& family = msda::logistic_family();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        msda::approx_loss_grad(model, family, centered, coeffs));
  }
}

}  // namespace

BENCHMARK(bm_sample_mask)
    ->Arg(static_cast<int>(msda::MaskMethod::mixup))
    ->Arg(static_cast<int>(msda::MaskMethod::cutmix))
    ->Arg(static_cast<int>(msda::MaskMethod::hmix))
    ->Arg(static_cast<int>(msda::MaskMethod::gmix))
    ->Arg(static_cast<int>(msda::MaskMethod::stochastic))
    ->Arg(static_cast<int>(msda::MaskMethod::bernoulli));
BENCHMARK(bm_coeff_closed_matrix)->Arg(8)->Arg(16)->Arg(32);
BENCHMARK(bm_coeff_monte_carlo)->Arg(1)->Arg(4);
BENCHMARK(bm_offset_heatmap_mc)->Arg(16)->Arg(32);
BENCHMARK(bm_approx_loss_grad)->Arg(16)->Arg(64);

BENCHMARK_MAIN();
