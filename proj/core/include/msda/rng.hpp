#ifndef MSDA_RNG_HPP
#define MSDA_RNG_HPP

#include <array>
#include <cstdint>

#include <Eigen/Core>

#include "msda/errors.hpp"

namespace msda {

// Counter-based PRNG (Philox4x32-10). Chosen over std engines because the
// draw sequence must be identical across platforms and standard libraries:
// (seed, stream_id, call index) fully determines every output.
//
// The 128-bit counter is laid out as [block, stream_id]; distinct stream_ids
// therefore index disjoint counter ranges and give independent sequences.
// A stream is single-owner; use substream()/independent streams across threads.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_; }

  std::uint64_t next_u64() noexcept;

  // Uniform on [0,1) with 53 random bits.
  double next_double() noexcept;

  // Uniform on (0,1); safe as a log() argument.
  double next_open() noexcept;

  // Uniform integer in [0, bound) without modulo bias; bound >= 1.
  std::uint64_t next_below(std::uint64_t bound);

  // Derived stream that is independent of this one and of other indices.
  // Mixes (stream_id, index) into a fresh stream_id on the same seed.
  RngStream substream(std::uint64_t index) const noexcept;

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;  // buffered 32-bit words already consumed
};

struct BetaParams {
  double alpha = 1.0;
  double beta = 1.0;

  // Throws ParameterError unless alpha > 0 and beta > 0 (and finite).
  void validate() const;
};

// One standard-normal draw (Box-Muller; consumes two uniforms).
double std_normal(RngStream& rng);

// i.i.d. standard-normal vector of length d >= 1.
Eigen::VectorXd std_normal_vector(RngStream& rng, Eigen::Index d);

// Gamma(shape, 1) via Marsaglia-Tsang squeeze; shape < 1 boosted through the
// U^(1/shape) power transform. Valid for every shape > 0.
double gamma_sample(RngStream& rng, double shape);

// Beta(alpha, beta) as X/(X+Y) with X~Gamma(alpha), Y~Gamma(beta).
double beta_sample(RngStream& rng, const BetaParams& p);

// The mixture  (alpha/(alpha+beta))·Beta(alpha+1,beta)
//            + (beta/(alpha+beta))·Beta(beta+1,alpha).
double tilde_lambda_sample(RngStream& rng, const BetaParams& p);

// Exact E[(1-lambda)^k] under the mixture above, k in {1,2}.
double tilde_lambda_moment(const BetaParams& p, int k);

// Density and CDF of the mixture, for quadrature and distribution tests.
double tilde_lambda_pdf(const BetaParams& p, double x);
double tilde_lambda_cdf(const BetaParams& p, double x);

// CDF of Beta(alpha, beta) (regularized incomplete beta).
double beta_cdf(const BetaParams& p, double x);

}  // namespace msda

#endif
