#include "msda/rng.hpp"

#include <cmath>
#include <limits>

#include <boost/math/special_functions/beta.hpp>

namespace msda {

namespace {

// splitmix64 finalizer; used for key derivation and substream-id mixing.
std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& ctr,
                         std::array<std::uint32_t, 2>& key) noexcept {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  key[0] += kPhiloxW0;
  key[1] += kPhiloxW1;
}

std::array<std::uint32_t, 4> philox10(std::array<std::uint32_t, 4> ctr,
                                      std::array<std::uint32_t, 2> key) noexcept {
  for (int r = 0; r < 10; ++r) philox_round(ctr, key);
  return ctr;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
    : seed_(seed), stream_(stream_id) {}

void RngStream::refill() noexcept {
  const std::uint64_t key64 = mix64(seed_);
  const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(key64),
                                         static_cast<std::uint32_t>(key64 >> 32)};
  const std::array<std::uint32_t, 4> ctr{
      static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
      static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
  buf_ = philox10(ctr, key);
  ++block_;
  pos_ = 0;
}

std::uint64_t RngStream::next_u64() noexcept {
  if (pos_ > 2) refill();
  const std::uint64_t lo = buf_[static_cast<std::size_t>(pos_)];
  const std::uint64_t hi = buf_[static_cast<std::size_t>(pos_) + 1];
  pos_ += 2;
  return lo | (hi << 32);
}

double RngStream::next_double() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_open() noexcept {
  // (2k+1)/2^54 for k in [0, 2^53): symmetric, never 0 or 1.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t RngStream::next_below(std::uint64_t bound) {
  if (bound == 0) throw ParameterError("next_below: bound must be positive");
  if ((bound & (bound - 1)) == 0) return next_u64() & (bound - 1);
  // Rejection on the top multiple of bound keeps the draw exactly uniform.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % bound;
}

RngStream RngStream::substream(std::uint64_t index) const noexcept {
  return RngStream(seed_, mix64(stream_ ^ mix64(index + 1)));
}

void BetaParams::validate() const {
  if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta))
    throw ParameterError("BetaParams: alpha and beta must be positive and finite");
}

double std_normal(RngStream& rng) {
  const double u1 = rng.next_open();
  const double u2 = rng.next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Eigen::VectorXd std_normal_vector(RngStream& rng, Eigen::Index d) {
  if (d < 1) throw ParameterError("std_normal_vector: d must be >= 1");
  Eigen::VectorXd out(d);
  for (Eigen::Index i = 0; i + 1 < d; i += 2) {
    const double u1 = rng.next_open();
    const double u2 = rng.next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    out[i] = r * std::cos(2.0 * M_PI * u2);
    out[i + 1] = r * std::sin(2.0 * M_PI * u2);
  }
  if (d % 2 == 1) out[d - 1] = std_normal(rng);
  return out;
}

double gamma_sample(RngStream& rng, double shape) {
  if (!(shape > 0.0) || !std::isfinite(shape))
    throw ParameterError("gamma_sample: shape must be positive and finite");
  if (shape < 1.0) {
    const double u = rng.next_open();
    return gamma_sample(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = std_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.next_open();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double beta_sample(RngStream& rng, const BetaParams& p) {
  p.validate();
  for (;;) {
    const double x = gamma_sample(rng, p.alpha);
    const double y = gamma_sample(rng, p.beta);
    const double s = x + y;
    if (s > 0.0) {
      const double b = x / s;
      // Both gammas can underflow to a degenerate ratio; resample then.
      if (b > 0.0 && b < 1.0) return b;
      continue;
    }
  }
}

double tilde_lambda_sample(RngStream& rng, const BetaParams& p) {
  p.validate();
  const double w = p.alpha / (p.alpha + p.beta);
  if (rng.next_double() < w)
    return beta_sample(rng, BetaParams{p.alpha + 1.0, p.beta});
  return beta_sample(rng, BetaParams{p.beta + 1.0, p.alpha});
}

double tilde_lambda_moment(const BetaParams& p, int k) {
  p.validate();
  if (k != 1 && k != 2)
    throw ParameterError("tilde_lambda_moment: only k in {1,2} is supported");
  // E_{Beta(a,b)}[(1-x)^k] = prod_{i<k} (b+i)/(a+b+i).
  const auto comp = [k](double a, double b) {
    double m = 1.0;
    for (int i = 0; i < k; ++i) m *= (b + i) / (a + b + i);
    return m;
  };
  const double wa = p.alpha / (p.alpha + p.beta);
  return wa * comp(p.alpha + 1.0, p.beta) + (1.0 - wa) * comp(p.beta + 1.0, p.alpha);
}

namespace {

double beta_pdf(double a, double b, double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const double logp = (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) -
                      (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
  return std::exp(logp);
}

}  // namespace

double tilde_lambda_pdf(const BetaParams& p, double x) {
  p.validate();
  const double wa = p.alpha / (p.alpha + p.beta);
  return wa * beta_pdf(p.alpha + 1.0, p.beta, x) +
         (1.0 - wa) * beta_pdf(p.beta + 1.0, p.alpha, x);
}

double tilde_lambda_cdf(const BetaParams& p, double x) {
  p.validate();
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double wa = p.alpha / (p.alpha + p.beta);
  return wa * boost::math::ibeta(p.alpha + 1.0, p.beta, x) +
         (1.0 - wa) * boost::math::ibeta(p.beta + 1.0, p.alpha, x);
}

double beta_cdf(const BetaParams& p, double x) {
  p.validate();
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return boost::math::ibeta(p.alpha, p.beta, x);
}

}  // namespace msda
