#include "msda/coefficients.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>

#include "msda/io.hpp"
#include "msda/numeric.hpp"

namespace msda {

namespace {

constexpr Eigen::Index kMaxDenseCoords = 4096;
constexpr int kMcChunks = 64;

void check_coord(const GridShape& shape, Eigen::Index i) {
  if (i < 0 || i >= shape.dim())
    throw ParameterError("coefficient coordinate out of range");
}

// Box-placement counting on one axis: offsets p in {0..n-s-1}, pixel t
// (1-based) covered when p+1 <= t <= p+s.
int cover_one(int n, int s, int t) {
  return std::min(t, n - s) - std::max(t - s, 0);
}
int cover_both(int n, int s, int t, int u) {
  const int hi = std::min(std::min(t, u), n - s);
  const int lo = std::max(std::max(t, u) - s, 0);
  return std::max(0, hi - lo);
}

// P[both pixels in the box] at box side s.
double box_pair_cover(const GridShape& shape, int s, Eigen::Index j, Eigen::Index k) {
  const int n = shape.side();
  if (s <= 0) return 0.0;
  if (s >= n) return 1.0;
  const double denom = static_cast<double>(n - s) * (n - s);
  const double cr = cover_both(n, s, shape.row_of(j), shape.row_of(k));
  const double cc = cover_both(n, s, shape.col_of(j), shape.col_of(k));
  return cr * cc / denom;
}

// P[pixel in the box] at box side s.
double box_single_cover(const GridShape& shape, int s, Eigen::Index j) {
  const int n = shape.side();
  if (s <= 0) return 0.0;
  if (s >= n) return 1.0;
  const double denom = static_cast<double>(n - s) * (n - s);
  return static_cast<double>(cover_one(n, s, shape.row_of(j))) *
         cover_one(n, s, shape.col_of(j)) / denom;
}

double hmix_closed(const MaskSpec& spec, double lambda, Eigen::Index j,
                   Eigen::Index k) {
  const int n = spec.shape.side();
  const int s = hmix_side(lambda, spec.r, n);
  const double c = hmix_outside_value(lambda, spec.r);
  const double vj = box_single_cover(spec.shape, s, j);
  const double vk = box_single_cover(spec.shape, s, k);
  const double box = box_pair_cover(spec.shape, s, j, k);
  return (1.0 - c) * (1.0 - c) + c * (1.0 - c) * (vj + vk) + c * c * box;
}

// Exact center average for gmix. The pair product separates per axis around
// the pixel midpoint:
//   (1-M_j)(1-M_k) = exp(-pi |j-k|^2 / (4(1-lambda)n^2))
//                  * exp(-pi |p-(j+k)/2|^2 / ((1-lambda)n^2)).
double gmix_grid_coeff(const GridShape& shape, double lambda, Eigen::Index j,
                       Eigen::Index k) {
  const int n = shape.side();
  // The sampler guards lambda = 1 with an all-ones mask, so 1-M vanishes.
  if (lambda >= 1.0) return 0.0;
  const double inv = M_PI / ((1.0 - lambda) * static_cast<double>(n) * n);
  const double mr = 0.5 * (shape.row_of(j) + shape.row_of(k));
  const double mc = 0.5 * (shape.col_of(j) + shape.col_of(k));
  double tr = 0.0;
  double tc = 0.0;
  for (int t = 1; t <= n; ++t) {
    tr += std::exp(-(t - mr) * (t - mr) * inv);
    tc += std::exp(-(t - mc) * (t - mc) * inv);
  }
  const double drow = shape.row_of(j) - shape.row_of(k);
  const double dcol = shape.col_of(j) - shape.col_of(k);
  const double offset = std::exp(-(drow * drow + dcol * dcol) * inv * 0.25);
  return offset * tr * tc / (static_cast<double>(n) * n);
}

void check_lambda_range(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw ParameterError("coefficient lambda must be in [0,1]");
}

}  // namespace

double coeff_closed(const MaskSpec& spec, double lambda, Eigen::Index j,
                    Eigen::Index k) {
  spec.validate();
  check_lambda_range(lambda);
  check_coord(spec.shape, j);
  check_coord(spec.shape, k);
  const double om = 1.0 - lambda;
  switch (spec.method) {
    case MaskMethod::mixup:
      return om * om;
    case MaskMethod::bernoulli:
      return j == k ? om : om * om;
    case MaskMethod::cutmix:
      return box_pair_cover(spec.shape, cutmix_side(lambda, spec.shape.side()), j, k);
    case MaskMethod::hmix:
      return hmix_closed(spec, lambda, j, k);
    case MaskMethod::gmix:
      return gmix_grid_coeff(spec.shape, lambda, j, k);
    case MaskMethod::stochastic: {
      const double cut =
          box_pair_cover(spec.shape, cutmix_side(lambda, spec.shape.side()), j, k);
      return spec.q * om * om + (1.0 - spec.q) * cut;
    }
  }
  throw ParameterError("unknown mask method");
}

double gmix_analytic_coeff(const GridShape& shape, double lambda, Eigen::Index j,
                           Eigen::Index k) {
  check_lambda_range(lambda);
  check_coord(shape, j);
  check_coord(shape, k);
  const int n = shape.side();
  if (lambda >= 1.0) return 0.0;
  const double drow = shape.row_of(j) - shape.row_of(k);
  const double dcol = shape.col_of(j) - shape.col_of(k);
  const double d2 = drow * drow + dcol * dcol;
  return (1.0 - lambda) *
         std::exp(-M_PI * d2 / (4.0 * (1.0 - lambda) * static_cast<double>(n) * n));
}

namespace {

// E over the tilde mixture for cutmix: a(lambda) is constant while the box
// side s = floor(sqrt(1-lambda) n) is, so the expectation is a finite sum of
// closed coefficients weighted by CDF differences at lambda_s = 1 - (s/n)^2.
double cutmix_expected(const GridShape& shape, const BetaParams& p, Eigen::Index j,
                       Eigen::Index k) {
  const int n = shape.side();
  double total = 0.0;
  for (int s = 0; s < n; ++s) {
    const double hi = 1.0 - static_cast<double>(s) * s / (static_cast<double>(n) * n);
    const double lo =
        1.0 - static_cast<double>(s + 1) * (s + 1) / (static_cast<double>(n) * n);
    const double w = tilde_lambda_cdf(p, hi) - tilde_lambda_cdf(p, std::max(0.0, lo));
    if (w <= 0.0) continue;
    total += w * box_pair_cover(shape, s, j, k);
  }
  return total;
}

// hmix: integrate each constant-side piece of lambda separately; inside a
// piece the integrand is smooth in lambda through c = lambda/(1-(1-lambda)r).
double hmix_expected(const MaskSpec& spec, Eigen::Index j, Eigen::Index k) {
  const auto integrand = [&](double lambda) {
    return hmix_closed(spec, lambda, j, k) * tilde_lambda_pdf(spec.lambda, lambda);
  };
  const int n = spec.shape.side();
  const double nr = std::sqrt(spec.r) * n;
  if (nr < 1.0)  // the box side is 0 for every lambda
    return integrate_to_tolerance(integrand, 0.0, 1.0, 64, 1e-6);
  double total = 0.0;
  const int s_max = static_cast<int>(std::floor(nr));
  for (int s = 0; s <= s_max; ++s) {
    const double hi = std::min(1.0, 1.0 - static_cast<double>(s) * s / (nr * nr));
    const double lo = std::max(0.0, 1.0 - static_cast<double>(s + 1) * (s + 1) / (nr * nr));
    if (hi - lo < 1e-14) continue;
    total += integrate_to_tolerance(integrand, lo, hi, 64, 1e-6);
  }
  return total;
}

double gmix_expected(const MaskSpec& spec, Eigen::Index j, Eigen::Index k) {
  const auto integrand = [&](double lambda) {
    return gmix_grid_coeff(spec.shape, lambda, j, k) *
           tilde_lambda_pdf(spec.lambda, lambda);
  };
  return integrate_to_tolerance(integrand, 0.0, 1.0, 64, 1e-6);
}

}  // namespace

double coeff_closed_expected(const MaskSpec& spec, Eigen::Index j, Eigen::Index k) {
  spec.validate();
  check_coord(spec.shape, j);
  check_coord(spec.shape, k);
  switch (spec.method) {
    case MaskMethod::mixup:
      return tilde_lambda_moment(spec.lambda, 2);
    case MaskMethod::bernoulli:
      return j == k ? tilde_lambda_moment(spec.lambda, 1)
                    : tilde_lambda_moment(spec.lambda, 2);
    case MaskMethod::cutmix:
      return cutmix_expected(spec.shape, spec.lambda, j, k);
    case MaskMethod::hmix:
      return hmix_expected(spec, j, k);
    case MaskMethod::gmix:
      return gmix_expected(spec, j, k);
    case MaskMethod::stochastic:
      return spec.q * tilde_lambda_moment(spec.lambda, 2) +
             (1.0 - spec.q) * cutmix_expected(spec.shape, spec.lambda, j, k);
  }
  throw ParameterError("unknown mask method");
}

namespace {

void check_dense_dim(const GridShape& shape) {
  if (shape.dim() > kMaxDenseCoords)
    throw ParameterError(
        "dense coefficient matrix capped at 4096 coordinates; use pairs or "
        "offsets");
}

}  // namespace

Eigen::MatrixXd coeff_closed_matrix(const MaskSpec& spec, double lambda) {
  spec.validate();
  check_dense_dim(spec.shape);
  const Eigen::Index d = spec.shape.dim();
  Eigen::MatrixXd m(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index k = j; k < d; ++k) {
      const double v = coeff_closed(spec, lambda, j, k);
      m(j, k) = v;
      m(k, j) = v;
    }
  return m;
}

Eigen::MatrixXd coeff_closed_expected_matrix(const MaskSpec& spec) {
  spec.validate();
  check_dense_dim(spec.shape);
  const Eigen::Index d = spec.shape.dim();
  Eigen::MatrixXd m(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index k = j; k < d; ++k) {
      const double v = coeff_closed_expected(spec, j, k);
      m(j, k) = v;
      m(k, j) = v;
    }
  return m;
}

namespace {

// Splits `samples` over kMcChunks fixed RNG substreams and merges the chunk
// accumulators in chunk order, so the result is identical for any `threads`.
template <typename Acc>
void run_chunked_mc(const RngStream& rng, std::int64_t samples, int threads,
                    const std::function<Acc()>& make,
                    const std::function<void(RngStream&, std::int64_t, Acc&)>& work,
                    const std::function<void(const Acc&)>& merge) {
  if (samples < 1) throw ParameterError("monte carlo requires samples >= 1");
  const std::int64_t base = samples / kMcChunks;
  const std::int64_t extra = samples % kMcChunks;
  const auto quota = [&](int c) { return base + (c < extra ? 1 : 0); };

  int nthreads = threads;
  if (nthreads <= 0)
    nthreads = static_cast<int>(std::thread::hardware_concurrency());
  nthreads = std::clamp(nthreads, 1, kMcChunks);

  if (nthreads == 1) {
    for (int c = 0; c < kMcChunks; ++c) {
      if (quota(c) == 0) continue;
      RngStream sub = rng.substream(static_cast<std::uint64_t>(c));
      Acc acc = make();
      work(sub, quota(c), acc);
      merge(acc);
    }
    return;
  }

  std::mutex mu;
  std::condition_variable cv;
  std::atomic<int> next{0};
  int turn = 0;
  std::exception_ptr failure;
  auto runner = [&] {
    for (;;) {
      const int c = next.fetch_add(1);
      if (c >= kMcChunks) return;
      Acc acc = make();
      bool ok = true;
      try {
        if (quota(c) > 0) {
          RngStream sub = rng.substream(static_cast<std::uint64_t>(c));
          work(sub, quota(c), acc);
        }
      } catch (...) {
        ok = false;
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
      }
      std::unique_lock<std::mutex> lock(mu);
      cv.wait(lock, [&] { return turn == c; });
      if (ok && !failure && quota(c) > 0) merge(acc);
      ++turn;
      cv.notify_all();
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nthreads));
  for (int t = 0; t < nthreads; ++t) pool.emplace_back(runner);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

double draw_or_fixed_lambda(RngStream& rng, const MaskSpec& spec,
                            const std::optional<double>& lambda) {
  return lambda ? *lambda : tilde_lambda_sample(rng, spec.lambda);
}

double entry_std_error(double sum, double sumsq, std::int64_t n) {
  const double mean = sum / static_cast<double>(n);
  const double var = std::max(0.0, sumsq / static_cast<double>(n) - mean * mean);
  return std::sqrt(var / static_cast<double>(n));
}

}  // namespace

CoeffMatrix coeff_monte_carlo(const RngStream& rng, const MaskSpec& spec,
                              std::optional<double> lambda, std::int64_t samples,
                              int threads) {
  spec.validate();
  check_dense_dim(spec.shape);
  if (lambda) check_lambda_range(*lambda);
  const Eigen::Index d = spec.shape.dim();

  struct Acc {
    Eigen::MatrixXd sum;
    Eigen::MatrixXd sumsq;
  };
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd sumsq = Eigen::MatrixXd::Zero(d, d);

  run_chunked_mc<Acc>(
      rng, samples, threads,
      [d] {
        return Acc{Eigen::MatrixXd::Zero(d, d), Eigen::MatrixXd::Zero(d, d)};
      },
      [&spec, &lambda](RngStream& sub, std::int64_t quota, Acc& acc) {
        for (std::int64_t it = 0; it < quota; ++it) {
          const double lam = draw_or_fixed_lambda(sub, spec, lambda);
          const Mask mask = sample_mask_at(sub, spec, lam);
          const Eigen::VectorXd v = (1.0 - mask.values.array()).matrix();
          const Eigen::VectorXd w = v.cwiseProduct(v);
          acc.sum.selfadjointView<Eigen::Lower>().rankUpdate(v, 1.0);
          acc.sumsq.selfadjointView<Eigen::Lower>().rankUpdate(w, 1.0);
        }
      },
      [&sum, &sumsq](const Acc& acc) {
        sum += acc.sum;
        sumsq += acc.sumsq;
      });

  CoeffMatrix out;
  out.provenance = CoeffProvenance::monte_carlo;
  out.samples = samples;
  if (lambda) out.lambda = *lambda;
  out.values.resize(d, d);
  out.std_error.resize(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index k = 0; k <= j; ++k) {
      const double mean = sum(j, k) / static_cast<double>(samples);
      const double se = entry_std_error(sum(j, k), sumsq(j, k), samples);
      out.values(j, k) = mean;
      out.values(k, j) = mean;
      out.std_error(j, k) = se;
      out.std_error(k, j) = se;
    }
  return out;
}

std::vector<CoeffEntry> coeff_monte_carlo_pairs(
    const RngStream& rng, const MaskSpec& spec, std::optional<double> lambda,
    std::span<const std::pair<Eigen::Index, Eigen::Index>> pairs,
    std::int64_t samples, int threads) {
  spec.validate();
  if (lambda) check_lambda_range(*lambda);
  if (pairs.empty()) throw ParameterError("coeff_monte_carlo_pairs: no pairs");
  for (const auto& [j, k] : pairs) {
    check_coord(spec.shape, j);
    check_coord(spec.shape, k);
  }
  const std::size_t np = pairs.size();

  struct Acc {
    std::vector<double> sum;
    std::vector<double> sumsq;
  };
  Acc total{std::vector<double>(np, 0.0), std::vector<double>(np, 0.0)};

  run_chunked_mc<Acc>(
      rng, samples, threads,
      [np] { return Acc{std::vector<double>(np, 0.0), std::vector<double>(np, 0.0)}; },
      [&spec, &lambda, &pairs, np](RngStream& sub, std::int64_t quota, Acc& acc) {
        for (std::int64_t it = 0; it < quota; ++it) {
          const double lam = draw_or_fixed_lambda(sub, spec, lambda);
          const Mask mask = sample_mask_at(sub, spec, lam);
          for (std::size_t p = 0; p < np; ++p) {
            const double prod = (1.0 - mask.values[pairs[p].first]) *
                                (1.0 - mask.values[pairs[p].second]);
            acc.sum[p] += prod;
            acc.sumsq[p] += prod * prod;
          }
        }
      },
      [&total, np](const Acc& acc) {
        for (std::size_t p = 0; p < np; ++p) {
          total.sum[p] += acc.sum[p];
          total.sumsq[p] += acc.sumsq[p];
        }
      });

  std::vector<CoeffEntry> out(np);
  for (std::size_t p = 0; p < np; ++p) {
    out[p].j = pairs[p].first;
    out[p].k = pairs[p].second;
    out[p].mean = total.sum[p] / static_cast<double>(samples);
    out[p].std_error = entry_std_error(total.sum[p], total.sumsq[p], samples);
  }
  return out;
}

namespace {

int heat_size(int n) { return 2 * n - 1; }

// (n - |dr|)(n - |dc|): number of valid base pixels at each offset.
Eigen::MatrixXd offset_counts(int n) {
  const int k = heat_size(n);
  Eigen::MatrixXd counts(k, k);
  for (int dr = -(n - 1); dr <= n - 1; ++dr)
    for (int dc = -(n - 1); dc <= n - 1; ++dc)
      counts(dr + n - 1, dc + n - 1) =
          static_cast<double>(n - std::abs(dr)) * (n - std::abs(dc));
  return counts;
}

// Per-mask accumulation of sum over valid i of v_i v_{i+offset} for all
// offsets, where v = 1 - M. Closed under the witness geometry per method so a
// draw costs O(n^2) instead of O(n^4).
class HeatAccumulator {
 public:
  HeatAccumulator(const MaskSpec& spec, int n)
      : spec_(spec), n_(n), acc_(Eigen::MatrixXd::Zero(heat_size(n), heat_size(n))),
        counts_(offset_counts(n)) {}

  void add(const Mask& mask) {
    switch (spec_.method) {
      case MaskMethod::mixup:
        add_constant(1.0 - mask.lambda);
        return;
      case MaskMethod::cutmix: {
        const auto& box = std::get<BoxWitness>(mask.witness);
        add_box_overlap(cutmix_side(mask.lambda, n_), box, 1.0);
        return;
      }
      case MaskMethod::hmix:
        add_hmix(mask);
        return;
      case MaskMethod::gmix:
        add_gmix(mask);
        return;
      case MaskMethod::stochastic: {
        const auto& w = std::get<StochasticWitness>(mask.witness);
        if (w.mixup_branch)
          add_constant(1.0 - mask.lambda);
        else
          add_box_overlap(cutmix_side(mask.lambda, n_), *w.box, 1.0);
        return;
      }
      case MaskMethod::bernoulli:
        add_binary(mask);
        return;
    }
  }

  const Eigen::MatrixXd& sums() const { return acc_; }

 private:
  void add_constant(double v) { acc_ += (v * v) * counts_; }

  // Box of side s against itself shifted by the offset: per-axis (s-|d|)+.
  void add_box_overlap(int s, const BoxWitness&, double weight) {
    if (s <= 0) return;
    for (int dr = -(s - 1); dr <= s - 1; ++dr)
      for (int dc = -(s - 1); dc <= s - 1; ++dc)
        acc_(dr + n_ - 1, dc + n_ - 1) +=
            weight * static_cast<double>(s - std::abs(dr)) * (s - std::abs(dc));
  }

  // v = (1-c) + c*B with B the box indicator:
  // sum = (1-c)^2 count + c(1-c)(N1 + N2) + c^2 overlap.
  void add_hmix(const Mask& mask) {
    const int s = hmix_side(mask.lambda, spec_.r, n_);
    const double c = hmix_outside_value(mask.lambda, spec_.r);
    add_constant_scaled((1.0 - c) * (1.0 - c));
    if (s <= 0) return;
    const auto& box = std::get<BoxWitness>(mask.witness);
    add_box_overlap(s, box, c * c);
    const double cc = c * (1.0 - c);
    if (cc == 0.0) return;
    const int k = heat_size(n_);
    // Per-axis counts of valid i with i in the box (n1) or i+d in it (n2).
    Eigen::VectorXd n1r(k), n2r(k), n1c(k), n2c(k);
    for (int d = -(n_ - 1); d <= n_ - 1; ++d) {
      const int vlo = std::max(1, 1 - d);
      const int vhi = std::min(n_, n_ - d);
      const auto seg = [&](int lo, int hi) {
        return static_cast<double>(std::max(0, std::min(vhi, hi) - std::max(vlo, lo) + 1));
      };
      n1r[d + n_ - 1] = seg(box.row0 + 1, box.row0 + s);
      n2r[d + n_ - 1] = seg(box.row0 + 1 - d, box.row0 + s - d);
      n1c[d + n_ - 1] = seg(box.col0 + 1, box.col0 + s);
      n2c[d + n_ - 1] = seg(box.col0 + 1 - d, box.col0 + s - d);
    }
    acc_ += cc * (n1r * n1c.transpose() + n2r * n2c.transpose());
  }

  void add_constant_scaled(double w) { acc_ += w * counts_; }

  // v factorizes per axis: v_i = e_r(i_r) e_c(i_c) around the center.
  void add_gmix(const Mask& mask) {
    if (mask.lambda >= 1.0) return;
    const auto& center = std::get<CenterWitness>(mask.witness);
    const double inv =
        M_PI / (2.0 * (1.0 - mask.lambda) * static_cast<double>(n_) * n_);
    Eigen::VectorXd er(n_), ec(n_);
    for (int t = 1; t <= n_; ++t) {
      er[t - 1] = std::exp(-(t - center.row) * (t - center.row) * inv);
      ec[t - 1] = std::exp(-(t - center.col) * (t - center.col) * inv);
    }
    const int k = heat_size(n_);
    Eigen::VectorXd sr = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd sc = Eigen::VectorXd::Zero(k);
    for (int d = -(n_ - 1); d <= n_ - 1; ++d) {
      double ar = 0.0, ac = 0.0;
      const int lo = std::max(1, 1 - d);
      const int hi = std::min(n_, n_ - d);
      for (int t = lo; t <= hi; ++t) {
        ar += er[t - 1] * er[t + d - 1];
        ac += ec[t - 1] * ec[t + d - 1];
      }
      sr[d + n_ - 1] = ar;
      sc[d + n_ - 1] = ac;
    }
    acc_ += sr * sc.transpose();
  }

  // Binary masks: iterate over ordered pairs of zero coordinates.
  void add_binary(const Mask& mask) {
    zeros_.clear();
    for (Eigen::Index i = 0; i < mask.values.size(); ++i)
      if (mask.values[i] == 0.0)
        zeros_.emplace_back(static_cast<int>(i) / n_, static_cast<int>(i) % n_);
    for (const auto& [r1, c1] : zeros_)
      for (const auto& [r2, c2] : zeros_)
        acc_(r2 - r1 + n_ - 1, c2 - c1 + n_ - 1) += 1.0;
  }

  const MaskSpec& spec_;
  int n_;
  Eigen::MatrixXd acc_;
  Eigen::MatrixXd counts_;
  std::vector<std::pair<int, int>> zeros_;
};

}  // namespace

Eigen::MatrixXd offset_heatmap_closed(const MaskSpec& spec, double lambda) {
  spec.validate();
  check_lambda_range(lambda);
  if (!spec.shape.is_square())
    throw ShapeError("offset_heatmap: square shape required");
  const int n = spec.shape.side();
  const int k = heat_size(n);
  Eigen::MatrixXd heat(k, k);
  const double om = 1.0 - lambda;
  switch (spec.method) {
    case MaskMethod::mixup:
      heat.setConstant(om * om);
      return heat;
    case MaskMethod::bernoulli:
      heat.setConstant(om * om);
      heat(n - 1, n - 1) = om;
      return heat;
    case MaskMethod::gmix: {
      // The analytic profile depends on the offset only; the average over
      // base pixels of the exact grid sum additionally feels the boundary.
      if (lambda >= 1.0) {
        heat.setZero();
        return heat;
      }
      for (int dr = -(n - 1); dr <= n - 1; ++dr)
        for (int dc = -(n - 1); dc <= n - 1; ++dc) {
          const double d2 = static_cast<double>(dr) * dr + static_cast<double>(dc) * dc;
          heat(dr + n - 1, dc + n - 1) =
              om * std::exp(-M_PI * d2 / (4.0 * om * static_cast<double>(n) * n));
        }
      return heat;
    }
    case MaskMethod::cutmix:
    case MaskMethod::hmix:
    case MaskMethod::stochastic:
      break;
  }
  for (int dr = -(n - 1); dr <= n - 1; ++dr)
    for (int dc = -(n - 1); dc <= n - 1; ++dc) {
      double sum = 0.0;
      std::int64_t count = 0;
      for (int r = std::max(1, 1 - dr); r <= std::min(n, n - dr); ++r)
        for (int c = std::max(1, 1 - dc); c <= std::min(n, n - dc); ++c) {
          sum += coeff_closed(spec, lambda, spec.shape.index(r, c),
                              spec.shape.index(r + dr, c + dc));
          ++count;
        }
      heat(dr + n - 1, dc + n - 1) = sum / static_cast<double>(count);
    }
  return heat;
}

Eigen::MatrixXd offset_heatmap_mc(const RngStream& rng, const MaskSpec& spec,
                                  double lambda, std::int64_t samples,
                                  int threads) {
  spec.validate();
  check_lambda_range(lambda);
  if (!spec.shape.is_square())
    throw ShapeError("offset_heatmap: square shape required");
  const int n = spec.shape.side();

  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(heat_size(n), heat_size(n));
  run_chunked_mc<HeatAccumulator>(
      rng, samples, threads, [&spec, n] { return HeatAccumulator(spec, n); },
      [&spec, lambda](RngStream& sub, std::int64_t quota, HeatAccumulator& acc) {
        for (std::int64_t it = 0; it < quota; ++it)
          acc.add(sample_mask_at(sub, spec, lambda));
      },
      [&total](const HeatAccumulator& acc) { total += acc.sums(); });

  return total.cwiseQuotient(static_cast<double>(samples) * offset_counts(n));
}

void write_heatmap_csv(const std::filesystem::path& path,
                       const Eigen::MatrixXd& heat) {
  if (heat.rows() != heat.cols() || heat.rows() % 2 == 0)
    throw ShapeError("write_heatmap_csv: expected an odd square matrix");
  const int n = (static_cast<int>(heat.rows()) + 1) / 2;
  std::string out = "dx,dy,value\n";
  for (int dr = -(n - 1); dr <= n - 1; ++dr)
    for (int dc = -(n - 1); dc <= n - 1; ++dc) {
      out += std::to_string(dc);
      out.push_back(',');
      out += std::to_string(dr);
      out.push_back(',');
      out += format_g17(heat(dr + n - 1, dc + n - 1));
      out.push_back('\n');
    }
  write_file_atomic(path, out);
}

}  // namespace msda
