#ifndef MSDA_COEFFICIENTS_HPP
#define MSDA_COEFFICIENTS_HPP

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "msda/mask.hpp"

namespace msda {

// Regularization coefficients a_jk = E_M[(1-M_j)(1-M_k)] over a mask family.
// Coordinates are flat 0-based indices (row-major for square grids).

enum class CoeffProvenance { closed_form, monte_carlo };

struct CoeffMatrix {
  Eigen::MatrixXd values;     // d x d, symmetric
  Eigen::MatrixXd std_error;  // per-entry standard error; zero for closed form
  double lambda = std::numeric_limits<double>::quiet_NaN();  // NaN: integrated
  CoeffProvenance provenance = CoeffProvenance::closed_form;
  std::int64_t samples = 0;
};

// Exact expectation at fixed lambda over the method's witness draws.
//   mixup:      (1-lambda)^2
//   bernoulli:  (1-lambda) on the diagonal, (1-lambda)^2 off it
//   cutmix:     per-axis box-overlap counts over the (n-s)^2 placements
//   hmix:       (1-c)^2 + c(1-c)(v_j+v_k) + c^2 a^cutmix_s with the box side
//               s = floor(sqrt(1-lambda) sqrt(r) n), c the out-of-box value,
//               v the single-pixel cover probability
//   stochastic: q a^mixup + (1-q) a^cutmix
//   gmix:       the exact average over the n^2 snapped centers (a separable
//               finite Gaussian sum)
// lambda in {0,1} is handled by the degenerate box sides (s = n covers the
// whole grid, s = 0 covers nothing).
double coeff_closed(const MaskSpec& spec, double lambda, Eigen::Index j,
                    Eigen::Index k);

// The smooth offset-only profile (1-lambda) exp(-pi |j-k|^2 / (4(1-lambda)n^2))
// obtained by integrating the gmix center over the whole plane instead of the
// finite grid. Agrees with coeff_closed(gmix) when the Gaussian is narrow
// relative to the grid (lambda near 1); at moderate lambda the finite grid
// truncates the center average and coeff_closed is smaller near the boundary.
double gmix_analytic_coeff(const GridShape& shape, double lambda, Eigen::Index j,
                           Eigen::Index k);

// E over the tilde-lambda mixture of coeff_closed(., lambda, j, k).
// mixup/bernoulli/stochastic-mixup use exact mixture moments; cutmix (and the
// stochastic cutmix branch) is piecewise constant in lambda, so the
// expectation is an exact CDF-weighted sum over box sides; hmix integrates
// each constant-side piece and gmix the whole interval by Gauss-Legendre
// (64 nodes, doubled until the relative change is <= 1e-6).
double coeff_closed_expected(const MaskSpec& spec, Eigen::Index j, Eigen::Index k);

// Dense variants; d is capped at 4096 coordinates.
Eigen::MatrixXd coeff_closed_matrix(const MaskSpec& spec, double lambda);
Eigen::MatrixXd coeff_closed_expected_matrix(const MaskSpec& spec);

// Monte-Carlo estimate over `samples` masks. `lambda` fixes the mixing ratio;
// nullopt draws lambda ~ tilde-mixture per mask, estimating the integrated
// coefficient coeff_closed_expected. Work is split over 64 fixed-substream
// chunks of `rng` and merged in chunk order, so results do not depend on
// `threads`. Full matrices are capped at 4096 coordinates.
CoeffMatrix coeff_monte_carlo(const RngStream& rng, const MaskSpec& spec,
                              std::optional<double> lambda, std::int64_t samples,
                              int threads = 1);

struct CoeffEntry {
  Eigen::Index j = 0;
  Eigen::Index k = 0;
  double mean = 0.0;
  double std_error = 0.0;
};

// Same estimator restricted to the requested pairs.
std::vector<CoeffEntry> coeff_monte_carlo_pairs(
    const RngStream& rng, const MaskSpec& spec, std::optional<double> lambda,
    std::span<const std::pair<Eigen::Index, Eigen::Index>> pairs,
    std::int64_t samples, int threads = 1);

// heat(dr, dc) = mean over valid base pixels i of a_{i, i+(dr,dc)}, for all
// offsets in (-(n-1)..n-1)^2; entry (dr+n-1, dc+n-1) of the returned matrix.
// Closed mode uses coeff_closed per pair, except gmix, which reports its
// position-independent analytic profile (see gmix_analytic_coeff).
Eigen::MatrixXd offset_heatmap_closed(const MaskSpec& spec, double lambda);

// MC heatmap over `samples` masks, same estimator and the same chunked
// determinism contract as coeff_monte_carlo.
Eigen::MatrixXd offset_heatmap_mc(const RngStream& rng, const MaskSpec& spec,
                                  double lambda, std::int64_t samples,
                                  int threads = 1);

// Three-column CSV "dx,dy,value" (dx = column offset, dy = row offset).
void write_heatmap_csv(const std::filesystem::path& path,
                       const Eigen::MatrixXd& heat);

}  // namespace msda

#endif
