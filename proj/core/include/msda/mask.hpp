#ifndef MSDA_MASK_HPP
#define MSDA_MASK_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "msda/grid.hpp"
#include "msda/rng.hpp"

namespace msda {

enum class MaskMethod { mixup, cutmix, hmix, gmix, stochastic, bernoulli };

MaskMethod parse_mask_method(const std::string& name);
std::string to_string(MaskMethod method);

// Declarative description of a mask family.
//   mixup:      M = lambda * 1.
//   cutmix:     zero box of side s = floor(sqrt(1-lambda) * n), ones outside.
//   hmix:       zero box of side s = floor(sqrt(1-lambda) * sqrt(r) * n),
//               value lambda/(1-(1-lambda)*r) outside.
//   gmix:       M_i = 1 - exp(-pi*|i-p|^2 / (2*(1-lambda)*n^2)), p a random
//               pixel center.
//   stochastic: the mixup mask with probability q, else the cutmix mask.
//   bernoulli:  each coordinate independently 1 with probability lambda.
struct MaskSpec {
  MaskMethod method = MaskMethod::mixup;
  BetaParams lambda{1.0, 1.0};
  GridShape shape = GridShape::flat(1);
  double r = 0.5;  // hmix box-area ratio, in [0,1]
  double q = 0.5;  // stochastic mixup-selection probability, in [0,1]

  // Throws ParameterError/ShapeError; cutmix, hmix, gmix and stochastic
  // require a square shape.
  void validate() const;
};

// The random choices behind one draw, sufficient to rebuild it at a given
// lambda. Mixup has none; cutmix/hmix record the box offset; gmix its center;
// bernoulli the keep bits; stochastic the branch plus the branch's witness.
struct BoxWitness {
  int row0 = 0;  // 0-based top-left offset; box covers pixels row0+1..row0+s
  int col0 = 0;
};
struct CenterWitness {
  int row = 1;  // 1-based center pixel
  int col = 1;
};
struct BernoulliWitness {
  std::vector<std::uint8_t> keep;
};
struct StochasticWitness {
  bool mixup_branch = true;
  std::optional<BoxWitness> box;  // set when the cutmix branch drew offsets
};
using MaskWitness = std::variant<std::monostate, BoxWitness, CenterWitness,
                                 BernoulliWitness, StochasticWitness>;

struct Mask {
  Eigen::VectorXd values;
  double lambda = 1.0;
  GridShape shape = GridShape::flat(1);
  MaskWitness witness;

  double mean() const { return values.mean(); }
};

// Side of the zero box: floor(sqrt(1-lambda) * n), clamped to [0, n].
int cutmix_side(double lambda, int n);

// Side of the hmix zero box: floor(sqrt(1-lambda) * sqrt(r) * n).
int hmix_side(double lambda, double r, int n);

// Out-of-box hmix value lambda/(1-(1-lambda)*r); equals 1 when the box covers
// the whole grid (r = 1, lambda = 0).
double hmix_outside_value(double lambda, double r);

// Draws lambda ~ Beta(alpha, beta), then the method's mask. Draw order per
// mask: lambda; then mixup none; cutmix/hmix box offsets (one per axis,
// only when 0 < s < n); gmix center row then col; stochastic one branch
// uniform then the branch's draws; bernoulli one uniform per coordinate.
Mask sample_mask(RngStream& rng, const MaskSpec& spec);

// Same with lambda held fixed (witness draws only); lambda in [0, 1].
Mask sample_mask_at(RngStream& rng, const MaskSpec& spec, double lambda);

// Deterministic reconstruction from a witness. Witness kind and ranges must
// match the method (mixup accepts an empty witness).
Mask mask_with_witness(const MaskSpec& spec, double lambda,
                       const MaskWitness& witness);

}  // namespace msda

#endif
