#include "msda/mask.hpp"

#include <algorithm>
#include <cmath>

namespace msda {

MaskMethod parse_mask_method(const std::string& name) {
  if (name == "mixup") return MaskMethod::mixup;
  if (name == "cutmix") return MaskMethod::cutmix;
  if (name == "hmix") return MaskMethod::hmix;
  if (name == "gmix") return MaskMethod::gmix;
  if (name == "stochastic") return MaskMethod::stochastic;
  if (name == "bernoulli") return MaskMethod::bernoulli;
  throw ParameterError("unknown mask method: " + name);
}

std::string to_string(MaskMethod method) {
  switch (method) {
    case MaskMethod::mixup: return "mixup";
    case MaskMethod::cutmix: return "cutmix";
    case MaskMethod::hmix: return "hmix";
    case MaskMethod::gmix: return "gmix";
    case MaskMethod::stochastic: return "stochastic";
    case MaskMethod::bernoulli: return "bernoulli";
  }
  throw ParameterError("unknown mask method");
}

void MaskSpec::validate() const {
  lambda.validate();
  if (!(r >= 0.0 && r <= 1.0)) throw ParameterError("MaskSpec: r must be in [0,1]");
  if (!(q >= 0.0 && q <= 1.0)) throw ParameterError("MaskSpec: q must be in [0,1]");
  const bool needs_square = method == MaskMethod::cutmix || method == MaskMethod::hmix ||
                            method == MaskMethod::gmix || method == MaskMethod::stochastic;
  if (needs_square && !shape.is_square())
    throw ShapeError("MaskSpec: " + to_string(method) + " requires a square shape");
}

int cutmix_side(double lambda, int n) {
  const double t = std::sqrt(std::max(0.0, 1.0 - lambda)) * n;
  const int s = static_cast<int>(std::floor(t));
  return std::clamp(s, 0, n);
}

int hmix_side(double lambda, double r, int n) {
  const double t = std::sqrt(std::max(0.0, 1.0 - lambda)) * std::sqrt(r) * n;
  const int s = static_cast<int>(std::floor(t));
  return std::clamp(s, 0, n);
}

double hmix_outside_value(double lambda, double r) {
  const double denom = 1.0 - (1.0 - lambda) * r;
  // denom = 0 only at r = 1, lambda = 0, where the box covers the whole grid.
  if (denom <= 0.0) return 1.0;
  return lambda / denom;
}

namespace {

void check_lambda_unit(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw ParameterError("mask lambda must be in [0,1]");
}

void zero_box(Eigen::VectorXd& values, int n, const BoxWitness& box, int s) {
  for (int dr = 0; dr < s; ++dr) {
    const Eigen::Index base = static_cast<Eigen::Index>(box.row0 + dr) * n + box.col0;
    values.segment(base, s).setZero();
  }
}

void check_box(const BoxWitness& box, int n, int s) {
  const int max_off = std::max(0, n - s - 1);
  if (box.row0 < 0 || box.col0 < 0 || box.row0 > max_off || box.col0 > max_off)
    throw ParameterError("box witness offset out of range");
}

BoxWitness draw_box(RngStream& rng, int n, int s) {
  if (s <= 0 || s >= n) return BoxWitness{0, 0};
  const auto bound = static_cast<std::uint64_t>(n - s);
  const int row0 = static_cast<int>(rng.next_below(bound));
  const int col0 = static_cast<int>(rng.next_below(bound));
  return BoxWitness{row0, col0};
}

Eigen::VectorXd cutmix_values(const GridShape& shape, double lambda,
                              const BoxWitness& box) {
  const int n = shape.side();
  const int s = cutmix_side(lambda, n);
  check_box(box, n, s);
  Eigen::VectorXd values = Eigen::VectorXd::Ones(shape.dim());
  zero_box(values, n, box, s);
  return values;
}

Eigen::VectorXd hmix_values(const GridShape& shape, double lambda, double r,
                            const BoxWitness& box) {
  const int n = shape.side();
  const int s = hmix_side(lambda, r, n);
  check_box(box, n, s);
  Eigen::VectorXd values =
      Eigen::VectorXd::Constant(shape.dim(), hmix_outside_value(lambda, r));
  zero_box(values, n, box, s);
  return values;
}

Eigen::VectorXd gmix_values(const GridShape& shape, double lambda,
                            const CenterWitness& center) {
  const int n = shape.side();
  if (center.row < 1 || center.row > n || center.col < 1 || center.col > n)
    throw ParameterError("gmix center witness out of range");
  if (lambda >= 1.0) return Eigen::VectorXd::Ones(shape.dim());
  Eigen::VectorXd values(shape.dim());
  const double scale = M_PI / (2.0 * (1.0 - lambda) * static_cast<double>(n) * n);
  for (int row = 1; row <= n; ++row) {
    for (int col = 1; col <= n; ++col) {
      const double dr = row - center.row;
      const double dc = col - center.col;
      values[shape.index(row, col)] = 1.0 - std::exp(-(dr * dr + dc * dc) * scale);
    }
  }
  return values;
}

Eigen::VectorXd bernoulli_values(const GridShape& shape,
                                 const BernoulliWitness& witness) {
  if (static_cast<Eigen::Index>(witness.keep.size()) != shape.dim())
    throw ParameterError("bernoulli witness length mismatch");
  Eigen::VectorXd values(shape.dim());
  for (Eigen::Index i = 0; i < shape.dim(); ++i) {
    if (witness.keep[static_cast<std::size_t>(i)] > 1)
      throw ParameterError("bernoulli witness entries must be 0 or 1");
    values[i] = witness.keep[static_cast<std::size_t>(i)];
  }
  return values;
}

MaskWitness draw_witness(RngStream& rng, const MaskSpec& spec, double lambda) {
  switch (spec.method) {
    case MaskMethod::mixup:
      return std::monostate{};
    case MaskMethod::cutmix: {
      const int n = spec.shape.side();
      return draw_box(rng, n, cutmix_side(lambda, n));
    }
    case MaskMethod::hmix: {
      const int n = spec.shape.side();
      return draw_box(rng, n, hmix_side(lambda, spec.r, n));
    }
    case MaskMethod::gmix: {
      const int n = spec.shape.side();
      const int row = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
      const int col = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
      return CenterWitness{row, col};
    }
    case MaskMethod::stochastic: {
      StochasticWitness w;
      w.mixup_branch = rng.next_double() < spec.q;
      if (!w.mixup_branch) {
        const int n = spec.shape.side();
        w.box = draw_box(rng, n, cutmix_side(lambda, n));
      }
      return w;
    }
    case MaskMethod::bernoulli: {
      BernoulliWitness w;
      w.keep.resize(static_cast<std::size_t>(spec.shape.dim()));
      for (auto& bit : w.keep) bit = rng.next_double() < lambda ? 1 : 0;
      return w;
    }
  }
  throw ParameterError("unknown mask method");
}

}  // namespace

Mask mask_with_witness(const MaskSpec& spec, double lambda,
                       const MaskWitness& witness) {
  spec.validate();
  check_lambda_unit(lambda);
  Mask mask;
  mask.lambda = lambda;
  mask.shape = spec.shape;
  mask.witness = witness;
  switch (spec.method) {
    case MaskMethod::mixup:
      // Any witness is accepted and ignored; the mask is constant.
      mask.values = Eigen::VectorXd::Constant(spec.shape.dim(), lambda);
      return mask;
    case MaskMethod::cutmix: {
      const auto* box = std::get_if<BoxWitness>(&witness);
      if (!box) throw ParameterError("cutmix requires a box witness");
      mask.values = cutmix_values(spec.shape, lambda, *box);
      return mask;
    }
    case MaskMethod::hmix: {
      const auto* box = std::get_if<BoxWitness>(&witness);
      if (!box) throw ParameterError("hmix requires a box witness");
      mask.values = hmix_values(spec.shape, lambda, spec.r, *box);
      return mask;
    }
    case MaskMethod::gmix: {
      const auto* center = std::get_if<CenterWitness>(&witness);
      if (!center) throw ParameterError("gmix requires a center witness");
      mask.values = gmix_values(spec.shape, lambda, *center);
      return mask;
    }
    case MaskMethod::stochastic: {
      const auto* w = std::get_if<StochasticWitness>(&witness);
      if (!w) throw ParameterError("stochastic requires a branch witness");
      if (w->mixup_branch) {
        mask.values = Eigen::VectorXd::Constant(spec.shape.dim(), lambda);
      } else {
        if (!w->box) throw ParameterError("stochastic cutmix branch requires a box");
        mask.values = cutmix_values(spec.shape, lambda, *w->box);
      }
      return mask;
    }
    case MaskMethod::bernoulli: {
      const auto* w = std::get_if<BernoulliWitness>(&witness);
      if (!w) throw ParameterError("bernoulli requires a keep-bit witness");
      mask.values = bernoulli_values(spec.shape, *w);
      return mask;
    }
  }
  throw ParameterError("unknown mask method");
}

Mask sample_mask_at(RngStream& rng, const MaskSpec& spec, double lambda) {
  spec.validate();
  check_lambda_unit(lambda);
  return mask_with_witness(spec, lambda, draw_witness(rng, spec, lambda));
}

Mask sample_mask(RngStream& rng, const MaskSpec& spec) {
  spec.validate();
  const double lambda = beta_sample(rng, spec.lambda);
  return mask_with_witness(spec, lambda, draw_witness(rng, spec, lambda));
}

}  // namespace msda
