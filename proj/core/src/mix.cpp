#include "msda/mix.hpp"

#include <cmath>

namespace msda {

Sample mix_pair(const Sample& a, const Sample& b, const Mask& mask) {
  if (a.x.size() != b.x.size() || a.x.size() != mask.values.size())
    throw ShapeError("mix_pair: input/mask length mismatch");
  if (a.y.size() != b.y.size())
    throw ShapeError("mix_pair: label length mismatch");
  Sample out;
  out.x = mask.values.cwiseProduct(a.x) +
          (1.0 - mask.values.array()).matrix().cwiseProduct(b.x);
  out.y = mask.lambda * a.y + (1.0 - mask.lambda) * b.y;
  return out;
}

Sample mix_extrapolate(const Sample& a, const Sample& b, double lambda,
                       double clamp) {
  if (a.x.size() != b.x.size())
    throw ShapeError("mix_extrapolate: input length mismatch");
  if (a.y.size() != b.y.size())
    throw ShapeError("mix_extrapolate: label length mismatch");
  if (!(std::abs(lambda) <= clamp))
    throw ParameterError("mix_extrapolate: |lambda| exceeds the clamp range");
  Sample out;
  out.x = lambda * a.x + (1.0 - lambda) * b.x;
  out.y = lambda * a.y + (1.0 - lambda) * b.y;
  return out;
}

}  // namespace msda
