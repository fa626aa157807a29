#ifndef MSDA_MIX_HPP
#define MSDA_MIX_HPP

#include <Eigen/Core>

#include "msda/mask.hpp"

namespace msda {

// A training point: grid-flattened input and a soft label (probability
// vector; one-hot allowed). Scalar binary labels are length-1 vectors.
struct Sample {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};

// x' = M (.) a.x + (1-M) (.) b.x;  y' = lambda a.y + (1-lambda) b.y.
// Throws ShapeError on any length mismatch.
Sample mix_pair(const Sample& a, const Sample& b, const Mask& mask);

// Constant-mask combination lambda*a + (1-lambda)*b for x and y, allowing
// lambda outside [0,1] (|lambda| <= clamp). Values are never clipped here;
// clipping happens only when writing 8-bit images.
Sample mix_extrapolate(const Sample& a, const Sample& b, double lambda,
                       double clamp = 2.0);

}  // namespace msda

#endif
