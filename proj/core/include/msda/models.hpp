#ifndef MSDA_MODELS_HPP
#define MSDA_MODELS_HPP

#include <functional>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "msda/errors.hpp"
#include "msda/mask.hpp"
#include "msda/rng.hpp"

namespace msda {

// Loss family l(theta, z) = h(f_theta(x)) - y * f_theta(x) with h twice
// differentiable. d3h is consumed only by the analytic gradient of the
// curvature penalty; families that omit it fall back to a central finite
// difference of d2h (step 1e-5, documented accuracy cost).
struct LossFamily {
  std::string name;
  std::function<double(double)> h;
  std::function<double(double)> dh;
  std::function<double(double)> d2h;
  std::optional<std::function<double(double)>> d3h;
};

// h = softplus, h' = sigmoid, h'' = sig(1-sig), h''' = sig(1-sig)(1-2sig),
// all in overflow-safe forms.
const LossFamily& logistic_family();

double family_d3(const LossFamily& family, double f);

// Linear predictor f(x) = theta . x + bias. The bias is not a mixed
// coordinate: masks and coefficient matrices act on the features only.
struct GlmModel {
  Eigen::VectorXd theta;
  double bias = 0.0;

  void validate() const;  // finite entries
};

double glm_predict(const GlmModel& m, const Eigen::VectorXd& x);

// h(f) - y*f with y in [0,1].
double point_loss(const LossFamily& family, double f, double y);

// f(x) = theta1 . relu(W x) + theta0. ReLU derivative at 0 is taken as 0;
// identity and finite-difference checks keep pre-activations away from 0.
struct TwoLayerNet {
  Eigen::MatrixXd w;       // hidden x input
  Eigen::VectorXd theta1;  // hidden
  double theta0 = 0.0;

  void validate() const;  // finite entries, hidden width >= 1
  Eigen::Index input_dim() const { return w.cols(); }
  Eigen::Index hidden_dim() const { return w.rows(); }
};

double net_predict(const TwoLayerNet& net, const Eigen::VectorXd& x);

// Exact reverse-mode gradients: d f / d x and d f / d W.
Eigen::VectorXd net_input_grad(const TwoLayerNet& net, const Eigen::VectorXd& x);
Eigen::MatrixXd net_layer1_grad(const TwoLayerNet& net, const Eigen::VectorXd& x);

// W ~ N(0, 1/sqrt(input)), theta1 ~ N(0, 1/sqrt(hidden)), theta0 = 0.
TwoLayerNet random_net(RngStream& rng, Eigen::Index input, Eigen::Index hidden);

// Standard-normal input with every pre-activation at least `min_preact` from
// the ReLU kink; throws NumericError after `max_tries` resamples.
Eigen::VectorXd kink_free_input(RngStream& rng, const TwoLayerNet& net,
                                double min_preact = 1e-6, int max_tries = 100);

// Both sides of the first-layer flatness identity
//   ((1-M) . grad_x f)^T x  ==  tr((grad_W f)^T W diag(1-M)),
// computed by independent code paths (input gradient vs. layer gradient).
struct FlatnessCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_diff = 0.0;
};

FlatnessCheck flatness_identity_check(const TwoLayerNet& net,
                                      const Eigen::VectorXd& x, const Mask& mask);

// JSON round-trip of the parameters (nested numeric arrays).
std::string glm_to_json(const GlmModel& m);
GlmModel glm_from_json(const std::string& text);
std::string net_to_json(const TwoLayerNet& net);
TwoLayerNet net_from_json(const std::string& text);

}  // namespace msda

#endif
