#include "msda/models.hpp"

#include <cmath>

#include <json.hpp>

namespace msda {

namespace {

double stable_sigmoid(double f) {
  if (f >= 0.0) return 1.0 / (1.0 + std::exp(-f));
  const double e = std::exp(f);
  return e / (1.0 + e);
}

double stable_softplus(double f) {
  return f > 0.0 ? f + std::log1p(std::exp(-f)) : std::log1p(std::exp(f));
}

void check_finite(const Eigen::Ref<const Eigen::MatrixXd>& m, const char* what) {
  if (!m.allFinite()) throw ParameterError(std::string(what) + ": non-finite entry");
}

}  // namespace

const LossFamily& logistic_family() {
  static const LossFamily family{
      "logistic",
      stable_softplus,
      stable_sigmoid,
      [](double f) {
        const double s = stable_sigmoid(f);
        return s * (1.0 - s);
      },
      [](double f) {
        const double s = stable_sigmoid(f);
        return s * (1.0 - s) * (1.0 - 2.0 * s);
      },
  };
  return family;
}

double family_d3(const LossFamily& family, double f) {
  if (family.d3h) return (*family.d3h)(f);
  const double step = 1e-5;
  return (family.d2h(f + step) - family.d2h(f - step)) / (2.0 * step);
}

void GlmModel::validate() const {
  check_finite(theta, "GlmModel.theta");
  if (!std::isfinite(bias)) throw ParameterError("GlmModel.bias: non-finite");
}

double glm_predict(const GlmModel& m, const Eigen::VectorXd& x) {
  if (x.size() != m.theta.size())
    throw ShapeError("glm_predict: input length does not match theta");
  return m.theta.dot(x) + m.bias;
}

double point_loss(const LossFamily& family, double f, double y) {
  if (!(y >= 0.0 && y <= 1.0))
    throw ParameterError("point_loss: label must lie in [0,1]");
  return family.h(f) - y * f;
}

void TwoLayerNet::validate() const {
  if (w.rows() < 1 || w.cols() < 1)
    throw ShapeError("TwoLayerNet: hidden and input widths must be >= 1");
  if (theta1.size() != w.rows())
    throw ShapeError("TwoLayerNet: theta1 length must equal the hidden width");
  check_finite(w, "TwoLayerNet.w");
  check_finite(theta1, "TwoLayerNet.theta1");
  if (!std::isfinite(theta0)) throw ParameterError("TwoLayerNet.theta0: non-finite");
}

namespace {

void check_net_input(const TwoLayerNet& net, const Eigen::VectorXd& x) {
  if (x.size() != net.input_dim())
    throw ShapeError("TwoLayerNet: input length does not match W");
}

// d f / d (Wx): theta1 gated by the active ReLU units (derivative 0 at 0).
Eigen::VectorXd active_grad(const TwoLayerNet& net, const Eigen::VectorXd& x) {
  const Eigen::VectorXd pre = net.w * x;
  Eigen::VectorXd g(pre.size());
  for (Eigen::Index h = 0; h < pre.size(); ++h)
    g[h] = pre[h] > 0.0 ? net.theta1[h] : 0.0;
  return g;
}

}  // namespace

double net_predict(const TwoLayerNet& net, const Eigen::VectorXd& x) {
  check_net_input(net, x);
  return net.theta1.dot((net.w * x).cwiseMax(0.0)) + net.theta0;
}

Eigen::VectorXd net_input_grad(const TwoLayerNet& net, const Eigen::VectorXd& x) {
  check_net_input(net, x);
  return net.w.transpose() * active_grad(net, x);
}

Eigen::MatrixXd net_layer1_grad(const TwoLayerNet& net, const Eigen::VectorXd& x) {
  check_net_input(net, x);
  return active_grad(net, x) * x.transpose();
}

TwoLayerNet random_net(RngStream& rng, Eigen::Index input, Eigen::Index hidden) {
  if (input < 1 || hidden < 1)
    throw ParameterError("random_net: widths must be >= 1");
  TwoLayerNet net;
  net.w.resize(hidden, input);
  const double w_scale = 1.0 / std::sqrt(static_cast<double>(input));
  for (Eigen::Index r = 0; r < hidden; ++r)
    for (Eigen::Index c = 0; c < input; ++c) net.w(r, c) = w_scale * std_normal(rng);
  net.theta1.resize(hidden);
  const double t_scale = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (Eigen::Index h = 0; h < hidden; ++h) net.theta1[h] = t_scale * std_normal(rng);
  net.theta0 = 0.0;
  return net;
}

Eigen::VectorXd kink_free_input(RngStream& rng, const TwoLayerNet& net,
                                double min_preact, int max_tries) {
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    Eigen::VectorXd x = std_normal_vector(rng, net.input_dim());
    if ((net.w * x).cwiseAbs().minCoeff() > min_preact) return x;
  }
  throw NumericError(
      "kink_free_input: pre-activation stayed within the kink margin after "
      "all resamples");
}

FlatnessCheck flatness_identity_check(const TwoLayerNet& net,
                                      const Eigen::VectorXd& x, const Mask& mask) {
  check_net_input(net, x);
  if (mask.values.size() != x.size())
    throw ShapeError("flatness_identity_check: mask length does not match input");
  const Eigen::VectorXd one_minus = (1.0 - mask.values.array()).matrix();

  FlatnessCheck out;
  out.lhs = one_minus.cwiseProduct(net_input_grad(net, x)).dot(x);

  // tr(G^T W diag(1-M)) = sum_j (1-M_j) * (column j of G) . (column j of W).
  const Eigen::MatrixXd g = net_layer1_grad(net, x);
  double rhs = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j)
    rhs += one_minus[j] * g.col(j).dot(net.w.col(j));
  out.rhs = rhs;
  out.abs_diff = std::abs(out.lhs - out.rhs);
  return out;
}

namespace {

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  Eigen::VectorXd v(j.size());
  Eigen::Index i = 0;
  for (const auto& e : j) v[i++] = e.get<double>();
  return v;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

}  // namespace

std::string glm_to_json(const GlmModel& m) {
  nlohmann::json j;
  j["theta"] = vector_to_json(m.theta);
  j["bias"] = m.bias;
  return j.dump(2);
}

GlmModel glm_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    GlmModel m;
    m.theta = vector_from_json(j.at("theta"));
    m.bias = j.at("bias").get<double>();
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("glm_from_json: ") + e.what());
  }
}

std::string net_to_json(const TwoLayerNet& net) {
  nlohmann::json j;
  auto rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < net.hidden_dim(); ++r)
    rows.push_back(vector_to_json(net.w.row(r).transpose()));
  j["w"] = std::move(rows);
  j["theta1"] = vector_to_json(net.theta1);
  j["theta0"] = net.theta0;
  return j.dump(2);
}

TwoLayerNet net_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    TwoLayerNet net;
    const auto& rows = j.at("w");
    if (rows.empty()) throw IoError("net_from_json: empty weight matrix");
    net.w.resize(static_cast<Eigen::Index>(rows.size()),
                 static_cast<Eigen::Index>(rows.front().size()));
    Eigen::Index r = 0;
    for (const auto& row : rows) {
      if (static_cast<Eigen::Index>(row.size()) != net.w.cols())
        throw IoError("net_from_json: ragged weight matrix");
      net.w.row(r++) = vector_from_json(row).transpose();
    }
    net.theta1 = vector_from_json(j.at("theta1"));
    net.theta0 = j.at("theta0").get<double>();
    net.validate();
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("net_from_json: ") + e.what());
  }
}

}  // namespace msda
