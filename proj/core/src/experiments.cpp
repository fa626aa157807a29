#include "msda/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "msda/io.hpp"
#include "msda/numeric.hpp"

namespace msda {

Dataset two_moons(int n, double noise, RngStream& rng) {
  if (n < 2 || n % 2 != 0)
    throw ParameterError("two_moons: n must be even and >= 2");
  if (!(noise >= 0.0)) throw ParameterError("two_moons: noise must be >= 0");
  const int half = n / 2;
  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(n));
  const auto angle = [half](int k) {
    return half == 1 ? 0.0 : M_PI * k / static_cast<double>(half - 1);
  };
  for (int cls = 0; cls < 2; ++cls)
    for (int k = 0; k < half; ++k) {
      const double t = angle(k);
      Sample s;
      s.x.resize(2);
      if (cls == 0)
        s.x << std::cos(t), std::sin(t);
      else
        s.x << 1.0 - std::cos(t), 0.5 - std::sin(t);
      s.x[0] += noise * std_normal(rng);
      s.x[1] += noise * std_normal(rng);
      s.y = Eigen::VectorXd::Constant(1, static_cast<double>(cls));
      samples.push_back(std::move(s));
    }
  return make_dataset(std::move(samples));
}

LossEngine parse_loss_engine(const std::string& name) {
  if (name == "original") return LossEngine::original;
  if (name == "approximate") return LossEngine::approximate;
  throw ParameterError("unknown loss engine: " + name);
}

std::string to_string(LossEngine engine) {
  return engine == LossEngine::original ? "original" : "approximate";
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ParameterError("TrainConfig: epochs must be >= 1");
  if (!(learning_rate > 0.0))
    throw ParameterError("TrainConfig: learning_rate must be > 0");
  if (batch < 0) throw ParameterError("TrainConfig: batch must be >= 0");
  spec.validate();
}

double heldout_accuracy(const GlmModel& model, const Dataset& d) {
  std::int64_t hits = 0;
  for (const Sample& s : d.samples) {
    const bool predicted = glm_predict(model, s.x) > 0.0;
    const bool truth = binary_label(s) > 0.5;
    hits += predicted == truth;
  }
  return static_cast<double>(hits) / static_cast<double>(d.size());
}

double boundary_angle_deg(const GlmModel& a, const GlmModel& b) {
  const double na = a.theta.norm();
  const double nb = b.theta.norm();
  if (na < 1e-300 || nb < 1e-300)
    throw NumericError("boundary_angle_deg: zero decision normal");
  const double c = std::clamp(a.theta.dot(b.theta) / (na * nb), -1.0, 1.0);
  return std::acos(c) * 180.0 / M_PI;
}

namespace {

void check_divergence(double loss, int epoch) {
  if (!std::isfinite(loss) || loss > 1e6)
    throw NumericError("train_sgd: divergence at epoch " +
                       std::to_string(epoch) + " (loss " +
                       std::to_string(loss) + ")");
}

// In-place Fisher-Yates driven by the stream's unbiased integer draws.
void shuffle_indices(RngStream& rng, std::vector<std::size_t>& idx) {
  for (std::size_t i = idx.size(); i > 1; --i)
    std::swap(idx[i - 1], idx[rng.next_below(i)]);
}

TrainResult train_original(const Dataset& train, const Dataset& heldout,
                           const TrainConfig& cfg, RngStream rng) {
  const std::size_t m = train.samples.size();
  const Eigen::Index dim = train.dim();
  const std::size_t batch =
      cfg.batch == 0 ? m : std::min<std::size_t>(m, static_cast<std::size_t>(cfg.batch));
  const LossFamily& family = logistic_family();

  GlmModel model{Eigen::VectorXd::Zero(dim), 0.0};
  TrainResult out;
  out.loss_curve.reserve(static_cast<std::size_t>(cfg.epochs));

  std::vector<std::size_t> partner(m);
  std::vector<double> losses(m);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < m; ++i) partner[i] = i;
    shuffle_indices(rng, partner);

    double epoch_loss_sum = 0.0;
    for (std::size_t start = 0; start < m; start += batch) {
      const std::size_t stop = std::min(m, start + batch);
      Eigen::VectorXd g_theta = Eigen::VectorXd::Zero(dim);
      double g_bias = 0.0;
      for (std::size_t i = start; i < stop; ++i) {
        const Mask mask = sample_mask(rng, cfg.spec);
        const Sample mixed =
            mix_pair(train.samples[i], train.samples[partner[i]], mask);
        const double f = glm_predict(model, mixed.x);
        const double y = binary_label(mixed);
        losses[i] = point_loss(family, f, y);
        const double residual = family.dh(f) - y;
        g_theta += residual * mixed.x;
        g_bias += residual;
      }
      const double inv_b = 1.0 / static_cast<double>(stop - start);
      model.theta -= cfg.learning_rate * inv_b * g_theta;
      model.bias -= cfg.learning_rate * inv_b * g_bias;
      epoch_loss_sum += pairwise_sum({losses.data() + start, stop - start});
    }
    const double epoch_loss = epoch_loss_sum / static_cast<double>(m);
    out.loss_curve.push_back(epoch_loss);
    check_divergence(epoch_loss, epoch);
  }
  out.model = model;
  out.heldout_accuracy = heldout_accuracy(model, heldout);
  return out;
}

TrainResult train_approximate(const Dataset& train, const Dataset& heldout,
                              const TrainConfig& cfg,
                              const ExpectedCoeffs& coeffs) {
  const Eigen::Index dim = train.dim();
  const LossFamily& family = logistic_family();
  GlmModel model{Eigen::VectorXd::Zero(dim), 0.0};
  TrainResult out;
  out.loss_curve.reserve(static_cast<std::size_t>(cfg.epochs));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const LossBreakdown loss = approx_loss(model, family, train, coeffs);
    out.loss_curve.push_back(loss.total);
    check_divergence(loss.total, epoch);
    const Eigen::VectorXd grad = approx_loss_grad(model, family, train, coeffs);
    model.theta -= cfg.learning_rate * grad.head(dim);
    model.bias -= cfg.learning_rate * grad[dim];
  }
  out.model = model;
  out.heldout_accuracy = heldout_accuracy(model, heldout);
  return out;
}

}  // namespace

ExperimentReport train_sgd(const Dataset& train, const Dataset& heldout,
                           const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.spec.shape.dim() != train.dim())
    throw ShapeError("train_sgd: mask shape does not match inputs");
  if (heldout.dim() != train.dim())
    throw ShapeError("train_sgd: held-out dimension mismatch");
  if (!train.centered())
    throw ParameterError("train_sgd: training set must be centered first");

  const RngStream base(cfg.seed);
  const ExpectedCoeffs coeffs = expected_coeffs(cfg.spec);

  ExperimentReport rep;
  rep.headline = cfg.engine;
  rep.original = train_original(train, heldout, cfg, base.substream(1));
  rep.approximate = train_approximate(train, heldout, cfg, coeffs);

  const TrainResult& headline =
      cfg.engine == LossEngine::original ? rep.original : rep.approximate;
  RngStream gap_rng = base.substream(3);
  const EmpiricalLoss empirical =
      msda_empirical_loss(gap_rng, headline.model, logistic_family(), train,
                          cfg.spec, cfg.gap_draws);
  const double approx_total =
      approx_loss(headline.model, logistic_family(), train, coeffs).total;
  rep.loss_gap = std::abs(empirical.mean - approx_total);
  rep.loss_gap_rel = rep.loss_gap / std::max(std::abs(approx_total), 1e-12);
  rep.angle_deg = boundary_angle_deg(rep.original.model, rep.approximate.model);
  return rep;
}

std::vector<std::pair<int, int>> symmetric_offsets(int radius) {
  if (radius < 0) throw ParameterError("symmetric_offsets: radius must be >= 0");
  std::vector<std::pair<int, int>> out;
  out.reserve(static_cast<std::size_t>(2 * radius + 1) * (2 * radius + 1));
  for (int dr = -radius; dr <= radius; ++dr)
    for (int dc = -radius; dc <= radius; ++dc) out.emplace_back(dr, dc);
  return out;
}

std::vector<OffsetValue> partial_grad_map(
    const TwoLayerNet& net, const std::vector<Eigen::VectorXd>& images,
    const GridShape& shape, const std::vector<std::pair<int, int>>& offsets) {
  if (!shape.is_square())
    throw ShapeError("partial_grad_map: square grid inputs required");
  if (images.empty()) throw ParameterError("partial_grad_map: no images");
  if (offsets.empty()) throw ParameterError("partial_grad_map: no offsets");
  const int n = shape.side();
  if (shape.dim() != net.input_dim())
    throw ShapeError("partial_grad_map: grid does not match the net input");
  for (const auto& [dr, dc] : offsets)
    if (std::abs(dr) >= n || std::abs(dc) >= n)
      throw ParameterError("partial_grad_map: offset leaves no valid base pixel");

  std::vector<OffsetValue> map(offsets.size());
  for (std::size_t o = 0; o < offsets.size(); ++o)
    map[o] = {offsets[o].first, offsets[o].second, 0.0};

  for (const Eigen::VectorXd& image : images) {
    if (image.size() != shape.dim())
      throw ShapeError("partial_grad_map: image does not match the grid");
    const Eigen::VectorXd g = net_input_grad(net, image);
    for (std::size_t o = 0; o < offsets.size(); ++o) {
      const auto [dr, dc] = offsets[o];
      double best = 0.0;
      for (int r = std::max(1, 1 - dr); r <= std::min(n, n - dr); ++r)
        for (int c = std::max(1, 1 - dc); c <= std::min(n, n - dc); ++c)
          best = std::max(best, std::abs(g[shape.index(r, c)] *
                                         g[shape.index(r + dr, c + dc)]));
      map[o].value = std::max(map[o].value, best);
    }
  }

  double total = 0.0;
  for (const OffsetValue& v : map) total += v.value;
  if (!(total > 0.0))
    throw NumericError("partial_grad_map: all gradient products vanish");
  for (OffsetValue& v : map) v.value /= total;
  return map;
}

void write_offset_map_csv(const std::filesystem::path& path,
                          const std::vector<OffsetValue>& map) {
  std::string out = "dx,dy,value\n";
  for (const OffsetValue& v : map) {
    out += std::to_string(v.dc);
    out.push_back(',');
    out += std::to_string(v.dr);
    out.push_back(',');
    out += format_g17(v.value);
    out.push_back('\n');
  }
  write_file_atomic(path, out);
}

}  // namespace msda
