#ifndef MSDA_EXPERIMENTS_HPP
#define MSDA_EXPERIMENTS_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "msda/losses.hpp"
#include "msda/models.hpp"

namespace msda {

// Two interleaving half-circles (radius 1, second moon shifted by (1,-0.5))
// with isotropic Gaussian noise; n/2 points per class, labels 0/1. Returned
// uncentered. Draw order: class 0 then class 1, two normals per point.
Dataset two_moons(int n, double noise, RngStream& rng);

enum class LossEngine { original, approximate };

LossEngine parse_loss_engine(const std::string& name);
std::string to_string(LossEngine engine);

struct TrainConfig {
  int epochs = 2000;
  double learning_rate = 0.1;
  Eigen::Index batch = 0;  // 0 = full batch
  LossEngine engine = LossEngine::original;  // headline engine of the report
  MaskSpec spec;
  std::uint64_t seed = 0;
  std::int64_t gap_draws = 100000;  // MC draws behind the report's loss gap

  void validate() const;  // epochs >= 1, learning_rate > 0, batch >= 0
};

struct TrainResult {
  GlmModel model;
  std::vector<double> loss_curve;  // per-epoch engine loss before the step
  double heldout_accuracy = 0.0;
};

// Both engines always run (the gap and angle compare them); `headline`
// records which one the caller asked for.
struct ExperimentReport {
  LossEngine headline = LossEngine::original;
  TrainResult original;
  TrainResult approximate;
  double loss_gap = 0.0;      // |empirical MC - approximate total| at the
  double loss_gap_rel = 0.0;  // headline engine's final model
  double angle_deg = 0.0;     // between the engines' final theta vectors
};

// Logistic-loss SGD under both engines on the same centered training set.
// The `original` engine re-pairs the batch each epoch (fresh permutation)
// and draws a fresh (lambda, M) per sample; `approximate` descends
// approx_loss_grad and is deterministic. Throws NumericError when an epoch
// loss exceeds 1e6 (divergence) and ParameterError when the approximate
// engine sees an uncentered dataset. `heldout` must already be shifted by
// the training mean.
ExperimentReport train_sgd(const Dataset& train, const Dataset& heldout,
                           const TrainConfig& cfg);

// Fraction of samples whose sign(f) matches the binary label.
double heldout_accuracy(const GlmModel& model, const Dataset& d);

// Angle in degrees between the two decision normals.
double boundary_angle_deg(const GlmModel& a, const GlmModel& b);

struct OffsetValue {
  int dr = 0;
  int dc = 0;
  double value = 0.0;
};

// The full square offset window {-radius..radius}^2 in row-major order.
std::vector<std::pair<int, int>> symmetric_offsets(int radius);

// Per offset p: max over images and over valid base pixels v of
// |d_v f * d_{v+p} f|, then the map is normalized to sum to 1.
std::vector<OffsetValue> partial_grad_map(
    const TwoLayerNet& net, const std::vector<Eigen::VectorXd>& images,
    const GridShape& shape, const std::vector<std::pair<int, int>>& offsets);

// Three-column CSV "dx,dy,value" (dx = column offset, dy = row offset).
void write_offset_map_csv(const std::filesystem::path& path,
                          const std::vector<OffsetValue>& map);

}  // namespace msda

#endif
