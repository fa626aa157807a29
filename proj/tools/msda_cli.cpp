// Command-line surface over the MSDA core: mask drawing, image mixing,
// coefficient matrices and heatmaps, mask synthesis, the two-moons
// experiment, and partial-gradient maps. All randomness flows from --seed;
// every output is written atomically and is byte-identical across runs.

#include <cstdint>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "msda/coefficients.hpp"
#include "msda/experiments.hpp"
#include "msda/io.hpp"
#include "msda/losses.hpp"
#include "msda/mask.hpp"
#include "msda/mix.hpp"
#include "msda/models.hpp"
#include "msda/rng.hpp"
#include "msda/synthesis.hpp"

namespace {

using nlohmann::json;

const std::vector<std::string> kMethods = {"mixup",      "cutmix", "hmix",
                                           "gmix",       "stochastic",
                                           "bernoulli"};

struct MaskArgs {
  std::string method = "mixup";
  double alpha = 1.0;
  double beta = 1.0;
  double r = 0.5;
  double q = 0.5;
};

void add_mask_args(CLI::App* cmd, MaskArgs& args, bool require_beta_params) {
  auto* method = cmd->add_option("--method", args.method, "Mask family")
                     ->check(CLI::IsMember(kMethods));
  auto* alpha = cmd->add_option("--alpha", args.alpha, "Beta shape alpha");
  auto* beta = cmd->add_option("--beta", args.beta, "Beta shape beta");
  if (require_beta_params) {
    method->required();
    alpha->required();
    beta->required();
  }
  cmd->add_option("--r", args.r, "hmix box-area ratio")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--q", args.q, "stochastic mixup probability")
      ->check(CLI::Range(0.0, 1.0));
}

msda::MaskSpec build_spec(const MaskArgs& args, const msda::GridShape& shape) {
  msda::MaskSpec spec;
  spec.method = msda::parse_mask_method(args.method);
  spec.lambda = msda::BetaParams{args.alpha, args.beta};
  spec.shape = shape;
  spec.r = args.r;
  spec.q = args.q;
  spec.validate();
  return spec;
}

json mask_args_json(const MaskArgs& args) {
  return json{{"method", args.method}, {"alpha", args.alpha},
              {"beta", args.beta},     {"r", args.r},
              {"q", args.q}};
}

Eigen::MatrixXd mask_as_matrix(const msda::Mask& mask) {
  const int n = mask.shape.side();
  Eigen::MatrixXd m(n, n);
  for (int row = 1; row <= n; ++row)
    for (int col = 1; col <= n; ++col)
      m(row - 1, col - 1) = mask.values[mask.shape.index(row, col)];
  return m;
}

void write_json_atomic(const std::string& path, const json& j) {
  msda::write_file_atomic(path, j.dump(2) + "\n");
}

// ---- gen-mask ----

struct GenMaskOpts {
  MaskArgs mask;
  int n = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string csv;
  bool ascii = false;
};

void run_gen_mask(const GenMaskOpts& o) {
  const msda::MaskSpec spec = build_spec(o.mask, msda::GridShape::square(o.n));
  msda::RngStream rng(o.seed);
  const msda::Mask mask = msda::sample_mask(rng, spec);
  msda::write_pgm(o.out, msda::mask_to_pgm(mask), o.ascii);
  if (!o.csv.empty()) msda::write_csv(o.csv, mask_as_matrix(mask));
}

void setup_gen_mask(CLI::App& app) {
  auto o = std::make_shared<GenMaskOpts>();
  CLI::App* cmd =
      app.add_subcommand("gen-mask", "Draw one mask and write it as a PGM image");
  add_mask_args(cmd, o->mask, true);
  cmd->add_option("--n", o->n, "Grid side")->required()->check(CLI::Range(2, 4096));
  cmd->add_option("--seed", o->seed, "RNG seed")->required();
  cmd->add_option("--out", o->out, "Output PGM path")->required();
  cmd->add_option("--csv", o->csv, "Also write the mask values as CSV");
  cmd->add_flag("--ascii", o->ascii, "Write ASCII (P2) instead of binary (P5)");
  cmd->callback([o] { run_gen_mask(*o); });
}

// ---- mix ----

struct MixOpts {
  MaskArgs mask;
  std::string a;
  std::string b;
  std::string out;
  std::optional<double> lambda;
  bool extrapolate = false;
  std::optional<std::uint64_t> seed;
  bool ascii = false;
};

void run_mix(const MixOpts& o) {
  const msda::PgmImage ia = msda::read_pgm(o.a);
  const msda::PgmImage ib = msda::read_pgm(o.b);
  if (ia.width != ib.width || ia.height != ib.height)
    throw msda::ShapeError("mix: input image dimensions differ");
  const msda::Sample sa{msda::pgm_to_unit(ia), Eigen::VectorXd::Constant(1, 1.0)};
  const msda::Sample sb{msda::pgm_to_unit(ib), Eigen::VectorXd::Constant(1, 0.0)};
  const int maxval = std::max(ia.maxval, ib.maxval);

  msda::Sample mixed;
  if (o.extrapolate) {
    if (!o.lambda)
      throw CLI::ValidationError("mix: --extrapolate requires --lambda");
    if (o.mask.method != "mixup")
      throw CLI::ValidationError("mix: --extrapolate needs --method mixup");
    mixed = msda::mix_extrapolate(sa, sb, *o.lambda);
  } else {
    const msda::GridShape shape =
        ia.width == ia.height && ia.width >= 2
            ? msda::GridShape::square(ia.width)
            : msda::GridShape::flat(static_cast<Eigen::Index>(ia.width) *
                                    ia.height);
    const msda::MaskSpec spec = build_spec(o.mask, shape);
    msda::Mask mask;
    if (o.lambda && spec.method == msda::MaskMethod::mixup) {
      mask = msda::mask_with_witness(spec, *o.lambda, std::monostate{});
    } else {
      if (!o.seed)
        throw CLI::ValidationError(
            "mix: --seed is required when the mask involves a random draw");
      msda::RngStream rng(*o.seed);
      mask = o.lambda ? msda::sample_mask_at(rng, spec, *o.lambda)
                      : msda::sample_mask(rng, spec);
    }
    mixed = msda::mix_pair(sa, sb, mask);
  }
  msda::write_pgm(o.out, msda::unit_to_pgm(mixed.x, ia.width, ia.height, maxval),
                  o.ascii);
}

void setup_mix(CLI::App& app) {
  auto o = std::make_shared<MixOpts>();
  CLI::App* cmd = app.add_subcommand("mix", "Mix two PGM images through a mask");
  add_mask_args(cmd, o->mask, false);
  cmd->add_option("--a", o->a, "First input PGM")->required();
  cmd->add_option("--b", o->b, "Second input PGM")->required();
  cmd->add_option("--out", o->out, "Output PGM path")->required();
  cmd->add_option("--lambda", o->lambda,
                  "Fixed mixing ratio (drawn from Beta when absent)");
  cmd->add_flag("--extrapolate", o->extrapolate,
                "Constant-mask combination with lambda in [-1,2]");
  cmd->add_option("--seed", o->seed, "RNG seed for mask draws");
  cmd->add_flag("--ascii", o->ascii, "Write ASCII (P2) instead of binary (P5)");
  cmd->callback([o] { run_mix(*o); });
}

// ---- coeff ----

struct CoeffOpts {
  MaskArgs mask;
  double lambda = 0.5;
  int n = 0;
  std::string mode = "closed";
  std::int64_t samples = 200000;
  std::string pairs = "full";
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string out;
};

// The "offsets" pair set anchors j at the central pixel and sweeps k over
// the grid, emitted as dx,dy,value rows relative to that anchor.
void run_coeff(const CoeffOpts& o) {
  const msda::GridShape shape = msda::GridShape::square(o.n);
  const msda::MaskSpec spec = build_spec(o.mask, shape);
  const bool mc = o.mode == "mc";
  if (mc && !o.seed)
    throw CLI::ValidationError("coeff: --seed is required in mc mode");

  if (o.pairs == "full") {
    Eigen::MatrixXd values;
    if (mc) {
      msda::RngStream rng(*o.seed);
      values =
          msda::coeff_monte_carlo(rng, spec, o.lambda, o.samples, o.threads)
              .values;
    } else {
      values = msda::coeff_closed_matrix(spec, o.lambda);
    }
    msda::write_csv(o.out, values);
    return;
  }

  const int center = (o.n + 1) / 2;  // 1-based central pixel
  const Eigen::Index anchor = shape.index(center, center);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  pairs.reserve(static_cast<std::size_t>(shape.dim()));
  for (Eigen::Index k = 0; k < shape.dim(); ++k) pairs.emplace_back(anchor, k);

  std::vector<double> values(pairs.size());
  if (mc) {
    msda::RngStream rng(*o.seed);
    const auto entries = msda::coeff_monte_carlo_pairs(
        rng, spec, o.lambda, pairs, o.samples, o.threads);
    for (std::size_t i = 0; i < entries.size(); ++i) values[i] = entries[i].mean;
  } else {
    for (std::size_t i = 0; i < pairs.size(); ++i)
      values[i] = msda::coeff_closed(spec, o.lambda, pairs[i].first,
                                     pairs[i].second);
  }

  std::string text = "dx,dy,value\n";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Eigen::Index k = pairs[i].second;
    text += std::to_string(shape.col_of(k) - center);
    text.push_back(',');
    text += std::to_string(shape.row_of(k) - center);
    text.push_back(',');
    text += msda::format_g17(values[i]);
    text.push_back('\n');
  }
  msda::write_file_atomic(o.out, text);
}

void setup_coeff(CLI::App& app) {
  auto o = std::make_shared<CoeffOpts>();
  CLI::App* cmd = app.add_subcommand(
      "coeff", "Regularization-coefficient matrix at a fixed lambda");
  add_mask_args(cmd, o->mask, false);
  cmd->get_option("--method")->required();
  cmd->add_option("--lambda", o->lambda, "Fixed mixing ratio")
      ->required()
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--n", o->n, "Grid side")->required()->check(CLI::Range(2, 64));
  cmd->add_option("--mode", o->mode, "closed or mc")
      ->required()
      ->check(CLI::IsMember({"closed", "mc"}));
  cmd->add_option("--samples", o->samples, "Monte-Carlo mask draws")
      ->check(CLI::Range(std::int64_t{1}, std::int64_t{1} << 40));
  cmd->add_option("--pairs", o->pairs, "full matrix or center-anchored offsets")
      ->check(CLI::IsMember({"full", "offsets"}));
  cmd->add_option("--seed", o->seed, "RNG seed (mc mode)");
  cmd->add_option("--threads", o->threads, "Worker cap (result-invariant)")
      ->check(CLI::Range(1, 256));
  cmd->add_option("--out", o->out, "Output CSV path")->required();
  cmd->callback([o] { run_coeff(*o); });
}

// ---- heatmap ----

struct HeatmapOpts {
  MaskArgs mask;
  double lambda = 0.5;
  int n = 0;
  std::string mode = "closed";
  std::int64_t samples = 200000;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string out;
};

void run_heatmap(const HeatmapOpts& o) {
  const msda::MaskSpec spec = build_spec(o.mask, msda::GridShape::square(o.n));
  Eigen::MatrixXd heat;
  if (o.mode == "mc") {
    if (!o.seed)
      throw CLI::ValidationError("heatmap: --seed is required in mc mode");
    msda::RngStream rng(*o.seed);
    heat = msda::offset_heatmap_mc(rng, spec, o.lambda, o.samples, o.threads);
  } else {
    heat = msda::offset_heatmap_closed(spec, o.lambda);
  }
  msda::write_heatmap_csv(o.out, heat);
}

void setup_heatmap(CLI::App& app) {
  auto o = std::make_shared<HeatmapOpts>();
  CLI::App* cmd = app.add_subcommand(
      "heatmap", "Offset-averaged coefficient profile as dx,dy,value CSV");
  add_mask_args(cmd, o->mask, false);
  cmd->get_option("--method")->required();
  cmd->add_option("--lambda", o->lambda, "Fixed mixing ratio")
      ->required()
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--n", o->n, "Grid side")->required()->check(CLI::Range(2, 256));
  cmd->add_option("--mode", o->mode, "closed or mc")
      ->required()
      ->check(CLI::IsMember({"closed", "mc"}));
  cmd->add_option("--samples", o->samples, "Monte-Carlo mask draws (mc mode)")
      ->check(CLI::Range(std::int64_t{1}, std::int64_t{1} << 40));
  cmd->add_option("--seed", o->seed, "RNG seed (mc mode)");
  cmd->add_option("--threads", o->threads, "Worker cap (result-invariant)")
      ->check(CLI::Range(1, 256));
  cmd->add_option("--out", o->out, "Output CSV path")->required();
  cmd->callback([o] { run_heatmap(*o); });
}

// ---- synth-mask ----

struct SynthOpts {
  std::string target;
  double lambda = 0.5;
  std::int64_t samples = 0;
  std::uint64_t seed = 0;
  std::string report;
};

void run_synth(const SynthOpts& o) {
  msda::TargetSpec target;
  target.lambda = o.lambda;
  target.a = msda::read_csv_matrix(o.target);
  const msda::SynthesizedMaskSampler sampler(target);
  msda::RngStream rng(o.seed);
  const msda::SynthesisReport rep = msda::verify_synthesis(rng, sampler, o.samples);

  json j;
  j["config"] = {{"target", o.target},
                 {"lambda", o.lambda},
                 {"samples", o.samples},
                 {"seed", o.seed}};
  j["dim"] = sampler.dim();
  j["psd_margin"] = rep.psd_margin;
  j["coefficient_law"] = {{"max_abs_error", rep.max_abs_error},
                          {"max_error_in_se", rep.max_error_in_se},
                          {"worst",
                           {{"j", rep.worst_j},
                            {"k", rep.worst_k},
                            {"empirical", rep.worst_empirical},
                            {"target", rep.worst_target}}}};
  j["mean_law"] = {{"max_abs_error", rep.max_mean_abs_error},
                   {"max_error_in_se", rep.max_mean_error_in_se}};
  write_json_atomic(o.report, j);
}

void setup_synth(CLI::App& app) {
  auto o = std::make_shared<SynthOpts>();
  CLI::App* cmd = app.add_subcommand(
      "synth-mask",
      "Synthesize a mask sampler for a target coefficient matrix and verify it");
  cmd->add_option("--target", o->target, "Target matrix CSV")->required();
  cmd->add_option("--lambda", o->lambda, "Mixing ratio in (0,1)")->required();
  cmd->add_option("--samples", o->samples, "Verification draws")
      ->required()
      ->check(CLI::Range(std::int64_t{2}, std::int64_t{1} << 40));
  cmd->add_option("--seed", o->seed, "RNG seed")->required();
  cmd->add_option("--report", o->report, "Output JSON path")->required();
  cmd->callback([o] { run_synth(*o); });
}

// ---- two-moons ----

struct TwoMoonsOpts {
  std::string engine = "original";
  MaskArgs mask;
  int m = 200;
  double noise = 0.2;
  int epochs = 2000;
  double lr = 0.1;
  std::int64_t batch = 0;
  int heldout = 1000;
  std::int64_t gap_draws = 100000;
  std::uint64_t seed = 0;
  std::string report;
  std::string curves;
};

json vector_json(const Eigen::VectorXd& v) {
  json j = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

json result_json(const msda::TrainResult& r) {
  return json{{"theta", vector_json(r.model.theta)},
              {"bias", r.model.bias},
              {"heldout_accuracy", r.heldout_accuracy},
              {"final_loss", r.loss_curve.back()}};
}

void run_two_moons(const TwoMoonsOpts& o) {
  msda::MaskSpec spec = build_spec(o.mask, msda::GridShape::flat(2));

  const msda::RngStream base(o.seed);
  msda::RngStream train_rng = base.substream(10);
  msda::RngStream held_rng = base.substream(11);
  const msda::Dataset raw = msda::two_moons(o.m, o.noise, train_rng);
  const msda::Dataset held_raw = msda::two_moons(o.heldout, o.noise, held_rng);
  const msda::Dataset train = msda::center_dataset(raw);
  const msda::Dataset held = msda::shift_dataset(held_raw, raw.mean);

  msda::TrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.learning_rate = o.lr;
  cfg.batch = o.batch;
  cfg.engine = msda::parse_loss_engine(o.engine);
  cfg.spec = spec;
  cfg.seed = o.seed;
  cfg.gap_draws = o.gap_draws;
  const msda::ExperimentReport rep = msda::train_sgd(train, held, cfg);

  json j;
  j["config"] = {{"engine", o.engine},
                 {"m", o.m},
                 {"noise", o.noise},
                 {"epochs", o.epochs},
                 {"lr", o.lr},
                 {"batch", o.batch},
                 {"heldout", o.heldout},
                 {"gap_draws", o.gap_draws},
                 {"seed", o.seed}};
  j["config"].update(mask_args_json(o.mask));
  j["train_mean"] = vector_json(raw.mean);
  j["original"] = result_json(rep.original);
  j["approximate"] = result_json(rep.approximate);
  j["comparison"] = {
      {"loss_gap", rep.loss_gap},
      {"loss_gap_rel", rep.loss_gap_rel},
      {"angle_deg", rep.angle_deg},
      {"accuracy_diff", std::abs(rep.original.heldout_accuracy -
                                 rep.approximate.heldout_accuracy)}};
  write_json_atomic(o.report, j);

  if (!o.curves.empty()) {
    Eigen::MatrixXd curves(o.epochs, 3);
    for (int e = 0; e < o.epochs; ++e) {
      curves(e, 0) = e;
      curves(e, 1) = rep.original.loss_curve[static_cast<std::size_t>(e)];
      curves(e, 2) = rep.approximate.loss_curve[static_cast<std::size_t>(e)];
    }
    msda::write_csv(o.curves, curves);
  }
}

void setup_two_moons(CLI::App& app) {
  auto o = std::make_shared<TwoMoonsOpts>();
  CLI::App* cmd = app.add_subcommand(
      "two-moons", "Train logistic regression under both loss engines");
  cmd->add_option("--engine", o->engine, "Headline engine")
      ->required()
      ->check(CLI::IsMember({"original", "approximate"}));
  add_mask_args(cmd, o->mask, true);
  cmd->get_option("--method")->check(CLI::IsMember({"mixup", "bernoulli"}));
  cmd->add_option("--m", o->m, "Training points (even)")->required();
  cmd->add_option("--noise", o->noise, "Gaussian noise scale")->required();
  cmd->add_option("--epochs", o->epochs, "Training epochs")->required();
  cmd->add_option("--lr", o->lr, "Learning rate")->required();
  cmd->add_option("--batch", o->batch, "Mini-batch size (0 = full batch)");
  cmd->add_option("--heldout", o->heldout, "Held-out evaluation points");
  cmd->add_option("--gap-draws", o->gap_draws, "MC draws for the loss gap");
  cmd->add_option("--seed", o->seed, "RNG seed")->required();
  cmd->add_option("--report", o->report, "Output JSON path")->required();
  cmd->add_option("--curves", o->curves, "Optional per-epoch loss CSV");
  cmd->callback([o] { run_two_moons(*o); });
}

// ---- partialgrad ----

struct PartialGradOpts {
  int n = 0;
  int hidden = 0;
  std::uint64_t seed = 0;
  int offsets = 0;
  int images = 16;
  std::string out;
};

void run_partial_grad(const PartialGradOpts& o) {
  const msda::GridShape shape = msda::GridShape::square(o.n);
  const msda::RngStream base(o.seed);
  msda::RngStream net_rng = base.substream(0);
  const msda::TwoLayerNet net = msda::random_net(net_rng, shape.dim(), o.hidden);
  msda::RngStream image_rng = base.substream(1);
  std::vector<Eigen::VectorXd> images;
  images.reserve(static_cast<std::size_t>(o.images));
  for (int i = 0; i < o.images; ++i)
    images.push_back(msda::std_normal_vector(image_rng, shape.dim()));
  const auto map =
      msda::partial_grad_map(net, images, shape, msda::symmetric_offsets(o.offsets));
  msda::write_offset_map_csv(o.out, map);
}

void setup_partial_grad(CLI::App& app) {
  auto o = std::make_shared<PartialGradOpts>();
  CLI::App* cmd = app.add_subcommand(
      "partialgrad",
      "Normalized max partial-gradient products of a random net over offsets");
  cmd->add_option("--n", o->n, "Grid side")->required()->check(CLI::Range(2, 256));
  cmd->add_option("--hidden", o->hidden, "Hidden width")
      ->required()
      ->check(CLI::Range(1, 65536));
  cmd->add_option("--seed", o->seed, "RNG seed")->required();
  cmd->add_option("--offsets", o->offsets, "Offset window radius")
      ->required()
      ->check(CLI::Range(0, 255));
  cmd->add_option("--images", o->images, "Standard-normal input images")
      ->check(CLI::Range(1, 4096));
  cmd->add_option("--out", o->out, "Output CSV path")->required();
  cmd->callback([o] { run_partial_grad(*o); });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed-sample data augmentation laboratory"};
  app.require_subcommand(1);
  setup_gen_mask(app);
  setup_mix(app);
  setup_coeff(app);
  setup_heatmap(app);
  setup_synth(app);
  setup_two_moons(app);
  setup_partial_grad(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const msda::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
