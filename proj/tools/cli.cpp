#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "corrdepth/error.hpp"
#include "corrdepth/gradcheck.hpp"
#include "corrdepth/io.hpp"
#include "corrdepth/metrics.hpp"
#include "corrdepth/optimizer.hpp"
#include "corrdepth/synth.hpp"

namespace corrdepth::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// ---- manifest (de)serialisation ------------------------------------------

template <typename T>
T field_or(const json& j, const char* section, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("manifest: field '") + section + "." + key + "' has the wrong type");
  }
}

json tau_json(double tau) {
  return std::isfinite(tau) ? json(tau) : json("inf");
}

double tau_from(const json& j) {
  if (!j.contains("tau")) return RobustParams{}.tau;
  const json& t = j.at("tau");
  if (t.is_string() && t.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
  if (!t.is_number()) throw ParseError("manifest: field 'robust.tau' must be a number or \"inf\"");
  return t.get<double>();
}

RobustArgument parse_robust_argument(const std::string& s) {
  if (s == "distance") return RobustArgument::distance;
  if (s == "squared-distance") return RobustArgument::squared_distance;
  throw InputError("robust argument must be 'distance' or 'squared-distance', got '" + s + "'");
}

std::string to_string(RobustArgument a) {
  return a == RobustArgument::distance ? "distance" : "squared-distance";
}

LossScope parse_loss_scope(const std::string& s) {
  if (s == "all") return LossScope::all;
  if (s == "inliers-only") return LossScope::inliers_only;
  throw InputError("loss scope must be 'all' or 'inliers-only', got '" + s + "'");
}

std::string to_string(LossScope s) {
  return s == LossScope::all ? "all" : "inliers-only";
}

AlphaMode parse_alpha_mode(const std::string& s) {
  if (s == "shifted") return AlphaMode::shifted;
  if (s == "literal") return AlphaMode::literal;
  throw InputError("alpha mode must be 'shifted' or 'literal', got '" + s + "'");
}

json to_json(const RansacConfig& c) {
  return {{"threshold", c.threshold},
          {"max_iterations", c.max_iterations},
          {"min_sample_size", c.min_sample_size},
          {"seed", c.seed},
          {"refit_rounds", c.refit_rounds}};
}

RansacConfig ransac_from(const json& j) {
  RansacConfig c;
  c.threshold = field_or(j, "ransac", "threshold", c.threshold);
  c.max_iterations = field_or(j, "ransac", "max_iterations", c.max_iterations);
  c.min_sample_size = field_or(j, "ransac", "min_sample_size", c.min_sample_size);
  c.seed = field_or(j, "ransac", "seed", c.seed);
  c.refit_rounds = field_or(j, "ransac", "refit_rounds", c.refit_rounds);
  return c;
}

json to_json(const RobustParams& r) {
  return {{"tau", tau_json(r.tau)}, {"argument", to_string(r.argument)}};
}

RobustParams robust_from(const json& j) {
  RobustParams r;
  r.tau = tau_from(j);
  r.argument = parse_robust_argument(field_or(j, "robust", "argument", to_string(r.argument)));
  return r;
}

json to_json(const OptimConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"momentum", c.momentum},
          {"grad_clamp", c.grad_clamp},
          {"max_iters", c.max_iters},
          {"patience", c.patience},
          {"init_mode", std::string(to_string(c.init_mode))},
          {"seed", c.seed},
          {"smoothness", c.smoothness},
          {"batch_size", c.batch_size},
          {"zeros_jitter", c.zeros_jitter},
          {"init_scale", c.init_scale},
          {"min_delta", c.min_delta},
          {"loss_scope", to_string(c.grad.scope)}};
}

OptimConfig optim_from(const json& j) {
  OptimConfig c;
  c.learning_rate = field_or(j, "optim", "learning_rate", c.learning_rate);
  c.momentum = field_or(j, "optim", "momentum", c.momentum);
  c.grad_clamp = field_or(j, "optim", "grad_clamp", c.grad_clamp);
  c.max_iters = field_or(j, "optim", "max_iters", c.max_iters);
  c.patience = field_or(j, "optim", "patience", c.patience);
  c.init_mode = parse_init_mode(field_or(j, "optim", "init_mode", std::string(to_string(c.init_mode))));
  c.seed = field_or(j, "optim", "seed", c.seed);
  c.smoothness = field_or(j, "optim", "smoothness", c.smoothness);
  c.batch_size = field_or(j, "optim", "batch_size", c.batch_size);
  c.zeros_jitter = field_or(j, "optim", "zeros_jitter", c.zeros_jitter);
  c.init_scale = field_or(j, "optim", "init_scale", c.init_scale);
  c.min_delta = field_or(j, "optim", "min_delta", c.min_delta);
  c.grad.scope = parse_loss_scope(field_or(j, "optim", "loss_scope", to_string(c.grad.scope)));
  return c;
}

json to_json(const CorruptionSpec& c) {
  return {{"gaussian_sigma", c.gaussian_sigma},
          {"outlier_fraction", c.outlier_fraction},
          {"outlier_magnitude", c.outlier_magnitude},
          {"seed", c.seed}};
}

json read_json_file(const fs::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw InputError(std::string("cannot open ") + what + " '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(what) + " '" + path.string() + "': " + e.what());
  }
}

const json& section(const json& m, const char* key) {
  static const json empty = json::object();
  if (!m.contains(key)) return empty;
  if (!m.at(key).is_object()) throw ParseError(std::string("manifest: '") + key + "' must be an object");
  return m.at(key);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InputError("cannot create output directory '" + dir.string() + "'");
}

bool corruption_active(const CorruptionSpec& c) {
  return c.gaussian_sigma > 0.0 || c.outlier_fraction > 0.0;
}

// ---- gen -----------------------------------------------------------------

struct GenArgs {
  std::string scene;
  std::string out_dir;
  std::size_t n_points = 0;
  CorruptionSpec corruption;
};

int cmd_gen(const GenArgs& a, std::ostream& out) {
  const SceneSpec spec = load_scene_spec(a.scene);
  a.corruption.validate();
  const fs::path dir(a.out_dir);
  ensure_dir(dir);

  json m;
  m["scene_spec_path"] = a.scene;
  m["scene"] = json::parse(scene_spec_to_json(spec));
  m["n_points"] = a.n_points;
  m["corruption"] = to_json(a.corruption);
  m["ransac"] = to_json(RansacConfig{});
  m["robust"] = to_json(RobustParams{});
  m["optim"] = to_json(OptimConfig{});
  m["output_dir"] = a.out_dir;

  json views = json::array();
  for (std::size_t v = 0; v < spec.views.size(); ++v) {
    const RenderedView rv = render_view(spec, v);
    const std::string depth = "view_" + std::to_string(v) + "_depth.txt";
    const std::string mask = "view_" + std::to_string(v) + "_mask.txt";
    io::write_depth_text((dir / depth).string(), rv.depth);
    io::write_mask_text((dir / mask).string(), rv.mask);
    views.push_back({{"index", v}, {"depth", depth}, {"mask", mask}});
  }
  m["views"] = views;

  json pairs = json::array();
  std::uint64_t pair_no = 0;
  for (std::size_t s = 0; s < spec.views.size(); ++s) {
    for (std::size_t t = s + 1; t < spec.views.size(); ++t, ++pair_no) {
      const CorrespondenceSet clean = a.n_points == 0 ? generate_dense_correspondences(spec, s, t)
                                                      : generate_correspondences(spec, s, t, a.n_points);
      const std::string stem = "pair_" + std::to_string(s) + "_" + std::to_string(t);
      io::write_correspondences_csv((dir / (stem + ".csv")).string(), clean);
      json p = {{"src", s}, {"tgt", t}, {"clean", stem + ".csv"}};
      if (corruption_active(a.corruption)) {
        CorruptionSpec c = a.corruption;
        c.seed = a.corruption.seed + 0x9E3779B97F4A7C15ull * (pair_no + 1);
        io::write_correspondences_csv((dir / (stem + "_corrupted.csv")).string(), corrupt(clean, c));
        p["corrupted"] = stem + "_corrupted.csv";
      }
      pairs.push_back(p);
    }
  }
  m["pairs"] = pairs;
  io::write_text_file((dir / "manifest.json").string(), m.dump(2) + "\n");
  out << "wrote " << spec.views.size() << " views and " << pairs.size() << " pairs to " << a.out_dir << "\n";
  return kExitOk;
}

// ---- fit -----------------------------------------------------------------

struct FitArgs {
  std::string manifest;
  std::string out_dir;
  std::size_t source_view = 0;
  bool clean = false;
  double holdout_fraction = 0.0;

  std::optional<double> learning_rate, momentum, grad_clamp, smoothness, zeros_jitter, init_scale, min_delta;
  std::optional<std::size_t> max_iters, patience, batch_size;
  std::optional<std::string> init_mode, loss_scope;
  std::optional<std::uint64_t> seed;

  std::optional<double> threshold;
  std::optional<std::size_t> max_iterations, min_sample_size, refit_rounds;
  std::optional<std::uint64_t> ransac_seed;

  std::optional<double> tau;
  std::optional<std::string> robust_argument;
};

template <typename T>
void apply(T& dst, const std::optional<T>& v) {
  if (v) dst = *v;
}

// Moves a seeded ceil(fraction * N) subset of corr into the returned holdout.
CorrespondenceSet split_holdout(CorrespondenceSet& corr, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw InputError("holdout fraction must lie in (0, 1)");
  const auto n_hold = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(corr.size())));
  std::vector<std::size_t> idx(corr.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed ^ 0x5EEDu);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<std::uint8_t> held(corr.size(), 0);
  for (std::size_t i = 0; i < n_hold; ++i) held[idx[i]] = 1;
  CorrespondenceSet train, hold;
  for (std::size_t i = 0; i < corr.size(); ++i) {
    CorrespondenceSet& dst = held[i] ? hold : train;
    dst.source.push_back(corr.source[i]);
    dst.target.push_back(corr.target[i]);
  }
  corr = std::move(train);
  return hold;
}

int cmd_fit(const FitArgs& a, std::ostream& out) {
  const fs::path manifest_path(a.manifest);
  const json m = read_json_file(manifest_path, "manifest");
  if (!m.contains("scene") || !m.contains("pairs")) throw ParseError("manifest: missing 'scene' or 'pairs'");
  const SceneSpec spec = parse_scene_spec(m.at("scene").dump());
  const fs::path base = manifest_path.parent_path();

  RansacConfig rc = ransac_from(section(m, "ransac"));
  RobustParams rp = robust_from(section(m, "robust"));
  OptimConfig oc = optim_from(section(m, "optim"));

  apply(oc.learning_rate, a.learning_rate);
  apply(oc.momentum, a.momentum);
  apply(oc.grad_clamp, a.grad_clamp);
  apply(oc.smoothness, a.smoothness);
  apply(oc.zeros_jitter, a.zeros_jitter);
  apply(oc.init_scale, a.init_scale);
  apply(oc.min_delta, a.min_delta);
  apply(oc.max_iters, a.max_iters);
  apply(oc.patience, a.patience);
  apply(oc.batch_size, a.batch_size);
  apply(oc.seed, a.seed);
  if (a.init_mode) oc.init_mode = parse_init_mode(*a.init_mode);
  if (a.loss_scope) oc.grad.scope = parse_loss_scope(*a.loss_scope);
  apply(rc.threshold, a.threshold);
  apply(rc.max_iterations, a.max_iterations);
  apply(rc.min_sample_size, a.min_sample_size);
  apply(rc.refit_rounds, a.refit_rounds);
  apply(rc.seed, a.ransac_seed);
  apply(rp.tau, a.tau);
  if (a.robust_argument) rp.argument = parse_robust_argument(*a.robust_argument);

  if (a.source_view >= spec.views.size()) throw InputError("source view out of range");
  std::vector<WeightedPair> pairs;
  for (const json& p : m.at("pairs")) {
    if (field_or<std::size_t>(p, "pairs", "src", spec.views.size()) != a.source_view) continue;
    const std::string file = !a.clean && p.contains("corrupted") ? p.at("corrupted").get<std::string>()
                                                                : field_or<std::string>(p, "pairs", "clean", "");
    if (file.empty()) throw ParseError("manifest: pair entry without a correspondence file");
    pairs.push_back({io::read_correspondences_csv((base / file).string()), 1.0});
  }
  if (pairs.empty()) {
    throw InputError("manifest has no pairs with source view " + std::to_string(a.source_view));
  }

  std::optional<CorrespondenceSet> holdout;
  if (a.holdout_fraction > 0.0) holdout = split_holdout(pairs.front().corr, a.holdout_fraction, oc.seed);

  const FitResult res = fit_depth(pairs, spec.width, spec.height, oc, rc, rp, holdout ? &*holdout : nullptr);

  const fs::path dir = a.out_dir.empty() ? base / "fit" : fs::path(a.out_dir);
  ensure_dir(dir);
  io::write_depth_text((dir / "depth.txt").string(), res.depth);
  io::write_pgm((dir / "depth.pgm").string(), res.depth);
  io::write_text_file((dir / "fit_report.json").string(), fit_report_to_json(res.report));
  io::write_text_file((dir / "loss_trace.csv").string(), loss_trace_csv(res.report));

  out << "stop_reason=" << to_string(res.report.stop_reason) << " iterations=" << res.report.iterations_run
      << " final_loss=" << io::format_double(res.report.final_loss) << "\n";
  if (res.report.stop_reason == StopReason::error) {
    throw NumericalError("fit aborted: " + res.report.error_message);
  }
  return kExitOk;
}

// ---- eval ----------------------------------------------------------------

struct EvalArgs {
  std::string pred, gt, mask, out_json;
  std::string alpha_mode = "shifted";
  bool no_gt_offset = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const DepthField pred = io::read_depth_text(a.pred);
  const DepthField gt = io::read_depth_text(a.gt);
  const Mask mask = io::read_mask_text(a.mask);
  const Evaluation ev = evaluate(pred, gt, mask, parse_alpha_mode(a.alpha_mode), !a.no_gt_offset);
  const fs::path json_path = a.out_json.empty() ? fs::path(a.pred).parent_path() / "metrics.json" : fs::path(a.out_json);
  io::write_text_file(json_path.string(), metrics_to_json(ev));
  out << metrics_csv(ev.report);
  return kExitOk;
}

// ---- gradcheck -----------------------------------------------------------

struct GradcheckArgs {
  std::uint64_t seed = 0;
  std::vector<std::size_t> sizes;
  std::size_t instances = 50;
  double tolerance = 2e-3;
  double step = 1e-5;
  bool corrupt_analytic = false;
};

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  std::vector<std::size_t> ks = a.sizes;
  if (ks.empty()) {
    std::mt19937_64 rng(a.seed);
    std::uniform_int_distribution<std::size_t> pick(8, 200);
    ks.push_back(8);
    while (ks.size() < a.instances) ks.push_back(pick(rng));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const GradCheckResult r =
        check_gradient(make_grad_instance(a.seed + i, ks[i]), a.step, a.corrupt_analytic);
    worst = std::max(worst, r.max_rel_error);
    out << "instance " << i << " K=" << r.k << " max_rel_error=" << io::format_double(r.max_rel_error)
        << (r.max_rel_error <= a.tolerance ? " ok" : " FAIL") << "\n";
  }
  const bool pass = worst <= a.tolerance;
  out << (pass ? "PASS" : "FAIL") << " worst=" << io::format_double(worst)
      << " tolerance=" << io::format_double(a.tolerance) << "\n";
  return pass ? kExitOk : kExitNumerical;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Depth from correspondences through a differentiable affine camera fit"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Render a scene and write depth grids, masks and correspondences");
  g->add_option("scene", gen.scene, "SceneSpec JSON")->required();
  g->add_option("out_dir", gen.out_dir, "Output directory")->required();
  g->add_option("--n-points", gen.n_points, "Correspondences per pair (0 = every visible pixel)");
  g->add_option("--gaussian-sigma", gen.corruption.gaussian_sigma, "Target noise, pixels");
  g->add_option("--outlier-fraction", gen.corruption.outlier_fraction);
  g->add_option("--outlier-magnitude", gen.corruption.outlier_magnitude, "Outlier displacement, pixels");
  g->add_option("--corruption-seed", gen.corruption.seed);

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Recover the source-view depth grid from a generated manifest");
  f->add_option("manifest", fit.manifest)->required();
  f->add_option("--out", fit.out_dir, "Output directory (default: <manifest dir>/fit)");
  f->add_option("--source-view", fit.source_view);
  f->add_flag("--clean", fit.clean, "Use clean correspondences even when corrupted ones exist");
  f->add_option("--holdout-fraction", fit.holdout_fraction, "Share of the first pair held out for plateau detection");
  f->add_option("--learning-rate", fit.learning_rate);
  f->add_option("--momentum", fit.momentum);
  f->add_option("--grad-clamp", fit.grad_clamp);
  f->add_option("--max-iters", fit.max_iters);
  f->add_option("--patience", fit.patience);
  f->add_option("--init-mode", fit.init_mode, "zeros | uniform-random");
  f->add_option("--seed", fit.seed);
  f->add_option("--smoothness", fit.smoothness, "Laplacian weight lambda");
  f->add_option("--batch-size", fit.batch_size, "Correspondences per pair per iteration (0 = all)");
  f->add_option("--zeros-jitter", fit.zeros_jitter);
  f->add_option("--init-scale", fit.init_scale);
  f->add_option("--min-delta", fit.min_delta);
  f->add_option("--loss-scope", fit.loss_scope, "all | inliers-only");
  f->add_option("--threshold", fit.threshold, "RANSAC inlier threshold T, pixels");
  f->add_option("--max-iterations", fit.max_iterations, "RANSAC hypotheses");
  f->add_option("--min-sample-size", fit.min_sample_size);
  f->add_option("--refit-rounds", fit.refit_rounds);
  f->add_option("--ransac-seed", fit.ransac_seed);
  f->add_option("--tau", fit.tau, "Robust kernel threshold, pixels (inf disables)");
  f->add_option("--robust-argument", fit.robust_argument, "distance | squared-distance");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Align a prediction to ground truth and report depth metrics");
  e->add_option("pred", ev.pred)->required();
  e->add_option("gt", ev.gt)->required();
  e->add_option("mask", ev.mask)->required();
  e->add_option("--out", ev.out_json, "Metrics JSON (default: metrics.json beside pred)");
  e->add_option("--alpha-mode", ev.alpha_mode, "shifted | literal");
  e->add_flag("--no-gt-offset", ev.no_gt_offset, "Do not raise gt to a positive floor before scoring");

  GradcheckArgs gc;
  auto* c = app.add_subcommand("gradcheck", "Compare the analytic depth gradient with central differences");
  c->add_option("--seed", gc.seed);
  c->add_option("--sizes", gc.sizes, "Correspondence counts, one instance each")->delimiter(',');
  c->add_option("--instances", gc.instances)->check(CLI::PositiveNumber);
  c->add_option("--tolerance", gc.tolerance);
  c->add_option("--step", gc.step, "Finite-difference step h");
  c->add_flag("--corrupt-analytic", gc.corrupt_analytic, "Scale the analytic gradient by 1.01 (negative control)");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*g) return cmd_gen(gen, out);
    if (*f) return cmd_fit(fit, out);
    if (*e) return cmd_eval(ev, out);
    return cmd_gradcheck(gc, out);
  } catch (const InputError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitInput;
  } catch (const NumericalError& ex) {
    err << "numerical error: " << ex.what() << "\n";
    return kExitNumerical;
  } catch (const nlohmann::json::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitInput;
  } catch (const fs::filesystem_error& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitInput;
  } catch (const std::exception& ex) {
    err << "numerical error: " << ex.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace corrdepth::cli
