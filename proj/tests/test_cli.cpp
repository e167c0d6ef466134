#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "corrdepth/io.hpp"
#include "corrdepth/synth.hpp"
#include "oracles.hpp"

using namespace corrdepth;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "corrdepth_cli_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path write_scene(const fs::path& dir, const std::string& body) {
  const fs::path p = dir / "scene.json";
  std::ofstream(p) << body;
  return p;
}

const char* kThreeViews = R"({"surface_kind": "hemisphere", "resolution": [24, 24],
  "views": [{"azimuth": 0, "elevation": 0}, {"azimuth": 25, "elevation": 0}, {"azimuth": 0, "elevation": 25}],
  "seed": 3})";

std::size_t count_ext(const fs::path& dir, const std::string& suffix) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("gen writes views, pairs and a manifest") {
  const fs::path dir = fresh_dir("gen");
  const fs::path scene = write_scene(dir, kThreeViews);
  const Run r = run({"gen", scene.string(), (dir / "out").string()});
  CHECK(r.code == 0);
  CHECK(count_ext(dir / "out", "_depth.txt") == 3);
  CHECK(count_ext(dir / "out", "_mask.txt") == 3);
  CHECK(count_ext(dir / "out", ".csv") == 3);
  CHECK(fs::exists(dir / "out" / "manifest.json"));
  CHECK(fs::exists(dir / "out" / "pair_1_2.csv"));

  const Run c = run({"gen", scene.string(), (dir / "bad").string(), "--outlier-fraction", "0.2",
                     "--outlier-magnitude", "25", "--gaussian-sigma", "0.3"});
  CHECK(c.code == 0);
  CHECK(count_ext(dir / "bad", "_corrupted.csv") == 3);
}

TEST_CASE("gen rejects bad scenes with exit code 2") {
  const fs::path dir = fresh_dir("gen_bad");
  const fs::path one = write_scene(dir, R"({"surface_kind": "saddle", "resolution": [32, 32],
    "views": [{"azimuth": 0, "elevation": 0}]})");
  Run r = run({"gen", one.string(), (dir / "o").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("2 views") != std::string::npos);

  const fs::path broken = write_scene(dir, "{\n  \"surface_kind\": \"saddle\",\n  \"resolution\": [32 32]\n}");
  r = run({"gen", broken.string(), (dir / "o").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("line 3") != std::string::npos);

  r = run({"gen", (dir / "missing.json").string(), (dir / "o").string()});
  CHECK(r.code == 2);
  CHECK(run({}).code == 2);
  CHECK(run({"gen"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("gen is byte-identical on rerun") {
  const fs::path dir = fresh_dir("gen_rerun");
  const fs::path scene = write_scene(dir, kThreeViews);
  const std::vector<std::string> args = {"gen", scene.string(), (dir / "out").string(), "--gaussian-sigma", "0.5",
                                         "--outlier-fraction", "0.1", "--outlier-magnitude", "20"};
  REQUIRE(run(args).code == 0);
  std::map<std::string, std::string> first;
  for (const auto& e : fs::directory_iterator(dir / "out")) first[e.path().filename().string()] = slurp(e.path());
  fs::remove_all(dir / "out");
  REQUIRE(run(args).code == 0);
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir / "out")) {
    CHECK(first.at(e.path().filename().string()) == slurp(e.path()));
    ++n;
  }
  CHECK(n == first.size());
}

TEST_CASE("fit writes its artefacts, honours overrides and reruns identically") {
  const fs::path dir = fresh_dir("fit");
  const fs::path scene = write_scene(dir, kThreeViews);
  REQUIRE(run({"gen", scene.string(), (dir / "g").string()}).code == 0);
  const std::string manifest = (dir / "g" / "manifest.json").string();

  Run r = run({"fit", manifest, "--out", (dir / "a").string(), "--max-iters", "30", "--learning-rate", "0.002",
               "--tau", "4", "--threshold", "1.5"});
  CHECK(r.code == 0);
  CHECK(r.out.find("iterations=30") != std::string::npos);
  for (const char* f : {"depth.txt", "depth.pgm", "fit_report.json", "loss_trace.csv"}) CHECK(fs::exists(dir / "a" / f));
  CHECK(slurp(dir / "a" / "loss_trace.csv").rfind("iter,loss\n0,", 0) == 0);

  r = run({"fit", manifest, "--out", (dir / "b").string(), "--max-iters", "30", "--learning-rate", "0.002",
           "--tau", "4", "--threshold", "1.5"});
  for (const char* f : {"depth.txt", "depth.pgm", "fit_report.json", "loss_trace.csv"})
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));

  r = run({"fit", manifest, "--out", (dir / "c").string(), "--max-iters", "10", "--tau", "inf",
           "--holdout-fraction", "0.2", "--batch-size", "100", "--init-mode", "uniform-random"});
  CHECK(r.code == 0);
  CHECK(slurp(dir / "c" / "fit_report.json").find("holdout_trace") != std::string::npos);
}

TEST_CASE("fit exit codes") {
  const fs::path dir = fresh_dir("fit_codes");
  const fs::path scene = write_scene(dir, kThreeViews);
  REQUIRE(run({"gen", scene.string(), (dir / "g").string()}).code == 0);
  const std::string manifest = (dir / "g" / "manifest.json").string();

  Run r = run({"fit", manifest, "--out", (dir / "e").string(), "--zeros-jitter", "0"});
  CHECK(r.code == 3);
  CHECK(r.out.find("stop_reason=error") != std::string::npos);
  CHECK(fs::exists(dir / "e" / "fit_report.json"));

  CHECK(run({"fit", manifest, "--momentum", "1.0"}).code == 2);
  CHECK(run({"fit", manifest, "--learning-rate", "abc"}).code == 2);
  CHECK(run({"fit", manifest, "--init-mode", "ones"}).code == 2);
  CHECK(run({"fit", manifest, "--source-view", "2"}).code == 2);
  CHECK(run({"fit", (dir / "nope.json").string()}).code == 2);
  std::ofstream(dir / "junk.json") << "{\"scene\": 3}";
  CHECK(run({"fit", (dir / "junk.json").string()}).code == 2);
}

TEST_CASE("eval reports metrics and is gauge invariant") {
  const fs::path dir = fresh_dir("eval");
  const fs::path scene = write_scene(dir, kThreeViews);
  REQUIRE(run({"gen", scene.string(), (dir / "g").string()}).code == 0);
  const std::string gt = (dir / "g" / "view_0_depth.txt").string();
  const std::string mask = (dir / "g" / "view_0_mask.txt").string();

  Run r = run({"eval", gt, gt, mask, "--out", (dir / "id.json").string()});
  CHECK(r.code == 0);
  CHECK(r.out == "l1,rmse,rel_l1,sq_rel\n0,0,0,0\n");
  CHECK(slurp(dir / "id.json").find("\"l1\": 0.0") != std::string::npos);

  const DepthField g = io::read_depth_text(gt);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  std::vector<double> noisy(g.values().begin(), g.values().end());
  for (double& v : noisy) v = std::clamp(0.8 * v + u(rng), -1.0, 1.0);
  std::vector<double> shifted = noisy;
  for (double& v : shifted) v = 0.5 * v + 0.3;
  io::write_depth_text((dir / "p.txt").string(), DepthField::from_values(24, 24, noisy));
  io::write_depth_text((dir / "q.txt").string(), DepthField::from_values(24, 24, shifted));
  const Run a = run({"eval", (dir / "p.txt").string(), gt, mask});
  const Run b = run({"eval", (dir / "q.txt").string(), gt, mask});
  CHECK(a.code == 0);
  CHECK(fs::exists(dir / "metrics.json"));

  auto parse = [](const std::string& s) {
    std::istringstream in(s.substr(s.find('\n') + 1));
    std::vector<double> v;
    std::string tok;
    while (std::getline(in, tok, ',')) v.push_back(std::stod(tok));
    return v;
  };
  const std::vector<double> ma = parse(a.out), mb = parse(b.out);
  REQUIRE(ma.size() == 4);
  for (int k = 0; k < 4; ++k) CHECK(std::fabs(ma[k] - mb[k]) < 1e-8);

  // Straight-line oracle on the same offset and alignment.
  const Mask m = io::read_mask_text(mask);
  std::vector<double> gv(g.values().begin(), g.values().end());
  std::vector<double> pm, gm;
  double lo = 1e9;
  for (std::size_t k = 0; k < gv.size(); ++k)
    if (m[k]) lo = std::min(lo, gv[k]);
  for (double& v : gv) v += 0.1 - lo;
  for (std::size_t k = 0; k < gv.size(); ++k)
    if (m[k]) {
      pm.push_back(noisy[k]);
      gm.push_back(gv[k]);
    }
  const double b1 = oracle::median(pm), b2 = oracle::median(gm);
  double num = 0, den = 0;
  for (std::size_t k = 0; k < pm.size(); ++k) {
    num += (pm[k] - b1) * (gm[k] - b2);
    den += (pm[k] - b1) * (pm[k] - b1);
  }
  std::vector<double> al(pm.size());
  for (std::size_t k = 0; k < pm.size(); ++k) al[k] = num / den * (pm[k] - b1) + b2;
  const oracle::Metrics o = oracle::metrics(al, gm, std::vector<std::uint8_t>(pm.size(), 1));
  CHECK(ma[0] == doctest::Approx(o.l1).epsilon(1e-10));
  CHECK(ma[1] == doctest::Approx(o.rmse).epsilon(1e-10));
  CHECK(ma[2] == doctest::Approx(o.rel_l1).epsilon(1e-10));
  CHECK(ma[3] == doctest::Approx(o.sq_rel).epsilon(1e-10));

  CHECK(run({"eval", gt, gt, (dir / "nope").string()}).code == 2);
  CHECK(run({"eval", gt, gt, mask, "--no-gt-offset"}).code == 2);
}

TEST_CASE("gradcheck passes by default and fails its negative control") {
  Run r = run({"gradcheck", "--instances", "6"});
  CHECK(r.code == 0);
  CHECK(r.out.find("instance 0 K=8 ") != std::string::npos);
  CHECK(r.out.find("PASS") != std::string::npos);
  r = run({"gradcheck", "--sizes", "8,40", "--corrupt-analytic"});
  CHECK(r.code == 3);
  CHECK(r.out.find("FAIL") != std::string::npos);
  CHECK(run({"gradcheck", "--sizes", "4"}).code == 2);
}
