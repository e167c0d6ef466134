#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "corrdepth/error.hpp"
#include "corrdepth/io.hpp"

using namespace corrdepth;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path p = fs::temp_directory_path() / "corrdepth_io_test";
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("depth text round-trips bit for bit") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> v(7 * 5);
  for (double& x : v) x = u(rng);
  v[0] = -1.0;
  v[1] = 1.0;
  v[2] = 0.1;
  v[3] = -0.0;
  const DepthField f = DepthField::from_values(7, 5, v);
  std::stringstream ss;
  io::write_depth_text(ss, f);
  CHECK(ss.str().rfind("7 5\n", 0) == 0);
  CHECK(io::read_depth_text(ss) == f);

  const std::string path = (temp_dir() / "d.txt").string();
  io::write_depth_text(path, f);
  CHECK(io::read_depth_text(path) == f);
}

TEST_CASE("depth text parse errors") {
  auto parse = [](const std::string& s) {
    std::istringstream in(s);
    return io::read_depth_text(in);
  };
  CHECK_THROWS_AS(parse(""), ParseError);
  CHECK_THROWS_AS(parse("2\n"), ParseError);
  CHECK_THROWS_AS(parse("2 2\n0 0\n"), ParseError);
  CHECK_THROWS_AS(parse("2 2\n0 0\n0\n"), ParseError);
  CHECK_THROWS_AS(parse("2 2\n0 x\n0 0\n"), ParseError);
  CHECK_THROWS_AS(parse("2 2\n0 0\n0 1.5\n"), InputError);
  CHECK_THROWS_AS(io::read_depth_text(std::string("/nonexistent/depth.txt")), InputError);
  try {
    (void)parse("2 2\n0 0\n0 0 0\n");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("mask text round-trips") {
  Mask m(4, 3);
  m.set(0, 0, true);
  m.set(3, 2, true);
  m.set(1, 1, true);
  const std::string path = (temp_dir() / "m.txt").string();
  io::write_mask_text(path, m);
  CHECK(io::read_mask_text(path) == m);
}

TEST_CASE("correspondence CSV") {
  CorrespondenceSet c;
  c.source = {{0, 1}, {2, 3}};
  c.target = {{0.125, -4.5}, {1e-7, 33.3}};
  std::stringstream ss;
  io::write_correspondences_csv(ss, c);
  CHECK(ss.str().rfind("xs,ys,xt,yt\n", 0) == 0);
  const CorrespondenceSet back = io::read_correspondences_csv(ss);
  REQUIRE(back.size() == 2);
  CHECK(back.target[1].x == 1e-7);
  CHECK(back.target[1].y == 33.3);

  auto parse = [](const std::string& s) {
    std::istringstream in(s);
    return io::read_correspondences_csv(in);
  };
  CHECK_THROWS_AS(parse("a,b,c,d\n1,2,3,4\n"), ParseError);
  CHECK_THROWS_AS(parse("xs,ys,xt,yt\n1,2,3\n"), ParseError);
  CHECK_THROWS_AS(parse("xs,ys,xt,yt\n1,2,3,4,5\n"), ParseError);
  CHECK_THROWS_AS(parse("xs,ys,xt,yt\n1,2,z,4\n"), ParseError);
  CHECK_THROWS_AS(parse("xs,ys,xt,yt\n"), InputError);
  CHECK(parse("xs,ys,xt,yt\r\n1,2,3,4\r\n").size() == 1);
}

TEST_CASE("pgm maps [-1, 1] onto 0..255") {
  const DepthField f = DepthField::from_values(3, 1, {-1.0, 0.0, 1.0});
  const std::string path = (temp_dir() / "d.pgm").string();
  io::write_pgm(path, f);
  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string header = "P5\n3 1\n255\n";
  REQUIRE(bytes.size() == header.size() + 3);
  CHECK(bytes.substr(0, header.size()) == header);
  CHECK(static_cast<unsigned char>(bytes[header.size()]) == 0);
  CHECK(static_cast<unsigned char>(bytes[header.size() + 1]) == 128);
  CHECK(static_cast<unsigned char>(bytes[header.size() + 2]) == 255);
}

TEST_CASE("number formatting is shortest round-trip") {
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(2.0) == "2");
  CHECK(std::stod(io::format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
