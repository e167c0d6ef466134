#include "corrdepth/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "corrdepth/error.hpp"

namespace corrdepth::io {

namespace {

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  return in;
}

double parse_double(const std::string& tok, const std::string& where) {
  double v = 0.0;
  const char* end = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ParseError(where + ": bad number '" + tok + "'");
  return v;
}

struct Grid {
  std::size_t w = 0, h = 0;
  std::vector<double> values;
};

Grid read_grid(std::istream& in, const char* what) {
  Grid g;
  std::string line;
  if (!std::getline(in, line)) throw ParseError(std::string(what) + ": empty file");
  std::istringstream head(line);
  long long w = 0, h = 0;
  if (!(head >> w >> h) || w <= 0 || h <= 0) throw ParseError(std::string(what) + ": first line must be 'W H'");
  g.w = static_cast<std::size_t>(w);
  g.h = static_cast<std::size_t>(h);
  g.values.reserve(g.w * g.h);
  for (std::size_t row = 0; row < g.h; ++row) {
    if (!std::getline(in, line)) {
      throw ParseError(std::string(what) + ": expected " + std::to_string(g.h) + " rows, got " + std::to_string(row));
    }
    std::istringstream ls(line);
    std::string tok;
    std::size_t cols = 0;
    while (ls >> tok) {
      g.values.push_back(parse_double(tok, std::string(what) + " line " + std::to_string(row + 2)));
      ++cols;
    }
    if (cols != g.w) {
      throw ParseError(std::string(what) + " line " + std::to_string(row + 2) + ": expected " +
                       std::to_string(g.w) + " values, got " + std::to_string(cols));
    }
  }
  return g;
}

template <typename Get>
void write_grid(std::ostream& out, std::size_t w, std::size_t h, Get get) {
  out << w << ' ' << h << '\n';
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (x) out << ' ';
      out << get(x, y);
    }
    out << '\n';
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw InputError("cannot format number");
  return std::string(buf, ptr);
}

void write_depth_text(std::ostream& out, const DepthField& field) {
  write_grid(out, field.width(), field.height(),
             [&](std::size_t x, std::size_t y) { return format_double(field.values()[field.index(x, y)]); });
}

void write_depth_text(const std::string& path, const DepthField& field) {
  auto out = open_out(path);
  write_depth_text(out, field);
}

DepthField read_depth_text(std::istream& in) {
  Grid g = read_grid(in, "depth grid");
  return DepthField::from_values(g.w, g.h, std::move(g.values));
}

DepthField read_depth_text(const std::string& path) {
  auto in = open_in(path);
  return read_depth_text(in);
}

void write_mask_text(const std::string& path, const Mask& mask) {
  auto out = open_out(path);
  write_grid(out, mask.width(), mask.height(),
             [&](std::size_t x, std::size_t y) { return mask.at(x, y) ? 1 : 0; });
}

Mask read_mask_text(const std::string& path) {
  auto in = open_in(path);
  const Grid g = read_grid(in, "mask grid");
  Mask m(g.w, g.h);
  for (std::size_t k = 0; k < g.values.size(); ++k) m.set(k % g.w, k / g.w, g.values[k] != 0.0);
  return m;
}

void write_pgm(const std::string& path, const DepthField& field) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out << "P5\n" << field.width() << ' ' << field.height() << "\n255\n";
  std::vector<unsigned char> bytes(field.size());
  for (std::size_t k = 0; k < field.size(); ++k) {
    const long v = std::lround((field.values()[k] + 1.0) * 127.5);
    bytes[k] = static_cast<unsigned char>(std::clamp<long>(v, 0, 255));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_correspondences_csv(std::ostream& out, const CorrespondenceSet& corr) {
  out << "xs,ys,xt,yt\n";
  for (std::size_t i = 0; i < corr.size(); ++i) {
    out << format_double(corr.source[i].x) << ',' << format_double(corr.source[i].y) << ','
        << format_double(corr.target[i].x) << ',' << format_double(corr.target[i].y) << '\n';
  }
}

void write_correspondences_csv(const std::string& path, const CorrespondenceSet& corr) {
  auto out = open_out(path);
  write_correspondences_csv(out, corr);
}

CorrespondenceSet read_correspondences_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("correspondence CSV: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "xs,ys,xt,yt") throw ParseError("correspondence CSV: header must be 'xs,ys,xt,yt'");
  CorrespondenceSet corr;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    double v[4];
    int k = 0;
    while (std::getline(ls, tok, ',')) {
      if (k == 4) throw ParseError("correspondence CSV line " + std::to_string(lineno) + ": too many columns");
      v[k++] = parse_double(tok, "correspondence CSV line " + std::to_string(lineno));
    }
    if (k != 4) throw ParseError("correspondence CSV line " + std::to_string(lineno) + ": expected 4 columns");
    corr.source.push_back({v[0], v[1]});
    corr.target.push_back({v[2], v[3]});
  }
  corr.validate();
  return corr;
}

CorrespondenceSet read_correspondences_csv(const std::string& path) {
  auto in = open_in(path);
  return read_correspondences_csv(in);
}

void write_text_file(const std::string& path, const std::string& contents) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out << contents;
}

}  // namespace corrdepth::io
