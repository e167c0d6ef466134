#pragma once

#include <iosfwd>
#include <string>

#include "corrdepth/geometry.hpp"

namespace corrdepth::io {

// Depth grid text format: a "W H" line, then H rows of W space-separated
// decimals, top row first. Values use the shortest round-trip representation.
void write_depth_text(std::ostream& out, const DepthField& field);
void write_depth_text(const std::string& path, const DepthField& field);
DepthField read_depth_text(std::istream& in);
DepthField read_depth_text(const std::string& path);

// Masks share the grid layout with 0/1 entries; any nonzero value reads as set.
void write_mask_text(const std::string& path, const Mask& mask);
Mask read_mask_text(const std::string& path);

/// 8-bit binary PGM, [-1, 1] mapped linearly onto [0, 255].
void write_pgm(const std::string& path, const DepthField& field);

// Correspondence CSV: header "xs,ys,xt,yt", one pair per row.
void write_correspondences_csv(std::ostream& out, const CorrespondenceSet& corr);
void write_correspondences_csv(const std::string& path, const CorrespondenceSet& corr);
CorrespondenceSet read_correspondences_csv(std::istream& in);
CorrespondenceSet read_correspondences_csv(const std::string& path);

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& contents);

}  // namespace corrdepth::io
