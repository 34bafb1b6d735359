#pragma once

#include <string>
#include <vector>

#include "charax/core/grid_function.hpp"

namespace charax::cli {

/// %.17g, so values round-trip exactly.
std::string num(double v);

/// Writes `text` to path; IoError when the file cannot be written.
void write_file(const std::string& path, const std::string& text);
std::string read_file(const std::string& path);

/// Header t,x0..,u0..; one row per (time node, space node).
std::string grid_function_csv(const GridFunction& f);
/// Same rows for a list of slices on consecutive segments (duplicate
/// segment start rows dropped).
std::string segments_csv(const std::vector<const GridFunction*>& parts);
/// Tidy form t,x..,component,value.
std::string tidy_csv(const std::vector<const GridFunction*>& parts);

/// Reads a CSV written by grid_function_csv on `grid`; node coordinates
/// must match (rel. 1e-9), time nodes must be uniform.
GridFunction read_grid_function_csv(const std::string& path, const SpaceGrid& grid);

}  // namespace charax::cli
