#include "cli/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "charax/core/errors.hpp"

namespace charax::cli {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write to " + path + " failed");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::string header(int d, int od, bool tidy) {
  std::string h = "t";
  if (d == 1) h += ",x";
  else for (int a = 0; a < d; ++a) h += ",x" + std::to_string(a);
  if (tidy) return h + ",component,value\n";
  for (int c = 0; c < od; ++c) h += ",u" + std::to_string(c);
  return h + "\n";
}

void rows(const std::vector<const GridFunction*>& parts, bool tidy, std::string& out) {
  bool first = true;
  for (const GridFunction* f : parts) {
    const SpaceGrid& g = f->grid();
    const auto d = static_cast<std::size_t>(g.dim());
    std::vector<double> x(d);
    for (std::size_t k = first ? 0 : 1; k < f->n_times(); ++k) {
      const std::string t = num(f->time_of(k));
      for (std::size_t i = 0; i < f->n_space(); ++i) {
        g.node(i, x);
        std::string xs;
        for (double v : x) xs += "," + num(v);
        if (tidy) {
          for (int c = 0; c < f->out_dim(); ++c) {
            out += t + xs + "," + std::to_string(c) + "," + num(f->at(k, i, c)) + "\n";
          }
        } else {
          out += t + xs;
          for (int c = 0; c < f->out_dim(); ++c) out += "," + num(f->at(k, i, c));
          out += "\n";
        }
      }
    }
    first = false;
  }
}

}  // namespace

std::string grid_function_csv(const GridFunction& f) { return segments_csv({&f}); }

std::string segments_csv(const std::vector<const GridFunction*>& parts) {
  if (parts.empty()) return "t\n";
  std::string out = header(parts[0]->grid().dim(), parts[0]->out_dim(), false);
  rows(parts, false, out);
  return out;
}

std::string tidy_csv(const std::vector<const GridFunction*>& parts) {
  if (parts.empty()) return "t,x,component,value\n";
  std::string out = header(parts[0]->grid().dim(), parts[0]->out_dim(), true);
  rows(parts, true, out);
  return out;
}

GridFunction read_grid_function_csv(const std::string& path, const SpaceGrid& grid) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  std::size_t cols = 1;
  for (char c : line) cols += c == ',';
  const auto d = static_cast<std::size_t>(grid.dim());
  if (cols <= 1 + d) throw IoError(path + ": header has no value columns");
  const std::size_t od = cols - 1 - d;
  std::vector<double> times, vals;
  std::vector<double> x(d);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) throw IoError(path + ": bad number \"" + cell + "\" on data row " + std::to_string(row + 1));
      cells.push_back(v);
    }
    if (cells.size() != cols) throw IoError(path + ": wrong column count on data row " + std::to_string(row + 1));
    const std::size_t i = row % grid.size();
    grid.node(i, x);
    for (std::size_t a = 0; a < d; ++a) {
      if (std::abs(cells[1 + a] - x[a]) > 1e-9 * std::max(1.0, std::abs(x[a]))) {
        throw IoError(path + ": data row " + std::to_string(row + 1) + " is not on the problem grid");
      }
    }
    if (i == 0) times.push_back(cells[0]);
    else if (cells[0] != times.back()) throw IoError(path + ": time changes inside a slice on data row " + std::to_string(row + 1));
    for (std::size_t c = 0; c < od; ++c) vals.push_back(cells[1 + d + c]);
    ++row;
  }
  if (row == 0 || row % grid.size() != 0) throw IoError(path + ": row count is not a multiple of the grid size");
  if (times.size() < 2 || times[0] != 0.0) throw IoError(path + ": need at least two time slices starting at t = 0");
  const TimeGrid tg(times.back(), static_cast<int>(times.size() - 1));
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (std::abs(times[k] - tg.node(static_cast<int>(k))) > 1e-9 * std::max(1.0, tg.t_max())) {
      throw IoError(path + ": time nodes are not uniform");
    }
  }
  GridFunction f(grid, tg, static_cast<int>(od));
  f.values() = std::move(vals);
  return f;
}

}  // namespace charax::cli
