#pragma once

#include <cstdint>
#include <vector>

namespace charax {

/// Gaussian increments dW ~ N(0, h), drawn once and reused (common random
/// numbers). Laid out [step][coord][path] so that one coordinate of one
/// step is contiguous over paths.
class PathBatch {
 public:
  PathBatch(int n_paths, int n_steps, int dim, double h, std::uint64_t seed);

  int n_paths() const { return n_paths_; }
  int n_steps() const { return n_steps_; }
  int dim() const { return dim_; }
  double h() const { return h_; }
  std::uint64_t seed() const { return seed_; }
  const double* increments(int step, int coord) const {
    return inc_.data() + (static_cast<std::size_t>(step) * dim_ + coord) * n_paths_;
  }

 private:
  int n_paths_, n_steps_, dim_;
  double h_;
  std::uint64_t seed_;
  std::vector<double> inc_;
};

}  // namespace charax
