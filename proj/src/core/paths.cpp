#include "charax/core/paths.hpp"

#include <cmath>
#include <random>

#include "charax/core/errors.hpp"

namespace charax {

PathBatch::PathBatch(int n_paths, int n_steps, int dim, double h, std::uint64_t seed)
    : n_paths_(n_paths), n_steps_(n_steps), dim_(dim), h_(h), seed_(seed) {
  if (n_paths < 1 || n_steps < 0 || dim < 1 || !(h > 0.0)) throw PreconditionError("PathBatch: bad shape");
  inc_.resize(static_cast<std::size_t>(n_paths) * n_steps * dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double sq = std::sqrt(h);
  for (auto& v : inc_) v = sq * gauss(rng);
}

}  // namespace charax
