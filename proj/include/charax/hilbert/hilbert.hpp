#pragma once
// Master equation on a finite-dimensional truncation R^n of the Hilbert
// space: deterministic characteristics and the common-noise Feynman-Kac
// representation with dX^i = B^i ds + sqrt(2 lambda_i) dW^i.

#include <Eigen/Dense>
#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "charax/core/fields.hpp"
#include "charax/core/grid_function.hpp"
#include "charax/core/paths.hpp"
#include "charax/core/picard.hpp"
#include "charax/finite/transport.hpp"

namespace charax::hilbert {

struct HilbertProblem {
  int n = 1;
  std::shared_ptr<const StateField> F;
  std::shared_ptr<const StateField> G;
  std::vector<double> lambdas;  ///< one per coordinate, >= 0
  std::shared_ptr<const SpatialField> U0;
  SpaceGrid solve_box = SpaceGrid::box1d(-1.0, 1.0, 41);

  void check() const;
  double lambda_sum() const;
};

using charax::PathBatch;

struct FKResult {
  GridFunction mean;
  GridFunction stderr_;  ///< per-node standard error of the mean
  long exits = 0;        ///< paths that ended a step outside the box
};

struct FKOptions {
  int em_sub = 4;  ///< Euler-Maruyama steps per dt
};

/// Deterministic Psi on the box; characteristics leaving the box keep
/// going and U is extrapolated linearly (counted in *exits when given).
GridFunction psi_deterministic(const TimeGrid& time, const SpaceGrid& grid, const finite::TransportFields& fields,
                               const SpatialField& u0, int n_sub = 4, std::atomic<long>* exits = nullptr);

/// Monte Carlo Psi: mean over paths of int_0^t A(t-s, X_s) ds + U0(X_t) with
/// dX = B(t-s, X) ds + sqrt(2 lambda) dW, Euler-Maruyama step dt/em_sub.
FKResult psi_feynman_kac(const TimeGrid& time, const SpaceGrid& grid, const finite::TransportFields& fields,
                         const SpatialField& u0, const std::vector<double>& lambdas, const PathBatch& batch,
                         const FKOptions& opt = {});

/// Paths from x0 over [0, t] (row-major [step][path][coord], step 0 = x0).
std::vector<double> simulate_paths(const finite::TransportFields& fields, double t, std::span<const double> x0,
                                   const std::vector<double>& lambdas, const PathBatch& batch, int n_steps);

struct HilbertSolution {
  GridFunction U;
  std::optional<GridFunction> stderr_;
  PicardReport report;
  long exits = 0;
};

/// Picard iteration of U -> Psi(T, G(., U), -F(., U), U0), noise-free or
/// with a frozen PathBatch.
HilbertSolution picard_solve_hilbert(const HilbertProblem& problem, double T, const PicardConfig& cfg, bool noise);

ContinuationResult continue_to_blowup_hilbert(const HilbertProblem& problem, double t_horizon,
                                              const PicardConfig& cfg, bool noise);

/// lip_x, sup norm and (box containing the origin) growth norm of slice k.
LipEstimate estimate_slice(const GridFunction& u, std::size_t k);

/// A0 (I + t A0)^{-1} for symmetric A0; BlowUpReached once 1 + t a_i <= 0
/// for some eigenvalue a_i.
Eigen::MatrixXd riccati_reference(const Eigen::MatrixXd& A0, double t);

/// Time of the first singularity of the Riccati flow (+inf if A0 >= 0).
double riccati_blowup_time(const Eigen::MatrixXd& A0);

}  // namespace charax::hilbert
