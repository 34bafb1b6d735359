#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "charax/core/grid.hpp"
#include "charax/core/grid_function.hpp"
#include "charax/core/paths.hpp"
#include "charax/core/picard.hpp"

namespace charax::measure {

/// Probability density on a uniform 1-d torus grid, piecewise constant on
/// cells centred at the grid nodes.
class MeasureState {
 public:
  MeasureState(SpaceGrid grid, std::vector<double> density, bool normalize = true);

  static MeasureState uniform(const SpaceGrid& grid);
  /// All mass in the cell containing x.
  static MeasureState spike(const SpaceGrid& grid, double x);
  /// Periodized Gaussian sampled at the nodes, then normalized.
  static MeasureState wrapped_gaussian(const SpaceGrid& grid, double center, double width);
  /// (1 - w) a + w b.
  static MeasureState mixture(const MeasureState& a, const MeasureState& b, double w);

  const SpaceGrid& grid() const { return grid_; }
  std::size_t size() const { return density_.size(); }
  double dx() const { return grid_.spacing(0); }
  double period() const { return grid_.period(0); }
  std::span<const double> density() const { return density_; }
  std::vector<double>& raw() { return density_; }
  double operator[](std::size_t i) const { return density_[i]; }

  double mass() const;
  void normalize();
  /// First moment of the density on [lo, lo + period).
  double mean() const;

 private:
  SpaceGrid grid_;
  std::vector<double> density_;
};

/// Exact 1-Wasserstein distance on the circle.
double d1_distance(const MeasureState& m1, const MeasureState& m2);

/// Translation by `shift` (mass moved to x + shift), linear splatting.
MeasureState translate(const MeasureState& m, double shift);

/// (psi o phi)_# m with linear splatting of each cell's mass onto the grid
/// of m. phi is a 1-d GridFunction sampled at the cell centres.
MeasureState pushforward(const std::function<double(double)>& psi, const GridFunction& phi, const MeasureState& m);

/// Drift at the given points for measure m at time s.
using FPDrift = std::function<void(double s, std::span<const double> x, const MeasureState& m, std::span<double> out)>;

struct FPStats {
  int substeps = 0;
  double max_mass_drift = 0.0;  ///< |mass after - mass before| per step, before renormalization
  double min_density = 0.0;
};

/// dm/ds = sigma' m_xx - (F m)_x on [0, t]: upwind finite volumes with
/// explicit diffusion, auto-substepped for stability. Returns the states at
/// s = j t / n_steps, j = 0..n_steps.
std::vector<MeasureState> fokker_planck_solve(const FPDrift& drift, double sigma_prime, const MeasureState& m0,
                                              double t, int n_steps, FPStats* stats = nullptr);

/// f(x, p, m) evaluated pointwise on batches.
using PointFn =
    std::function<void(std::span<const double> x, std::span<const double> p, const MeasureState& m, std::span<double> out)>;
/// g(x, m) on batches.
using InitFn = std::function<void(std::span<const double> x, const MeasureState& m, std::span<double> out)>;
/// f(t, x, m) on batches.
using MeasureField =
    std::function<void(double t, std::span<const double> x, const MeasureState& m, std::span<double> out)>;

struct MeasureProblem {
  SpaceGrid grid = SpaceGrid::torus1d(1.0, 128);
  PointFn H, DpH, DxH, B;
  InitFn U0, gradU0;
  double sigma = 0.05;
  double sigma_prime = 0.05;
  double sigma_0 = 0.0;
  std::vector<MeasureState> anchors;

  /// Throws PreconditionError on missing callbacks, bad constants, anchors
  /// on another grid, or derivative callbacks inconsistent with H.
  void check() const;
};

/// Largest relative mismatch between DpH/DxH and centred differences of H at
/// n random points (x uniform, |p| <= 2, m drawn from the anchors).
double derivative_mismatch(const MeasureProblem& problem, int n = 100, std::uint64_t seed = 7);

/// Uniform first, then alternating wrapped Gaussians (varied centre and
/// width) and two-bump mixtures.
std::vector<MeasureState> generate_anchors(const SpaceGrid& grid, int n, std::uint64_t seed = 11);

/// W on time grid x space grid x anchor index, blended in m by inverse-d1^2
/// weights (exact anchor when d1 < 1e-14).
class WField {
 public:
  WField(SpaceGrid grid, TimeGrid time, std::vector<MeasureState> anchors);

  const SpaceGrid& grid() const { return grid_; }
  const TimeGrid& time() const { return time_; }
  const std::vector<MeasureState>& anchors() const { return anchors_; }
  std::size_t n_anchors() const { return anchors_.size(); }
  std::size_t n_space() const { return grid_.size(); }
  std::size_t n_times() const { return time_.n_nodes(); }

  std::span<double> slice(std::size_t k, std::size_t a) { return {values_.data() + offset(k, a), n_space()}; }
  std::span<const double> slice(std::size_t k, std::size_t a) const {
    return {values_.data() + offset(k, a), n_space()};
  }
  std::span<double> se_slice(std::size_t k, std::size_t a) { return {se_.data() + offset(k, a), n_space()}; }
  std::span<const double> se_slice(std::size_t k, std::size_t a) const {
    return {se_.data() + offset(k, a), n_space()};
  }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& stderrs() const { return se_; }

  double anchor_distance(std::size_t a, std::size_t b) const { return d_[a * n_anchors() + b]; }
  std::vector<double> weights(const MeasureState& m) const;

  void eval(double t, std::span<const double> x, const std::vector<double>& w, std::span<double> out) const;
  void eval(double t, std::span<const double> x, const MeasureState& m, std::span<double> out) const;

  bool all_finite() const;
  double lip_x() const;
  double lip_x_slice(std::size_t k) const;
  /// max over anchor pairs of sup_x |W_a - W_b| / d1(a, b).
  double lip_m() const;
  double lip_m_slice(std::size_t k) const;
  /// max over k, x, anchor pairs of |W_a - W_b|.
  double anchor_deviation() const;
  double max_stderr() const;

 private:
  std::size_t offset(std::size_t k, std::size_t a) const { return (k * n_anchors() + a) * n_space(); }

  SpaceGrid grid_;
  TimeGrid time_;
  std::vector<MeasureState> anchors_;
  std::vector<double> d_;
  std::vector<double> values_, se_;
};

double sup_diff(const WField& a, const WField& b);

/// Coefficients of the linear transport step: particle drift b, source A,
/// measure drift F, all functions of (t, x, m). Null members are zero.
struct GradData {
  MeasureField b, A, F;
  InitFn W0;
};

struct PsiOptions {
  int em_sub = 4;  ///< Euler-Maruyama steps per time-grid step
};

/// Psi(t, x, m*) = E[ int_0^t A(t-s, X_s, m_s) ds + W0(X_t, m_t) ],
/// dX = b(t-s, X, m_s) ds + sqrt(2 sigma) dW, X_0 = x, and m_s the
/// Fokker-Planck path from m* with drift F(t-s, ., m_s) and diffusion
/// sigma'. batch.h must equal time.dt() / em_sub; batch.dim() == 1.
WField psi_grad(const TimeGrid& time, const SpaceGrid& grid, const GradData& data, double sigma, double sigma_prime,
                const PathBatch& batch, const std::vector<MeasureState>& anchors, const PsiOptions& opt = {});

/// As psi_grad with a common Brownian motion W' of intensity sigma_0: one
/// Fokker-Planck solve per (t, anchor, common path) in the frame moving with
/// sqrt(2 sigma_0) W', translated back; X gets both noises. Standard errors
/// come from the spread of common-path group means.
WField psi_grad_common_noise(const TimeGrid& time, const SpaceGrid& grid, const GradData& data, double sigma,
                             double sigma_prime, double sigma_0, const PathBatch& batch, const PathBatch& common,
                             const std::vector<MeasureState>& anchors, const PsiOptions& opt = {});

/// The measure path used for one common path: m_s = shift_s # mt_s with
/// mt solving the Fokker-Planck equation in the moving frame, returned at
/// s = j h, j = 0..n_steps. `path` holds sqrt(2 sigma_0) W'_{jh}.
std::vector<MeasureState> shifted_fp_path(const FPDrift& drift, double sigma_prime, const MeasureState& m0, double h,
                                          std::span<const double> path);

struct MeasureOptions {
  int common_paths = 16;  ///< outer paths when sigma_0 > 0
};

struct GradSolution {
  WField W;
  PicardReport report;
  double lip_x = 0.0, lip_m = 0.0;
  double lip_sum() const { return lip_x + lip_m; }
  double lip_max() const { return lip_x > lip_m ? lip_x : lip_m; }
};

/// Picard iteration W <- Psi(b = -D_pH(W), F = -B(W), A = -D_xH(W), W0 =
/// grad U0) on [0, T] with paths frozen for the run. The size tracked
/// against cfg.lip_cap is lip_x + lip_m.
GradSolution picard_solve_grad(const MeasureProblem& problem, double T, const PicardConfig& cfg,
                               const MeasureOptions& mopt = {});

/// U(t, x, m*) = E[ int_0^t -H(X_s, W, m_s) ds + U0(X_t, m_t) ] with driftless
/// X and m driven by -B(., W, .), on W's grids and anchors.
WField reconstruct_value(const WField& W, const MeasureProblem& problem, const PicardConfig& cfg);

/// Built-in coefficients.
namespace builtin {
/// H = p^2/2 + kappa cos(2 pi x).
void quadratic(MeasureProblem& p, double kappa = 0.0);
/// H = p * mean(m).
void nonlocal_mean(MeasureProblem& p);
/// H = 0.
void zero_hamiltonian(MeasureProblem& p);
/// B = p, B = mean(m), B = 0.
void b_momentum(MeasureProblem& p);
void b_mean(MeasureProblem& p);
void b_zero(MeasureProblem& p);
/// U0 = amp/(2 pi) sin(2 pi x), so grad U0 = amp cos(2 pi x).
void u0_sine(MeasureProblem& p, double amp);
/// U0 = amp/(2 pi) sin(2 pi (x - mean(m))).
void u0_mean_coupled(MeasureProblem& p, double amp);
}  // namespace builtin

}  // namespace charax::measure
