#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "charax/core/fields.hpp"
#include "charax/core/grid_function.hpp"
#include "charax/core/picard.hpp"
#include "charax/finite/transport.hpp"

namespace charax::finite {

/// dU/dt + <F(x,U), grad> U = G(x,U) - lambda (U - DS^T U(t, S x)), U(0) = U0.
struct FiniteProblem {
  SpaceGrid domain = SpaceGrid::torus1d(1.0, 64);
  std::shared_ptr<const StateField> F;
  std::shared_ptr<const StateField> G;
  double lambda = 0.0;
  std::shared_ptr<const PointMap> S;  ///< null means the identity
  std::shared_ptr<const SpatialField> U0;

  int dim() const { return domain.dim(); }
  /// Throws PreconditionError on missing or mis-shaped coefficients.
  void check() const;
};

struct DomainReport {
  bool ok = true;
  std::size_t n_checked = 0;
  std::size_t n_violations = 0;
  std::vector<std::string> violations;  ///< first few, human readable
};

/// Checks <eta(x), F(x,p)> >= -1e-10 at sampled boundary points and
/// momenta |p| <= p_radius, and S(x) in the domain at sampled points.
DomainReport validate_domain(const FiniteProblem& problem, double p_radius, int n_boundary, int n_p,
                             std::uint64_t seed = 1);

/// Drift -F(y, U) and source G(y, U) - lambda (U - DS^T U(S y)) for Psi.
class CharacteristicFields final : public TransportFields {
 public:
  CharacteristicFields(const GridFunction& u, std::shared_ptr<const StateField> F,
                       std::shared_ptr<const StateField> G, double lambda, std::shared_ptr<const PointMap> S,
                       OutOfDomain policy);
  int dim() const override { return u_.grid().dim(); }
  int out_dim() const override { return u_.out_dim(); }
  bool has_source() const override { return has_source_; }
  void drift(double t, std::span<const double> x, std::span<double> b) const override;
  void drift_and_source(double t, std::span<const double> x, std::span<double> b,
                        std::span<double> a) const override;

 private:
  const GridFunction& u_;
  std::shared_ptr<const StateField> F_, G_;
  double lambda_;
  std::shared_ptr<const PointMap> S_;
  OutOfDomain policy_;
  bool has_source_;
};

/// Phi(U) = Psi(T, G(.,U) - lambda (U - DS^T U o S), -F(.,U), U0) on U's grids.
GridFunction phi_map(const GridFunction& U, const FiniteProblem& problem, int n_sub = 4);

/// Picard iteration from the time-constant extension of U0 on [0, T].
std::pair<GridFunction, PicardReport> picard_solve(const FiniteProblem& problem, double T, const PicardConfig& cfg);

ContinuationResult continue_to_blowup(const FiniteProblem& problem, double t_horizon, const PicardConfig& cfg);

/// lip_x and sup norm of slice k.
LipEstimate estimate_slice(const GridFunction& u, std::size_t k);

}  // namespace charax::finite
