#pragma once
// Spec blocks -> solver objects. Inputs are assumed schema-valid; shape
// problems the schema cannot express (array lengths) raise SpecError.

#include <cstdint>
#include <optional>
#include <string>

#include "charax/core/picard.hpp"
#include "charax/finite/solver.hpp"
#include "charax/hilbert/hilbert.hpp"
#include "charax/measure/measure.hpp"
#include "json.hpp"

namespace charax::cli {

SpaceGrid build_domain(const nlohmann::json& j, const std::string& path);
std::shared_ptr<const StateField> build_state_field(const nlohmann::json& j, int dim, const std::string& path);
std::shared_ptr<const SpatialField> build_spatial_field(const nlohmann::json& j, int dim, const std::string& path);

finite::FiniteProblem build_finite(const nlohmann::json& problem);
hilbert::HilbertProblem build_hilbert(const nlohmann::json& problem);
/// Anchors are generated here; anchor seed defaults to `seed`.
measure::MeasureProblem build_measure(const nlohmann::json& problem, std::uint64_t seed);

/// PicardConfig from the solver block; seed already resolved by the caller.
PicardConfig build_config(const nlohmann::json& solver, std::optional<std::uint64_t> seed);

/// True when the spec draws random numbers (needs a seed).
bool needs_seed(const nlohmann::json& spec);

}  // namespace charax::cli
