#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace charax::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_certificate_failed = 1,
  exit_blowup = 2,
  exit_not_converged = 3,
  exit_spec_error = 4,
};

/// The JSON schema of run specs (printed by `mfg-charax schema`).
const nlohmann::json& schema();

/// Throws SpecError naming the offending path ("/solver/tol_sup") on
/// unknown keys, wrong types, out-of-range values or missing fields.
void validate_spec(const nlohmann::json& spec);

/// Applies "a.b.c=value" to spec; value is parsed as JSON, falling back to
/// a plain string. Missing intermediate objects are created.
void apply_override(nlohmann::json& spec, const std::string& assignment);

/// Entry point of the command-line tool; returns the process exit code.
int run(int argc, char** argv);
/// Same, with args excluding the program name.
int run(const std::vector<std::string>& args);

}  // namespace charax::cli
