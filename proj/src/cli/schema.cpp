#include <cmath>
#include <set>
#include <sstream>

#include "charax/cli/cli.hpp"
#include "charax/core/errors.hpp"

namespace charax::cli {

using nlohmann::json;

namespace {

// Subset of JSON Schema: type, properties (closed objects), required, enum,
// minimum/maximum (+ exclusive), items, minItems, $ref, and an OpenAPI-style
// discriminator on "type" for coefficient blocks.
const char* schema_text = R"JSON(
{
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "mfg-charax run spec",
  "type": "object",
  "required": ["family", "problem"],
  "properties": {
    "family": {"type": "string", "enum": ["finite", "hilbert", "measure"]},
    "problem": {"type": "object", "description": "finite_problem, hilbert_problem or measure_problem, chosen by family"},
    "solver": {"$ref": "#/definitions/solver"},
    "output": {"$ref": "#/definitions/output"},
    "verify": {"$ref": "#/definitions/verify"}
  },
  "definitions": {
    "solver": {
      "type": "object",
      "properties": {
        "mode": {"type": "string", "enum": ["solve", "continue", "verify"]},
        "T": {"type": "number", "exclusiveMinimum": 0},
        "horizon": {"type": "number", "exclusiveMinimum": 0},
        "tol_sup": {"type": "number", "exclusiveMinimum": 0},
        "max_iters": {"type": "integer", "minimum": 1},
        "lip_cap": {"type": "number", "exclusiveMinimum": 0},
        "segment_shrink": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "segment_scale": {"type": "number", "exclusiveMinimum": 0},
        "mc_samples": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "dt": {"type": "number", "exclusiveMinimum": 0},
        "n_sub": {"type": "integer", "minimum": 1},
        "em_sub": {"type": "integer", "minimum": 1},
        "interp": {"type": "string", "enum": ["linear", "cubic"]},
        "noise": {"type": "boolean"},
        "common_paths": {"type": "integer", "minimum": 2},
        "reconstruct_value": {"type": "boolean"}
      }
    },
    "output": {
      "type": "object",
      "properties": {
        "directory": {"type": "string"},
        "formats": {"type": "array", "items": {"type": "string", "enum": ["csv", "json"]}},
        "emit_lip_history": {"type": "boolean"},
        "emit_plot_csv": {"type": "boolean"}
      }
    },
    "verify": {
      "type": "object",
      "required": ["V"],
      "properties": {
        "U": {"type": "string", "description": "CSV of the reference solution; solved from the spec when absent"},
        "V": {"type": "string", "description": "CSV of the candidate"},
        "C": {"type": "number", "minimum": 0}
      }
    },
    "numbers": {"type": "array", "items": {"type": "number"}},
    "integers": {"type": "array", "items": {"type": "integer"}},
    "monomial": {
      "type": "object",
      "required": ["coef"],
      "properties": {
        "component": {"type": "integer", "minimum": 0},
        "coef": {"type": "number"},
        "x_pow": {"$ref": "#/definitions/integers"},
        "p_pow": {"$ref": "#/definitions/integers"}
      }
    },
    "domain": {
      "type": "object",
      "required": ["kind", "n_points"],
      "properties": {
        "kind": {"type": "string", "enum": ["torus", "box"]},
        "periods": {"$ref": "#/definitions/numbers"},
        "lo": {"$ref": "#/definitions/numbers"},
        "hi": {"$ref": "#/definitions/numbers"},
        "n_points": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 2}}
      }
    },
    "state_field": {
      "type": "object",
      "required": ["type"],
      "discriminator": {
        "propertyName": "type",
        "mapping": {
          "identity_p": {"properties": {}},
          "zero": {"properties": {}},
          "linear_decay": {"properties": {"rate": {"type": "number"}}},
          "constant": {"required": ["value"], "properties": {"value": {"$ref": "#/definitions/numbers"}}},
          "scaled_x": {"required": ["c"], "properties": {"c": {"type": "number"}}},
          "polynomial": {"required": ["terms"], "properties": {"terms": {"type": "array", "items": {"$ref": "#/definitions/monomial"}}}}
        }
      }
    },
    "spatial_field": {
      "type": "object",
      "required": ["type"],
      "discriminator": {
        "propertyName": "type",
        "mapping": {
          "sine": {"properties": {"amplitude": {"type": "number"}, "freq": {"type": "number"}, "phase": {"type": "number"}}},
          "cosine": {"properties": {"amplitude": {"type": "number"}, "freq": {"type": "number"}}},
          "constant": {"required": ["value"], "properties": {"value": {"$ref": "#/definitions/numbers"}}},
          "linear": {"required": ["matrix"], "properties": {"matrix": {"$ref": "#/definitions/numbers"}}},
          "polynomial": {"required": ["terms"], "properties": {"terms": {"type": "array", "items": {"$ref": "#/definitions/monomial"}}}}
        }
      }
    },
    "point_map": {
      "type": "object",
      "required": ["type"],
      "discriminator": {
        "propertyName": "type",
        "mapping": {
          "identity": {"properties": {}},
          "affine": {"required": ["matrix", "offset"], "properties": {"matrix": {"$ref": "#/definitions/numbers"}, "offset": {"$ref": "#/definitions/numbers"}}}
        }
      }
    },
    "finite_problem": {
      "type": "object",
      "required": ["domain", "F", "U0"],
      "properties": {
        "domain": {"$ref": "#/definitions/domain"},
        "F": {"$ref": "#/definitions/state_field"},
        "G": {"$ref": "#/definitions/state_field"},
        "lambda": {"type": "number", "minimum": 0},
        "S": {"$ref": "#/definitions/point_map"},
        "U0": {"$ref": "#/definitions/spatial_field"}
      }
    },
    "hilbert_problem": {
      "type": "object",
      "required": ["box", "F", "U0"],
      "properties": {
        "box": {"$ref": "#/definitions/domain"},
        "F": {"$ref": "#/definitions/state_field"},
        "G": {"$ref": "#/definitions/state_field"},
        "lambdas": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "U0": {"$ref": "#/definitions/spatial_field"}
      }
    },
    "measure_problem": {
      "type": "object",
      "required": ["H", "B", "U0"],
      "properties": {
        "n_cells": {"type": "integer", "minimum": 3},
        "H": {
          "type": "object",
          "required": ["type"],
          "discriminator": {
            "propertyName": "type",
            "mapping": {
              "quadratic": {"properties": {"kappa": {"type": "number"}}},
              "nonlocal_mean": {"properties": {}},
              "zero": {"properties": {}}
            }
          }
        },
        "B": {"type": "object", "required": ["type"], "properties": {"type": {"type": "string", "enum": ["momentum", "mean", "zero"]}}},
        "U0": {
          "type": "object",
          "required": ["type"],
          "discriminator": {
            "propertyName": "type",
            "mapping": {
              "sine": {"properties": {"amplitude": {"type": "number"}}},
              "mean_coupled": {"properties": {"amplitude": {"type": "number"}}}
            }
          }
        },
        "sigma": {"type": "number", "exclusiveMinimum": 0},
        "sigma_prime": {"type": "number", "exclusiveMinimum": 0},
        "sigma_0": {"type": "number", "minimum": 0},
        "anchors": {
          "type": "object",
          "properties": {
            "count": {"type": "integer", "minimum": 1},
            "seed": {"type": "integer", "minimum": 0}
          }
        }
      }
    }
  }
}
)JSON";

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw SpecError((path.empty() ? std::string("/") : path) + ": " + what);
}

std::string type_name(const json& v) {
  if (v.is_number_integer() || v.is_number_unsigned()) return "integer";
  if (v.is_number()) return "number";
  return v.type_name();
}

bool has_type(const json& v, const std::string& t) {
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "boolean") return v.is_boolean();
  if (t == "integer") return v.is_number_integer() || v.is_number_unsigned();
  if (t == "number") return v.is_number();
  return false;
}

const json& resolve(const json& node) {
  if (node.contains("$ref")) {
    const std::string ref = node["$ref"];
    const std::string prefix = "#/definitions/";
    return schema()["definitions"].at(ref.substr(prefix.size()));
  }
  return node;
}

void check(const json& v, const json& raw, const std::string& path);

void check_properties(const json& v, const json& props, const json& required, const std::string& path,
                      const std::set<std::string>& extra) {
  for (auto it = v.begin(); it != v.end(); ++it) {
    if (extra.count(it.key())) continue;
    if (!props.contains(it.key())) fail(path + "/" + it.key(), "unknown key");
    check(it.value(), props[it.key()], path + "/" + it.key());
  }
  for (const auto& r : required) {
    if (!v.contains(r.get<std::string>())) fail(path + "/" + r.get<std::string>(), "required key is missing");
  }
}

void check(const json& v, const json& raw, const std::string& path) {
  const json& s = resolve(raw);
  if (s.contains("type")) {
    const std::string t = s["type"];
    if (!has_type(v, t)) fail(path, "expected " + t + ", got " + type_name(v));
  }
  if (s.contains("enum")) {
    bool ok = false;
    for (const auto& e : s["enum"]) ok = ok || e == v;
    if (!ok) fail(path, "value " + v.dump() + " is not one of " + s["enum"].dump());
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(path, "must be finite");
    if (s.contains("minimum") && x < s["minimum"].get<double>()) fail(path, "must be >= " + s["minimum"].dump());
    if (s.contains("maximum") && x > s["maximum"].get<double>()) fail(path, "must be <= " + s["maximum"].dump());
    if (s.contains("exclusiveMinimum") && !(x > s["exclusiveMinimum"].get<double>())) {
      fail(path, "must be > " + s["exclusiveMinimum"].dump());
    }
    if (s.contains("exclusiveMaximum") && !(x < s["exclusiveMaximum"].get<double>())) {
      fail(path, "must be < " + s["exclusiveMaximum"].dump());
    }
  }
  if (v.is_array()) {
    if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>()) {
      fail(path, "needs at least " + s["minItems"].dump() + " items");
    }
    if (s.contains("items")) {
      for (std::size_t i = 0; i < v.size(); ++i) check(v[i], s["items"], path + "/" + std::to_string(i));
    }
  }
  if (v.is_object()) {
    if (s.contains("discriminator")) {
      const auto& d = s["discriminator"];
      const std::string key = d["propertyName"];
      if (!v.contains(key) || !v[key].is_string()) fail(path + "/" + key, "required string key is missing");
      const std::string name = v[key];
      if (!d["mapping"].contains(name)) {
        std::vector<std::string> names;
        for (auto it = d["mapping"].begin(); it != d["mapping"].end(); ++it) names.push_back(it.key());
        fail(path + "/" + key, "unknown type \"" + name + "\" (expected one of " + json(names).dump() + ")");
      }
      const auto& c = d["mapping"][name];
      check_properties(v, c.value("properties", json::object()), c.value("required", json::array()), path, {key});
    } else if (s.contains("properties")) {
      check_properties(v, s["properties"], s.value("required", json::array()), path, {});
    }
  }
}

}  // namespace

const json& schema() {
  static const json s = json::parse(schema_text);
  return s;
}

void validate_spec(const json& spec) {
  check(spec, schema(), "");
  const std::string family = spec["family"];
  check(spec["problem"], schema()["definitions"][family + "_problem"], "/problem");
  if (spec.contains("verify") && family != "finite") fail("/verify", "verification is only available for family finite");
}

void apply_override(json& spec, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw SpecError("--set expects key=value, got \"" + assignment + "\"");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &spec;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) throw SpecError("--set: empty path component in \"" + key + "\"");
    parts.push_back(part);
  }
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const bool last = i + 1 == parts.size();
    const std::string& p = parts[i];
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(p);
      } catch (const std::exception&) {
        throw SpecError("--set: \"" + p + "\" is not an array index in \"" + key + "\"");
      }
      if (idx >= node->size()) throw SpecError("--set: index " + p + " out of range in \"" + key + "\"");
      node = &(*node)[idx];
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) throw SpecError("--set: \"" + p + "\" is not inside an object in \"" + key + "\"");
      node = &(*node)[p];
    }
    if (last) *node = value;
  }
}

}  // namespace charax::cli
