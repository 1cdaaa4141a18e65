#pragma once

#include <filesystem>

#include <json.hpp>

#include "mdl/model_class.hpp"

namespace mdl {

/// Builds a class from its JSON definition. Two shapes are accepted:
///
///   {"parameters": [{"value": "3/16", "kw": 8}, ...], "true": "3/16"}
///   {"generator": {"kind": "counterexample", "N": 3}, "true": "1/2"}
///
/// In the explicit form a member may omit "kw" when the top-level "coding"
/// names a rule: "dyadic" (alias "dyadic-Eq17") or "constant:N". Generator
/// kinds: counterexample {N}, extended-counterexample {N, extras},
/// dyadic-grid {precision}, distorted {coeffs, precision}. A top-level
/// "true" overrides the generator's own truth.
///
/// Throws std::invalid_argument on malformed input.
ModelClass class_from_json(const nlohmann::json& spec);

ModelClass load_class_file(const std::filesystem::path& path);

/// Explicit-form serialization; class_from_json(class_to_json(c)) == c.
nlohmann::json class_to_json(const ModelClass& cls);

}  // namespace mdl
