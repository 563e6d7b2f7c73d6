#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "qdde/solver.hpp"

namespace qdde {

using json = nlohmann::json;

// Reads a JSON document; syntax errors become ProblemError with line and column.
json read_json_file(const std::string& path);

// Applies "dotted.path=value" onto the document. The value is parsed as JSON when
// possible and kept as a string otherwise; numeric path components index arrays.
void apply_override(json& doc, const std::string& assignment);

// Maps the problem schema onto ProblemSpec, applying defaults and checking invariants.
ProblemSpec problem_from_json(const json& doc);

// read_json_file + overrides + problem_from_json. The final document is returned through
// `effective` when non-null.
ProblemSpec load_problem(const std::string& path, const std::vector<std::string>& overrides = {},
                         json* effective = nullptr);

// FNV-1a 64 of the compact dump of the document, as 16 hex digits.
std::string problem_hash(const json& doc);

json to_json(cplx v);

}  // namespace qdde
