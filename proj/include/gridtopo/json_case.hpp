#pragma once

#include <string>

#include "gridtopo/raw_case.hpp"

namespace gridtopo {

struct Network;

// Native JSON case schema, "schema_version": 1. Field catalogue lives in
// FORMATS.md. Unknown keys are rejected; errors carry a JSON pointer.
RawCase parse_json_case_text(const std::string& text, const std::string& filename = "<string>");
RawCase parse_json_case(const std::string& path);

// Serializes in canonical field order with shortest round-trip numbers, so
// writing the same network twice is byte identical.
std::string write_json_case(const RawCase& rc);
std::string write_json_case(const Network& net);

}  // namespace gridtopo
