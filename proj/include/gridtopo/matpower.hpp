#pragma once

#include <string>

#include "gridtopo/raw_case.hpp"

namespace gridtopo {

// Reads a MATPOWER case file extended with DC grid tables (busdc, branchdc,
// convdc, dcpol). Throws ParseError with file, line and column on bad input.
RawCase parse_matpower_acdc(const std::string& path);

// Same parser over an in-memory string; `filename` is used in diagnostics.
RawCase parse_matpower_acdc_text(const std::string& text, const std::string& filename = "<string>");

}  // namespace gridtopo
