#pragma once

#include <string>
#include <string_view>

#include "msos/relaxation.hpp"

namespace msos {

/// Floats are printed with 17 significant digits so output is byte-stable and
/// round-trips exactly.
std::string fmt_double(double v);
std::string json_escape(std::string_view s);

/// Polynomial JSON: {"n": int, "terms": [{"exp": [..], "coef": float}, ...]}.
/// Duplicate exponent lists are summed on load.
Polynomial parse_polynomial_json(const std::string& text);
std::string polynomial_to_json(const Polynomial& p);

/// POP JSON: {"n": int, "constraints": [{"poly": ..., "sense": "ge"|"eq"}], "name": string?}.
Pop parse_pop_json(const std::string& text);
std::string pop_to_json(const Pop& pop);

}  // namespace msos
