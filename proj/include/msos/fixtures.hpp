#pragma once

#include <optional>
#include <string_view>

#include "msos/exactness.hpp"
#include "msos/relaxation.hpp"

namespace msos {

struct Fixture {
    Pop pop;
    Box box;  // bounding box known to contain the feasible set
};

/// Four-point variety: g1 = 2x2 - 2x2^2 + x1x2 = 0, g2 = -x1 + x2 + x1^2 - x2^2 = 0;
/// the feasible set is {(0,0),(0,1),(1,0),(2,2)}.
Fixture fixture_four_points();

/// Non-convex set cut out by a disk of radius 2 and two bilinear constraints.
Fixture fixture_nonconvex();

/// n = 1, g1 = -x^2 >= 0, so the feasible set is the origin.
Fixture fixture_remark4();

std::optional<Fixture> fixture_by_name(std::string_view name);

}  // namespace msos
