#include "msos/fixtures.hpp"

namespace msos {

Fixture fixture_four_points() {
    Fixture fx;
    fx.pop.n = 2;
    fx.pop.name = "four-points";
    // g1 = 2x2 - 2x2^2 + x1x2
    fx.pop.constraints.push_back(
        {Polynomial::from_terms(2, {{{0, 1}, 2.0}, {{0, 2}, -2.0}, {{1, 1}, 1.0}}),
         ConstraintSense::eq});
    // g2 = -x1 + x2 + x1^2 - x2^2
    fx.pop.constraints.push_back(
        {Polynomial::from_terms(2, {{{1, 0}, -1.0}, {{0, 1}, 1.0}, {{2, 0}, 1.0}, {{0, 2}, -1.0}}),
         ConstraintSense::eq});
    fx.box = {{-1.0, -1.0}, {3.0, 3.0}};
    return fx;
}

Fixture fixture_nonconvex() {
    Fixture fx;
    fx.pop.n = 2;
    fx.pop.name = "nonconvex";
    // g1 = 4 - x1^2 - x2^2
    fx.pop.constraints.push_back(
        {Polynomial::from_terms(2, {{{0, 0}, 4.0}, {{2, 0}, -1.0}, {{0, 2}, -1.0}}),
         ConstraintSense::ge});
    // g2 = -1 - 2x1 - x2 - x1x2
    fx.pop.constraints.push_back(
        {Polynomial::from_terms(
             2, {{{0, 0}, -1.0}, {{1, 0}, -2.0}, {{0, 1}, -1.0}, {{1, 1}, -1.0}}),
         ConstraintSense::ge});
    // g3 = 1 + x1 + x1x2
    fx.pop.constraints.push_back(
        {Polynomial::from_terms(2, {{{0, 0}, 1.0}, {{1, 0}, 1.0}, {{1, 1}, 1.0}}),
         ConstraintSense::ge});
    fx.box = {{-2.0, -2.0}, {2.0, 2.0}};
    return fx;
}

Fixture fixture_remark4() {
    Fixture fx;
    fx.pop.n = 1;
    fx.pop.name = "remark4";
    // g1 = -x^2
    fx.pop.constraints.push_back(
        {Polynomial::from_terms(1, {{{2}, -1.0}}), ConstraintSense::ge});
    fx.box = {{-1.0}, {1.0}};
    return fx;
}

std::optional<Fixture> fixture_by_name(std::string_view name) {
    if (name == "four-points") return fixture_four_points();
    if (name == "nonconvex") return fixture_nonconvex();
    if (name == "remark4") return fixture_remark4();
    return std::nullopt;
}

}  // namespace msos
