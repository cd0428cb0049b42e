#include "doctest.h"

#include <cmath>

#include "msos/exactness.hpp"
#include "msos/fixtures.hpp"
#include "msos/relaxation.hpp"
#include "test_util.hpp"

using namespace msos;

namespace {

// Rebuild f - v from the dual of the moment relaxation: the dual slack blocks
// are the Gram matrices of the SOS weights, the equality-localizer row
// multipliers are the sign-free weights.
Polynomial dual_reconstruction(const Pop& pop, const RelaxationProblem& rp,
                               const ConicSolution& sol) {
    const int n = pop.n;
    Polynomial acc = Polynomial::constant(n, sol.dual_obj);
    {
        const auto basis = monomial_basis(n, rp.order);
        const int side = static_cast<int>(basis.size());
        const Eigen::MatrixXd G = svec_to_matrix(
            sol.dual_slack.segment(rp.conic.cone.psd_offset(rp.moment_block), svec_dim(side)),
            side);
        for (int a = 0; a < side; ++a)
            for (int b = 0; b < side; ++b) acc.add_term(basis[a].times(basis[b]), G(a, b));
    }
    for (std::size_t i = 0; i < pop.constraints.size(); ++i) {
        const auto& c = pop.constraints[i];
        const auto basis = monomial_basis(n, localizing_order(rp.order, c.poly.degree()));
        const int side = static_cast<int>(basis.size());
        Polynomial w(n);
        if (c.sense == ConstraintSense::ge) {
            const Eigen::MatrixXd G = svec_to_matrix(
                sol.dual_slack.segment(rp.conic.cone.psd_offset(rp.localizer_block[i]),
                                       svec_dim(side)),
                side);
            for (int a = 0; a < side; ++a)
                for (int b = 0; b < side; ++b) w.add_term(basis[a].times(basis[b]), G(a, b));
        } else {
            // multipliers in the same (col, row>=col) enumeration as assembly
            int row = rp.eq_row_range[i].first;
            for (int col = 0; col < side; ++col)
                for (int r2 = col; r2 < side; ++r2, ++row)
                    w.add_term(basis[r2].times(basis[col]), sol.dual(row));
        }
        acc = acc.add_scaled(1.0, w.multiply(c.poly));
    }
    return acc;
}

}  // namespace

TEST_CASE("localizing order") {
    CHECK(localizing_order(1, 2) == 0);
    CHECK(localizing_order(2, 2) == 1);
    CHECK(localizing_order(3, 1) == 2);
    CHECK_THROWS_AS(localizing_order(1, 3), std::invalid_argument);
}

TEST_CASE("moment index is a bijection over the 2r basis") {
    const auto idx = MomentIndex::build(2, 4);
    REQUIRE(idx.size() == 15);
    CHECK(idx.index_of(Monomial::constant(2)) == 0);
    for (int k = 0; k < idx.size(); ++k) CHECK(idx.index_of(idx.basis[k]) == k);
    CHECK_THROWS_AS(idx.index_of(Monomial{{5, 0}}), std::out_of_range);
}

TEST_CASE("four-point relaxation dimensions at order 1 and 2") {
    const auto fx = fixture_four_points();
    const Polynomial f = testutil::linear_objective({0.0, 1.0, 1.0});

    const auto r1 = build_moment_relaxation(fx.pop, f, 1);
    CHECK(r1.index.size() == 6);
    CHECK(r1.conic.cone.psd_block_sizes == std::vector<int>{3});
    CHECK(r1.conic.cone.free_count == 6);
    // rows: 1 normalization + 6 moment links + 2 scalar equality localizers
    CHECK(r1.conic.rows.size() == 9);
    CHECK(r1.eq_row_range[0].second - r1.eq_row_range[0].first == 1);
    CHECK(r1.eq_row_range[1].second - r1.eq_row_range[1].first == 1);

    const auto r2 = build_moment_relaxation(fx.pop, f, 2);
    CHECK(r2.index.size() == 15);
    CHECK(r2.conic.cone.psd_block_sizes == std::vector<int>{6});
    // two 3x3 equality localizers contribute 6 rows each
    CHECK(r2.eq_row_range[0].second - r2.eq_row_range[0].first == 6);
    CHECK(r2.eq_row_range[1].second - r2.eq_row_range[1].first == 6);
    CHECK(r2.conic.rows.size() == 1 + 21 + 12);

    // exactly one normalization row (unit rhs)
    int rhs_rows = 0;
    for (const auto& row : r2.conic.rows)
        if (row.rhs != 0.0) ++rhs_rows;
    CHECK(rhs_rows == 1);
}

TEST_CASE("moment linking rows reference y consistently with the index") {
    const auto fx = fixture_four_points();
    const auto rp = build_moment_relaxation(fx.pop, testutil::linear_objective({0, 1, 0}), 2);
    const auto basis = monomial_basis(2, 2);
    const int side = static_cast<int>(basis.size());
    // rows 1 .. svec_dim(side): entry (row, col) against y_{basis[row]*basis[col]}
    int row_id = 1;
    for (int col = 0; col < side; ++col)
        for (int r = col; r < side; ++r, ++row_id) {
            const auto& row = rp.conic.rows[row_id];
            REQUIRE(row.entries.size() == 2);
            const int yidx = row.entries[1].first - rp.moment_var_offset;
            CHECK(yidx == rp.index.index_of(basis[r].times(basis[col])));
        }
}

TEST_CASE("remark 4 relaxation solves to zero") {
    const auto fx = fixture_remark4();
    const Polynomial f = Polynomial::variable(1, 0);
    const auto rp = build_moment_relaxation(fx.pop, f, 1);
    CHECK(rp.conic.cone.psd_block_sizes == std::vector<int>{2, 1});
    const auto sol = solve(rp.conic);
    // the feasible set is the single point y = (1, 0, 0); the dual is not
    // attained, so full optimality certificates are out of reach
    CHECK(std::abs(sol.primal_obj) <= 1e-7);
    const int yoff = rp.moment_var_offset;
    CHECK(std::abs(sol.primal(yoff + 1)) <= 1e-7);
    CHECK(std::abs(sol.primal(yoff) - 1.0) <= 1e-7);
}

TEST_CASE("q-membership block structure matches the order-1 description") {
    const auto fx = fixture_four_points();
    const Polynomial p = testutil::linear_objective({1.0, 0.5, -0.25});
    const auto qp = build_q_membership(fx.pop, p, 1);
    // one 3x3 Gram for s0 plus two free scalars for the equality weights
    CHECK(qp.conic.cone.psd_block_sizes == std::vector<int>{3});
    CHECK(qp.conic.cone.free_count == 2);
    CHECK(qp.eq_basis[0].size() == 1);
    CHECK(qp.eq_basis[1].size() == 1);
    CHECK(qp.conic.rows.size() == 6);  // one row per monomial of degree <= 2
}

TEST_CASE("constants are members, negative constants are not") {
    const auto fx = fixture_nonconvex();
    const Polynomial one = Polynomial::constant(2, 1.0);
    const auto yes = solve_q_membership(build_q_membership(fx.pop, one, 1), 1e-7);
    CHECK(yes.verdict == MemberVerdict::member);

    const Polynomial neg = Polynomial::constant(2, -1.0);
    const auto no = solve_q_membership(build_q_membership(fx.pop, neg, 1), 1e-7);
    CHECK(no.verdict == MemberVerdict::non_member);
}

TEST_CASE("member witnesses reconstruct the target") {
    const auto fx = fixture_nonconvex();
    testutil::Rng rng(4242);
    for (int trial = 0; trial < 5; ++trial) {
        // random member by construction: p = sum s_i g_i with random PSD Grams
        Polynomial p(2);
        {
            const auto basis = monomial_basis(2, 1);
            const int side = static_cast<int>(basis.size());
            Eigen::MatrixXd L(side, side);
            for (int i = 0; i < side; ++i)
                for (int j = 0; j < side; ++j) L(i, j) = rng.uniform(-1.0, 1.0);
            const Eigen::MatrixXd G = L * L.transpose();
            for (int a = 0; a < side; ++a)
                for (int b = 0; b < side; ++b) p.add_term(basis[a].times(basis[b]), G(a, b));
            for (const auto& c : fx.pop.constraints) {
                const Polynomial s0 = Polynomial::constant(2, rng.uniform(0.0, 0.5));
                p = p.add_scaled(1.0, s0.multiply(c.poly));
            }
        }
        const auto qp = build_q_membership(fx.pop, p, 1);
        const auto res = solve_q_membership(qp, 1e-7);
        REQUIRE(res.verdict == MemberVerdict::member);
        const Polynomial rebuilt = reconstruct_decomposition(fx.pop, qp, res.solution.primal);
        const double err = rebuilt.add_scaled(-1.0, p).max_abs_coefficient();
        CHECK(err <= 1e-6 * (1.0 + p.max_abs_coefficient()));
    }
}

TEST_CASE("members accepted at order r stay accepted at order r+1") {
    const auto fx = fixture_nonconvex();
    testutil::Rng rng(31337);
    int accepted = 0;
    for (int trial = 0; trial < 8; ++trial) {
        Polynomial p(2);
        const auto basis2 = monomial_basis(2, 2);
        for (const auto& m : basis2) p.add_term(m, rng.uniform(-1.0, 1.0));
        const auto v1 = solve_q_membership(build_q_membership(fx.pop, p, 1), 1e-7).verdict;
        if (v1 != MemberVerdict::member) continue;
        ++accepted;
        const auto v2 = solve_q_membership(build_q_membership(fx.pop, p, 2), 1e-7).verdict;
        CHECK(v2 == MemberVerdict::member);
    }
    CHECK(accepted > 0);
}

TEST_CASE("accepted members are nonnegative on the feasible set") {
    const auto fx = fixture_nonconvex();
    const auto pts = feasible_grid_points(fx.pop, fx.box, 101);
    REQUIRE(pts.size() > 100);
    testutil::Rng rng(2024);
    int tested = 0;
    for (int trial = 0; trial < 10 && tested < 3; ++trial) {
        Polynomial p(2);
        const auto basis2 = monomial_basis(2, 2);
        for (const auto& m : basis2) p.add_term(m, rng.uniform(-1.0, 1.0));
        // shift above the sampled minimum so membership is plausible
        double pmin = 0.0;
        for (const auto& x : pts) pmin = std::min(pmin, p.evaluate(x));
        p = p.add_scaled(1.0, Polynomial::constant(2, -pmin + 0.5));
        const auto res = solve_q_membership(build_q_membership(fx.pop, p, 2), 1e-7);
        if (res.verdict != MemberVerdict::member) continue;
        ++tested;
        for (const auto& x : pts) CHECK(p.evaluate(x) >= -1e-6);
    }
    CHECK(tested > 0);
}

TEST_CASE("duality consistency: the dual of the relaxation is an SOS certificate") {
    const auto fp = fixture_four_points();
    const auto nc = fixture_nonconvex();
    testutil::Rng rng(808);
    for (int trial = 0; trial < 6; ++trial) {
        const bool use_fp = trial % 2 == 0;
        const Pop& pop = use_fp ? fp.pop : nc.pop;
        const Polynomial f = testutil::linear_objective(
            {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
        const int r = 2;
        const auto rp = build_moment_relaxation(pop, f, r);
        const auto sol = solve(rp.conic);
        if (sol.status != SolveStatus::optimal) continue;  // dual attainment required
        const Polynomial recon = dual_reconstruction(pop, rp, sol);
        const double err = recon.add_scaled(-1.0, f).max_abs_coefficient();
        CHECK(err <= 1e-6 * (1.0 + f.max_abs_coefficient()));
    }
}

TEST_CASE("assumption radius check") {
    const auto nc = fixture_nonconvex();
    CHECK(assumption_radius_check(nc.pop, 2.0, 1));

    const auto r4 = fixture_remark4();
    CHECK(assumption_radius_check(r4.pop, 1.0, 1));

    Pop halfline;
    halfline.n = 2;
    halfline.constraints.push_back({Polynomial::variable(2, 0), ConstraintSense::ge});
    CHECK_FALSE(assumption_radius_check(halfline, 1.0, 1));
}

TEST_CASE("builder preconditions") {
    const auto fx = fixture_four_points();
    const Polynomial f = testutil::linear_objective({0.0, 1.0, 1.0});
    CHECK_THROWS_AS(build_moment_relaxation(fx.pop, f, 0), std::invalid_argument);
    Polynomial cubic(2);
    cubic.add_term(Monomial{{3, 0}}, 1.0);
    CHECK_THROWS_AS(build_q_membership(fx.pop, cubic, 1), std::invalid_argument);
    const Polynomial f1 = testutil::linear_objective({0.0, 1.0});
    CHECK_THROWS_AS(build_moment_relaxation(fx.pop, f1, 1), std::invalid_argument);
}
