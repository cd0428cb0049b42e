#pragma once

#include <optional>
#include <string>
#include <vector>

#include "msos/conic.hpp"
#include "msos/poly.hpp"

namespace msos {

enum class ConstraintSense { ge, eq };

struct PopConstraint {
    Polynomial poly;
    ConstraintSense sense = ConstraintSense::ge;
};

/// A polynomial optimization problem's feasible set: {x : g_i(x) >= 0 or = 0}.
struct Pop {
    int n = 0;
    std::vector<PopConstraint> constraints;
    std::string name;

    int max_constraint_degree() const;
    /// Worst violation of the constraints at a point (>= 0).
    double feasibility_violation(const Point& x) const;
};

/// Bijection between monomials of degree <= 2r and moment-vector positions.
struct MomentIndex {
    int n = 0;
    int two_r = 0;
    std::vector<Monomial> basis;  // position -> monomial, graded lex

    static MomentIndex build(int n, int two_r);
    int size() const { return static_cast<int>(basis.size()); }
    int index_of(const Monomial& m) const;  // binary search; throws when absent
};

/// Half-degree available to the SOS weight of a constraint of degree deg_g at
/// relaxation order r: floor((2r - deg_g)/2). Throws when 2r < deg_g.
int localizing_order(int r, int deg_g);

/// The order-r moment relaxation as a conic program. Moment scalars y_alpha
/// are free variables linked into the PSD moment/localizer blocks by equality
/// rows; equality constraints get entrywise-zero localizer rows instead of a
/// block.
struct RelaxationProblem {
    ConicProblem conic;
    MomentIndex index;
    int order = 0;
    int moment_block = 0;               // block id of M_r(y)
    std::vector<int> localizer_block;   // per constraint; -1 for eq constraints
    std::vector<std::pair<int, int>> eq_row_range;  // per constraint; (-1,-1) for ge
    int moment_var_offset = 0;          // scalarized offset of the y variables
    Polynomial objective_poly;

    RelaxationProblem() : objective_poly(1) {}
};
RelaxationProblem build_moment_relaxation(const Pop& pop, const Polynomial& f, int r);

/// Feasibility SDP for p in Q(g)^r: one Gram block per inequality constraint
/// (and for g_0 = 1), a free weight-coefficient vector per equality
/// constraint, and coefficient-matching rows over all monomials of degree
/// <= 2r.
struct QMembershipProblem {
    ConicProblem conic;
    int order = 0;
    std::vector<int> gram_side;            // per block: s0 first, then ge constraints
    std::vector<int> gram_block_of;        // per constraint: block id or -1
    std::vector<std::pair<int, int>> eq_span;  // per constraint: (offset, count) in free part
    std::vector<std::vector<Monomial>> eq_basis;   // per constraint (empty for ge)
    std::vector<Monomial> gram_basis_s0;
    std::vector<std::vector<Monomial>> gram_basis;  // per constraint (empty for eq)
    Polynomial target;
    std::vector<Monomial> row_monomials;

    QMembershipProblem() : target(1) {}
};
QMembershipProblem build_q_membership(const Pop& pop, const Polynomial& p, int r);

enum class MemberVerdict { member, non_member, undetermined };
const char* to_string(MemberVerdict v);

struct QMembershipResult {
    MemberVerdict verdict = MemberVerdict::undetermined;
    double certificate_residual = 0.0;   // solver residual backing the verdict
    double reconstruction_error = 0.0;   // coefficient mismatch of the witness
    std::vector<Eigen::MatrixXd> gram;   // s0 first, then one per ge constraint
    std::vector<Polynomial> weights;     // s_i per constraint (ge: b'Qb, eq: free poly)
    ConicSolution solution;
};

/// Three-valued membership: member needs a feasible solve within member_tol,
/// non-member a Farkas certificate within member_tol, anything else is
/// undetermined.
QMembershipResult solve_q_membership(const QMembershipProblem& problem, double member_tol);

/// Sum s_i g_i rebuilt from a primal witness vector of the membership SDP.
Polynomial reconstruct_decomposition(const Pop& pop, const QMembershipProblem& problem,
                                     const Eigen::VectorXd& primal);

/// Archimedean check of Assumption 1: is R^2 - sum x_k^2 in Q(g)^r?
bool assumption_radius_check(const Pop& pop, double R, int r);

}  // namespace msos
