#include "msos/relaxation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace msos {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
}

int Pop::max_constraint_degree() const {
    int d = 0;
    for (const auto& c : constraints) d = std::max(d, c.poly.degree());
    return d;
}

double Pop::feasibility_violation(const Point& x) const {
    double v = 0.0;
    for (const auto& c : constraints) {
        const double g = c.poly.evaluate(x);
        if (c.sense == ConstraintSense::ge)
            v = std::max(v, std::max(0.0, -g));
        else
            v = std::max(v, std::abs(g));
    }
    return v;
}

MomentIndex MomentIndex::build(int n, int two_r) {
    MomentIndex idx;
    idx.n = n;
    idx.two_r = two_r;
    idx.basis = monomial_basis(n, two_r);
    return idx;
}

int MomentIndex::index_of(const Monomial& m) const {
    auto it = std::lower_bound(basis.begin(), basis.end(), m, graded_lex_less);
    if (it == basis.end() || !(*it == m))
        throw std::out_of_range("monomial outside the moment index");
    return static_cast<int>(it - basis.begin());
}

int localizing_order(int r, int deg_g) {
    if (2 * r < deg_g) throw std::invalid_argument("relaxation order too small for constraint");
    return (2 * r - deg_g) / 2;
}

static void validate_pop(const Pop& pop) {
    if (pop.n < 1) throw std::invalid_argument("pop needs at least one variable");
    for (const auto& c : pop.constraints) {
        if (c.poly.var_count() != pop.n)
            throw std::invalid_argument("constraint variable count mismatch");
        if (c.poly.is_zero()) throw std::invalid_argument("zero constraint polynomial");
    }
}

RelaxationProblem build_moment_relaxation(const Pop& pop, const Polynomial& f, int r) {
    validate_pop(pop);
    if (f.var_count() != pop.n) throw std::invalid_argument("objective variable count mismatch");
    if (r < 1) throw std::invalid_argument("relaxation order must be >= 1");
    if (2 * r < f.degree() || 2 * r < pop.max_constraint_degree())
        throw std::invalid_argument("relaxation order too small");

    RelaxationProblem rp;
    rp.order = r;
    rp.index = MomentIndex::build(pop.n, 2 * r);
    rp.objective_poly = f;
    const int num_moments = rp.index.size();

    const std::vector<Monomial> moment_basis = monomial_basis(pop.n, r);
    const int mside = static_cast<int>(moment_basis.size());

    ConeSpec cone;
    cone.psd_block_sizes.push_back(mside);
    rp.moment_block = 0;
    rp.localizer_block.assign(pop.constraints.size(), -1);
    rp.eq_row_range.assign(pop.constraints.size(), {-1, -1});

    std::vector<std::vector<Monomial>> loc_basis(pop.constraints.size());
    for (std::size_t i = 0; i < pop.constraints.size(); ++i) {
        const auto& c = pop.constraints[i];
        loc_basis[i] = monomial_basis(pop.n, localizing_order(r, c.poly.degree()));
        if (c.sense == ConstraintSense::ge) {
            rp.localizer_block[i] = static_cast<int>(cone.psd_block_sizes.size());
            cone.psd_block_sizes.push_back(static_cast<int>(loc_basis[i].size()));
        }
    }
    cone.free_count = num_moments;
    rp.moment_var_offset = cone.free_offset();
    rp.conic.cone = cone;

    const int yoff = rp.moment_var_offset;
    auto yindex = [&](const Monomial& m) { return yoff + rp.index.index_of(m); };

    // normalization row: y_0 = 1
    rp.conic.rows.push_back({{{yindex(Monomial::constant(pop.n)), 1.0}}, 1.0});

    // moment matrix linking rows: entry (a,b) equals y_{alpha_a + alpha_b}
    {
        const int boff = cone.psd_offset(rp.moment_block);
        for (int col = 0; col < mside; ++col) {
            for (int row = col; row < mside; ++row) {
                const double kappa = (row == col) ? 1.0 : kSqrt2;
                ConstraintRow cr;
                cr.entries.push_back({boff + svec_index(mside, row, col), 1.0});
                cr.entries.push_back(
                    {yindex(moment_basis[row].times(moment_basis[col])), -kappa});
                cr.rhs = 0.0;
                rp.conic.rows.push_back(std::move(cr));
            }
        }
    }

    // localizers
    for (std::size_t i = 0; i < pop.constraints.size(); ++i) {
        const auto& c = pop.constraints[i];
        const auto& lb = loc_basis[i];
        const int lside = static_cast<int>(lb.size());
        if (c.sense == ConstraintSense::ge) {
            const int boff = cone.psd_offset(rp.localizer_block[i]);
            for (int col = 0; col < lside; ++col) {
                for (int row = col; row < lside; ++row) {
                    const double kappa = (row == col) ? 1.0 : kSqrt2;
                    ConstraintRow cr;
                    cr.entries.push_back({boff + svec_index(lside, row, col), 1.0});
                    const Monomial base = lb[row].times(lb[col]);
                    for (const auto& [gm, gc] : c.poly.terms())
                        cr.entries.push_back({yindex(base.times(gm)), -kappa * gc});
                    cr.rhs = 0.0;
                    rp.conic.rows.push_back(std::move(cr));
                }
            }
        } else {
            const int first = static_cast<int>(rp.conic.rows.size());
            for (int col = 0; col < lside; ++col) {
                for (int row = col; row < lside; ++row) {
                    ConstraintRow cr;
                    const Monomial base = lb[row].times(lb[col]);
                    for (const auto& [gm, gc] : c.poly.terms())
                        cr.entries.push_back({yindex(base.times(gm)), gc});
                    cr.rhs = 0.0;
                    rp.conic.rows.push_back(std::move(cr));
                }
            }
            rp.eq_row_range[i] = {first, static_cast<int>(rp.conic.rows.size())};
        }
    }

    // objective: sum_alpha f_alpha y_alpha
    rp.conic.objective = Eigen::VectorXd::Zero(cone.scalar_dim());
    for (const auto& [m, coef] : f.terms()) rp.conic.objective(yindex(m)) = coef;
    return rp;
}

QMembershipProblem build_q_membership(const Pop& pop, const Polynomial& p, int r) {
    validate_pop(pop);
    if (p.var_count() != pop.n) throw std::invalid_argument("target variable count mismatch");
    if (r < 1) throw std::invalid_argument("relaxation order must be >= 1");
    if (p.degree() > 2 * r) throw std::invalid_argument("target degree exceeds 2r");
    if (2 * r < pop.max_constraint_degree())
        throw std::invalid_argument("relaxation order too small");

    QMembershipProblem qp;
    qp.order = r;
    qp.target = p;
    qp.row_monomials = monomial_basis(pop.n, 2 * r);

    ConeSpec cone;
    qp.gram_basis_s0 = monomial_basis(pop.n, r);
    qp.gram_side.push_back(static_cast<int>(qp.gram_basis_s0.size()));
    cone.psd_block_sizes.push_back(qp.gram_side[0]);
    qp.gram_block_of.assign(pop.constraints.size(), -1);
    qp.eq_span.assign(pop.constraints.size(), {-1, 0});
    qp.eq_basis.assign(pop.constraints.size(), {});
    qp.gram_basis.assign(pop.constraints.size(), {});

    int free_count = 0;
    for (std::size_t i = 0; i < pop.constraints.size(); ++i) {
        const auto& c = pop.constraints[i];
        if (c.sense == ConstraintSense::ge) {
            qp.gram_basis[i] = monomial_basis(pop.n, localizing_order(r, c.poly.degree()));
            qp.gram_block_of[i] = static_cast<int>(cone.psd_block_sizes.size());
            qp.gram_side.push_back(static_cast<int>(qp.gram_basis[i].size()));
            cone.psd_block_sizes.push_back(static_cast<int>(qp.gram_basis[i].size()));
        } else {
            // sign-free weight of degree <= 2r - deg g
            qp.eq_basis[i] = monomial_basis(pop.n, 2 * r - c.poly.degree());
            qp.eq_span[i] = {free_count, static_cast<int>(qp.eq_basis[i].size())};
            free_count += static_cast<int>(qp.eq_basis[i].size());
        }
    }
    cone.free_count = free_count;
    qp.conic.cone = cone;
    qp.conic.objective = Eigen::VectorXd::Zero(cone.scalar_dim());

    // one coefficient-matching row per monomial of degree <= 2r
    const int foff = cone.free_offset();
    for (const auto& gamma : qp.row_monomials) {
        ConstraintRow cr;
        // s0 Gram contribution
        {
            const int side = qp.gram_side[0];
            const int boff = cone.psd_offset(0);
            for (int col = 0; col < side; ++col)
                for (int row = col; row < side; ++row) {
                    const Monomial prod = qp.gram_basis_s0[row].times(qp.gram_basis_s0[col]);
                    if (!(prod == gamma)) continue;
                    const double kappa = (row == col) ? 1.0 : kSqrt2;
                    cr.entries.push_back({boff + svec_index(side, row, col), kappa});
                }
        }
        for (std::size_t i = 0; i < pop.constraints.size(); ++i) {
            const auto& c = pop.constraints[i];
            if (c.sense == ConstraintSense::ge) {
                const int blk = qp.gram_block_of[i];
                const int side = qp.gram_side[blk];
                const int boff = cone.psd_offset(blk);
                for (int col = 0; col < side; ++col)
                    for (int row = col; row < side; ++row) {
                        const Monomial base = qp.gram_basis[i][row].times(qp.gram_basis[i][col]);
                        double coef = 0.0;
                        for (const auto& [gm, gc] : c.poly.terms())
                            if (base.times(gm) == gamma) coef += gc;
                        if (coef == 0.0) continue;
                        const double kappa = (row == col) ? 1.0 : kSqrt2;
                        cr.entries.push_back({boff + svec_index(side, row, col), kappa * coef});
                    }
            } else {
                const auto& [off, count] = qp.eq_span[i];
                for (int k = 0; k < count; ++k) {
                    double coef = 0.0;
                    for (const auto& [gm, gc] : c.poly.terms())
                        if (qp.eq_basis[i][k].times(gm) == gamma) coef += gc;
                    if (coef != 0.0) cr.entries.push_back({foff + off + k, coef});
                }
            }
        }
        cr.rhs = p.coefficient(gamma);
        qp.conic.rows.push_back(std::move(cr));
    }
    return qp;
}

const char* to_string(MemberVerdict v) {
    switch (v) {
        case MemberVerdict::member: return "member";
        case MemberVerdict::non_member: return "non_member";
        case MemberVerdict::undetermined: return "undetermined";
    }
    return "unknown";
}

Polynomial reconstruct_decomposition(const Pop& pop, const QMembershipProblem& qp,
                                     const Eigen::VectorXd& primal) {
    const ConeSpec& cone = qp.conic.cone;
    Polynomial acc(pop.n);
    // s0 * 1
    {
        const int side = qp.gram_side[0];
        const Eigen::MatrixXd Q = svec_to_matrix(primal.segment(cone.psd_offset(0), svec_dim(side)), side);
        for (int a = 0; a < side; ++a)
            for (int b = 0; b < side; ++b)
                acc.add_term(qp.gram_basis_s0[a].times(qp.gram_basis_s0[b]), Q(a, b));
    }
    const int foff = cone.free_offset();
    for (std::size_t i = 0; i < pop.constraints.size(); ++i) {
        const auto& c = pop.constraints[i];
        Polynomial w(pop.n);
        if (c.sense == ConstraintSense::ge) {
            const int blk = qp.gram_block_of[i];
            const int side = qp.gram_side[blk];
            const Eigen::MatrixXd Q =
                svec_to_matrix(primal.segment(cone.psd_offset(blk), svec_dim(side)), side);
            for (int a = 0; a < side; ++a)
                for (int b = 0; b < side; ++b)
                    w.add_term(qp.gram_basis[i][a].times(qp.gram_basis[i][b]), Q(a, b));
        } else {
            const auto& [off, count] = qp.eq_span[i];
            for (int k = 0; k < count; ++k) w.add_term(qp.eq_basis[i][k], primal(foff + off + k));
        }
        acc = acc.add_scaled(1.0, w.multiply(c.poly));
    }
    return acc;
}

bool farkas_rejects_interior(const ConicProblem& prob, const ConicSolution& sol,
                             double margin) {
    // A Farkas ray for a boundary-feasible system can look valid at tolerance.
    // A genuine non-membership certificate must also reject the target shifted
    // into the cone by +margin on the constant coefficient (row 0: the
    // matching rows are ordered by graded lex, the constant monomial first).
    if (prob.rows.empty()) return false;
    return 1.0 + margin * sol.dual(0) > 0.5;
}

QMembershipResult solve_q_membership(const QMembershipProblem& qp, double member_tol) {
    QMembershipResult res;
    SolverSettings settings;
    settings.tol = std::min(member_tol, 1e-8);
    res.solution = solve(qp.conic, settings);
    const auto& s = res.solution;
    const double worst =
        std::max({s.residuals.primal_feas, s.residuals.dual_feas, s.residuals.gap});
    const double margin = 1e3 * member_tol * (1.0 + qp.target.max_abs_coefficient());
    if (s.status == SolveStatus::optimal && worst <= member_tol) {
        res.verdict = MemberVerdict::member;
        res.certificate_residual = worst;
    } else if (s.status == SolveStatus::primal_infeasible && worst <= member_tol &&
               farkas_rejects_interior(qp.conic, s, margin)) {
        res.verdict = MemberVerdict::non_member;
        res.certificate_residual = worst;
        return res;
    } else {
        res.verdict = MemberVerdict::undetermined;
        res.certificate_residual = worst;
        return res;
    }

    // harvest the witness
    const ConeSpec& cone = qp.conic.cone;
    res.gram.push_back(svec_to_matrix(
        s.primal.segment(cone.psd_offset(0), svec_dim(qp.gram_side[0])), qp.gram_side[0]));
    const int foff = cone.free_offset();
    const int npop = static_cast<int>(qp.gram_block_of.size());
    for (int i = 0; i < npop; ++i) {
        Polynomial w(qp.target.var_count());
        if (qp.gram_block_of[i] >= 0) {
            const int blk = qp.gram_block_of[i];
            const int side = qp.gram_side[blk];
            const Eigen::MatrixXd Q =
                svec_to_matrix(s.primal.segment(cone.psd_offset(blk), svec_dim(side)), side);
            res.gram.push_back(Q);
            for (int a = 0; a < side; ++a)
                for (int b = 0; b < side; ++b)
                    w.add_term(qp.gram_basis[i][a].times(qp.gram_basis[i][b]), Q(a, b));
        } else {
            const auto& [off, count] = qp.eq_span[i];
            for (int k = 0; k < count; ++k) w.add_term(qp.eq_basis[i][k], s.primal(foff + off + k));
        }
        res.weights.push_back(std::move(w));
    }
    return res;
}

bool assumption_radius_check(const Pop& pop, double R, int r) {
    if (R <= 0.0) throw std::invalid_argument("radius must be positive");
    Polynomial ball = Polynomial::constant(pop.n, R * R);
    for (int k = 0; k < pop.n; ++k) {
        std::vector<int> e(pop.n, 0);
        e[k] = 2;
        ball.add_term(Monomial{e}, -1.0);
    }
    const auto qp = build_q_membership(pop, ball, r);
    return solve_q_membership(qp, 1e-7).verdict == MemberVerdict::member;
}

}  // namespace msos
