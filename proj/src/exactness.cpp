#include "msos/exactness.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace msos {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;

// fixed pseudo-random tie-break direction (low-discrepancy sequence)
double tiebreak_weight(int k) {
    const double phi = 0.6180339887498949;
    double v = (k + 1) * phi;
    v -= std::floor(v);
    return 2.0 * v - 1.0;
}

double partial(const Polynomial& p, int k, const Point& x) {
    double d = 0.0;
    for (const auto& [m, c] : p.terms()) {
        if (m.exponents[k] == 0) continue;
        Monomial dm = m;
        dm.exponents[k] -= 1;
        d += c * m.exponents[k] * monomial_value(dm, x);
    }
    return d;
}

double second_partial(const Polynomial& p, int k, int l, const Point& x) {
    double d = 0.0;
    for (const auto& [m, c] : p.terms()) {
        const int ek = m.exponents[k];
        const int el = m.exponents[l];
        if (k == l) {
            if (ek < 2) continue;
            Monomial dm = m;
            dm.exponents[k] -= 2;
            d += c * ek * (ek - 1) * monomial_value(dm, x);
        } else {
            if (ek < 1 || el < 1) continue;
            Monomial dm = m;
            dm.exponents[k] -= 1;
            dm.exponents[l] -= 1;
            d += c * ek * el * monomial_value(dm, x);
        }
    }
    return d;
}

// Local candidate refinement: Gauss-Newton restoration onto the constraints
// active at the start, then Newton on the KKT system of minimizing f over the
// active manifold. First-order moments of a near-Dirac solution carry errors
// up to sqrt(gap) along flat directions; the subsequent value and membership
// checks still gate the result, so sharpening here cannot fake exactness.
Point polish_candidate(const Pop& pop, const Polynomial& f, const Point& start) {
    Point x = start;
    const int n = pop.n;
    // Constraints active (or violated) at the start are pinned as equalities:
    // a candidate near a corner-type minimizer needs them tight, not merely
    // satisfied. A wrong guess is caught by the value check afterwards.
    std::vector<int> active;
    for (std::size_t i = 0; i < pop.constraints.size(); ++i) {
        const double g = pop.constraints[i].poly.evaluate(x);
        // violated or tight; merely nearby inequalities must stay free or the
        // restoration drags arc minimizers into corners
        if (pop.constraints[i].sense == ConstraintSense::eq || g < 1e-3)
            active.push_back(static_cast<int>(i));
    }
    if (active.empty()) return x;
    const int na = static_cast<int>(active.size());
    auto active_residual = [&](const Point& p) {
        double v = 0.0;
        for (int i : active) v = std::max(v, std::abs(pop.constraints[i].poly.evaluate(p)));
        return v;
    };
    auto jacobian = [&](const Point& p, Eigen::VectorXd& gval, Eigen::MatrixXd& jac) {
        for (int a = 0; a < na; ++a) {
            const Polynomial& g = pop.constraints[active[a]].poly;
            gval(a) = g.evaluate(p);
            for (int k = 0; k < n; ++k) jac(a, k) = partial(g, k, p);
        }
    };

    // restoration
    Eigen::VectorXd gval(na);
    Eigen::MatrixXd jac(na, n);
    for (int it = 0; it < 60; ++it) {
        jacobian(x, gval, jac);
        if (gval.cwiseAbs().maxCoeff() < 1e-13) break;
        Eigen::VectorXd step = jac.completeOrthogonalDecomposition().solve(-gval);
        if (!step.allFinite()) break;
        if (step.norm() > 0.5) step *= 0.5 / step.norm();
        for (int k = 0; k < n; ++k) x.coords[k] += step(k);
        if (step.norm() < 1e-14) break;
    }
    if (!(active_residual(x) < active_residual(start) ||
          active_residual(start) < 1e-13) ||
        pop.feasibility_violation(x) > pop.feasibility_violation(start) + 1e-10)
        return start;

    // optimality: Newton on grad f + J' lambda = 0, g = 0
    Point xr = x;
    Eigen::VectorXd grad(n);
    for (int k = 0; k < n; ++k) grad(k) = partial(f, k, x);
    jacobian(x, gval, jac);
    Eigen::VectorXd lam = jac.transpose().completeOrthogonalDecomposition().solve(-grad);
    for (int it = 0; it < 15; ++it) {
        jacobian(x, gval, jac);
        for (int k = 0; k < n; ++k) grad(k) = partial(f, k, x);
        Eigen::VectorXd F(n + na);
        F.head(n) = grad + jac.transpose() * lam;
        F.tail(na) = gval;
        if (F.cwiseAbs().maxCoeff() < 1e-12) break;
        Eigen::MatrixXd W(n, n);
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
                double w = second_partial(f, k, l, x);
                for (int a = 0; a < na; ++a)
                    w += lam(a) * second_partial(pop.constraints[active[a]].poly, k, l, x);
                W(k, l) = w;
            }
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + na, n + na);
        kkt.topLeftCorner(n, n) = W;
        kkt.topRightCorner(n, na) = jac.transpose();
        kkt.bottomLeftCorner(na, n) = jac;
        Eigen::VectorXd step = kkt.completeOrthogonalDecomposition().solve(-F);
        if (!step.allFinite()) break;
        if (step.head(n).norm() > 0.25) step *= 0.25 / step.head(n).norm();
        for (int k = 0; k < n; ++k) x.coords[k] += step(k);
        lam += step.tail(na);
        if (step.head(n).norm() < 1e-15) break;
    }
    // keep the optimality step only when it helped
    if (!(f.evaluate(x) <= f.evaluate(xr) + 1e-12) || active_residual(x) > 1e-10 ||
        pop.feasibility_violation(x) > pop.feasibility_violation(xr) + 1e-10)
        x = xr;
    return x;
}

bool primal_blocks_psd(const ConicProblem& prob, const Eigen::VectorXd& x, double tol) {
    const ConeSpec& cone = prob.cone;
    for (std::size_t b = 0; b < cone.psd_block_sizes.size(); ++b) {
        const int s = cone.psd_block_sizes[b];
        const Eigen::MatrixXd M =
            svec_to_matrix(x.segment(cone.psd_offset(static_cast<int>(b)), svec_dim(s)), s);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -tol * (1.0 + std::abs(M.trace()))) return false;
    }
    return true;
}

// Feasible-point upper bound on v(f): polish a spread of seeds from the
// slack-feasible grid (the raw band minimum is not an upper bound at all for
// thin feasible sets).
struct UpperBound {
    bool available = false;
    double value = 0.0;
    Point point;
};

UpperBound polished_upper_bound(const Pop& pop, const Polynomial& f, const Box& box,
                                int resolution) {
    UpperBound ub;
    const auto pts = feasible_grid_points(pop, box, resolution);
    if (pts.empty()) return ub;
    std::vector<int> order(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return f.evaluate(pts[a]) < f.evaluate(pts[b]); });
    std::vector<int> seeds;
    for (int i = 0; i < 20 && i < static_cast<int>(order.size()); ++i) seeds.push_back(order[i]);
    const int stride = std::max<std::size_t>(1, pts.size() / 20);
    for (std::size_t i = 0; i < pts.size(); i += stride) seeds.push_back(order[i]);
    for (int idx : seeds) {
        const Point x = polish_candidate(pop, f, pts[idx]);
        if (pop.feasibility_violation(x) > 1e-9) continue;
        const double v = f.evaluate(x);
        if (!ub.available || v < ub.value) {
            ub.available = true;
            ub.value = v;
            ub.point = x;
        }
    }
    return ub;
}

}  // namespace

const char* to_string(Classification c) {
    switch (c) {
        case Classification::exact: return "exact";
        case Classification::value_exact_dual_unattained: return "value_exact_dual_unattained";
        case Classification::not_exact: return "not_exact";
        case Classification::undetermined: return "undetermined";
    }
    return "unknown";
}

RelaxationOutcome solve_relaxation(const Pop& pop, const Polynomial& f, int r,
                                   const SolverSettings& settings) {
    const RelaxationProblem rp = build_moment_relaxation(pop, f, r);
    const ConicSolution sol = solve(rp.conic, settings);

    RelaxationOutcome out;
    out.solver_status = sol.status;
    out.value = sol.primal_obj;
    out.moments = sol.primal.segment(rp.moment_var_offset, rp.index.size());
    out.candidate.coords.resize(pop.n);
    for (int k = 0; k < pop.n; ++k)
        out.candidate.coords[k] = out.moments(rp.index.index_of(Monomial::unit_var(pop.n, k)));

    if (sol.status == SolveStatus::optimal) {
        out.primal_usable = true;
        out.primal_residual = sol.residuals.primal_feas;
    } else if (sol.status == SolveStatus::numerical_trouble) {
        // a stalled solve may still carry a clean primal (e.g. when only the
        // dual side is unattainable); re-check it independently
        const ResidualReport rep = check_residuals(rp.conic, sol);
        out.primal_residual = rep.primal_inf_norm;
        out.primal_usable =
            rep.primal_inf_norm <= 1e-6 && primal_blocks_psd(rp.conic, sol.primal, 1e-6) &&
            sol.residuals.gap <= 1e-5;
    }
    return out;
}

double grid_slack(const Pop& pop, const Box& box, int resolution) {
    const int n = pop.n;
    double diag2 = 0.0;
    double bmax = 1.0;
    for (int i = 0; i < n; ++i) {
        const double side = box.hi[i] - box.lo[i];
        diag2 += side * side;
        bmax = std::max({bmax, std::abs(box.lo[i]), std::abs(box.hi[i])});
    }
    const double h = std::sqrt(diag2) / resolution;
    double grad = 0.0;
    for (const auto& c : pop.constraints) {
        double g = 0.0;
        for (const auto& [m, coef] : c.poly.terms()) {
            const int d = m.degree();
            if (d == 0) continue;
            g += std::abs(coef) * d * std::pow(bmax, d - 1);
        }
        grad = std::max(grad, g);
    }
    return 2.0 * h * (1.0 + grad);
}

std::vector<Point> feasible_grid_points(const Pop& pop, const Box& box, int resolution) {
    const int n = pop.n;
    if (static_cast<int>(box.lo.size()) != n || static_cast<int>(box.hi.size()) != n)
        throw std::invalid_argument("box dimension mismatch");
    if (resolution < 2) throw std::invalid_argument("grid resolution must be >= 2");
    const double slack = grid_slack(pop, box, resolution);

    std::vector<Point> out;
    Point x;
    x.coords.assign(n, 0.0);
    std::vector<int> k(n, 0);
    while (true) {
        for (int i = 0; i < n; ++i)
            x.coords[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * k[i] / (resolution - 1);
        bool ok = true;
        for (const auto& c : pop.constraints) {
            const double g = c.poly.evaluate(x);
            if (c.sense == ConstraintSense::ge ? (g < -slack) : (std::abs(g) > slack)) {
                ok = false;
                break;
            }
        }
        if (ok) out.push_back(x);
        int i = n - 1;
        while (i >= 0 && ++k[i] == resolution) k[i--] = 0;
        if (i < 0) break;
    }
    return out;
}

double value_oracle_grid(const Pop& pop, const Polynomial& f, const Box& box, int resolution) {
    const auto pts = feasible_grid_points(pop, box, resolution);
    double v = std::numeric_limits<double>::infinity();
    for (const auto& x : pts) v = std::min(v, f.evaluate(x));
    return v;
}

ExactnessCertificate certify_exactness(const Pop& pop, const Polynomial& f, int r,
                                       const Tolerances& tols, const std::optional<Box>& box,
                                       int grid_resolution) {
    ExactnessCertificate cert;
    const RelaxationOutcome out = solve_relaxation(pop, f, r);
    cert.relaxation_status = out.solver_status;
    cert.v_hat = out.value;
    cert.x_hat = out.candidate;

    if (out.solver_status == SolveStatus::primal_infeasible)
        throw std::runtime_error("relaxation infeasible: the feasible set is empty at this order");
    if (!out.primal_usable) {
        cert.classification = Classification::undetermined;
        cert.residuals["relaxation_primal_residual"] = out.primal_residual;
        return cert;
    }

    double feas = pop.feasibility_violation(cert.x_hat);
    double gap = f.evaluate(cert.x_hat) - cert.v_hat;
    bool candidate_ok = false;

    // accept a candidate when it passes the feasibility and value checks;
    // restoration sharpens it to machine accuracy first, which the S-cone
    // cross-check relies on
    auto try_candidate = [&](const Point& cand) {
        const Point x = polish_candidate(pop, f, cand);
        const double fe = pop.feasibility_violation(x);
        const double ga = f.evaluate(x) - cert.v_hat;
        if (fe <= tols.feas_tol && ga <= tols.value_tol) {
            cert.x_hat = x;
            feas = fe;
            gap = ga;
            candidate_ok = true;
        }
        return candidate_ok;
    };

    try_candidate(cert.x_hat);
    if (!candidate_ok) {
        // The optimal moment vector may be a mixture of Dirac vectors (tied
        // minimizers or a flat face); retry with a tiny fixed perturbation to
        // pull out an extreme optimal solution, then re-check against the
        // original data. Both signs, since the helpful tilt is not known.
        for (const double sign : {1.0, -1.0}) {
            Polynomial fp = f;
            for (int k = 0; k < pop.n; ++k)
                fp = fp.add_scaled(sign * 1e-7 * tiebreak_weight(k),
                                   Polynomial::variable(pop.n, k));
            const RelaxationOutcome out2 = solve_relaxation(pop, fp, r);
            if (out2.primal_usable && try_candidate(out2.candidate)) {
                cert.residuals["tiebreak_retry"] = sign;
                break;
            }
        }
    }
    UpperBound ub;
    if (!candidate_ok && box) {
        // A Dirac can sit in the relative interior of the optimal face, where
        // no tilt of the objective reaches it. A polished feasible point from
        // the grid is an independent candidate source; restoration plus the usual
        // checks make it a valid witness when exactness actually holds.
        ub = polished_upper_bound(pop, f, *box, grid_resolution);
        if (ub.available && try_candidate(ub.point)) cert.residuals["grid_candidate"] = 1.0;
    }
    cert.residuals["candidate_feasibility"] = feas;
    cert.residuals["value_gap"] = gap;

    if (candidate_ok) {
        // The vetted candidate's value is the numerically sharp boundary shift
        // (the relaxation value carries solver error that can push f - v^r
        // marginally outside the module); fall back to v^r when needed.
        QMembershipProblem qp = build_q_membership(
            pop, f.add_scaled(-f.evaluate(cert.x_hat), Polynomial::constant(pop.n, 1.0)), r);
        QMembershipResult qm = solve_q_membership(qp, tols.member_tol);
        if (qm.verdict != MemberVerdict::member &&
            std::abs(f.evaluate(cert.x_hat) - cert.v_hat) > 1e-14) {
            QMembershipProblem qp2 = build_q_membership(
                pop, f.add_scaled(-cert.v_hat, Polynomial::constant(pop.n, 1.0)), r);
            QMembershipResult qm2 = solve_q_membership(qp2, tols.member_tol);
            if (qm2.verdict == MemberVerdict::member) {
                qp = std::move(qp2);
                qm = std::move(qm2);
            }
        }
        cert.membership_verdict = qm.verdict;
        cert.residuals["membership_residual"] = qm.certificate_residual;
        if (qm.verdict == MemberVerdict::member) {
            const Polynomial rebuilt = reconstruct_decomposition(pop, qp, qm.solution.primal);
            const Polynomial diff = rebuilt.add_scaled(-1.0, qp.target);
            cert.residuals["reconstruction_error"] = diff.max_abs_coefficient();
            cert.classification = Classification::exact;
            // labels: s0, then one entry per constraint in order
            {
                GramBlock gb;
                gb.label = "s0";
                gb.gram = qm.gram[0];
                cert.gram_data.push_back(std::move(gb));
            }
            int gram_i = 1;
            for (std::size_t i = 0; i < pop.constraints.size(); ++i) {
                GramBlock gb;
                gb.label = "s" + std::to_string(i + 1);
                if (qp.gram_block_of[i] >= 0) {
                    gb.gram = qm.gram[gram_i++];
                } else {
                    gb.is_gram = false;
                    for (const auto& bm : qp.eq_basis[i])
                        gb.eq_coeffs.push_back(qm.weights[i].coefficient(bm));
                }
                cert.gram_data.push_back(std::move(gb));
            }
        } else {
            cert.classification = Classification::value_exact_dual_unattained;
        }
        return cert;
    }

    // candidate failed: probe membership of f - v for v at and below v^r, and
    // consult the grid oracle to separate a real relaxation gap from numerics
    const Polynomial shifted = f.add_scaled(-cert.v_hat, Polynomial::constant(pop.n, 1.0));
    const QMembershipResult probe =
        solve_q_membership(build_q_membership(pop, shifted, r), tols.member_tol);
    cert.membership_verdict = probe.verdict;
    cert.residuals["membership_residual"] = probe.certificate_residual;

    if (box) {
        if (!ub.available) ub = polished_upper_bound(pop, f, *box, grid_resolution);
        if (ub.available) {
            cert.residuals["oracle_value"] = ub.value;
            if (ub.value - cert.v_hat > 10.0 * tols.value_tol) {
                cert.classification = Classification::not_exact;
                return cert;
            }
        }
    }
    cert.classification = Classification::undetermined;
    return cert;
}

namespace {

// Orthonormal basis of the complement of v (columns of the returned matrix).
Eigen::MatrixXd complement_basis(const Eigen::VectorXd& v) {
    const int n = static_cast<int>(v.size());
    Eigen::MatrixXd m(n, 1);
    m.col(0) = v;
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    const Eigen::MatrixXd q = qr.householderQ();
    return q.rightCols(n - 1);
}

}  // namespace

SConeResult s_cone_member(const Pop& pop, int r, const Point& x_hat, const Polynomial& f0,
                          const Tolerances& tols) {
    if (static_cast<int>(x_hat.coords.size()) != pop.n)
        throw std::invalid_argument("point dimension mismatch");
    SConeResult res;
    res.vanish_residual = std::abs(f0.evaluate(x_hat));
    if (res.vanish_residual > tols.feas_tol * (1.0 + f0.max_abs_coefficient())) {
        res.verdict = MemberVerdict::non_member;
        res.fast_path = true;
        return res;
    }

    if (pop.feasibility_violation(x_hat) > tols.feas_tol) {
        // x_hat outside the feasible set: impose the vanishing of the
        // decomposition at x_hat as an explicit row on the matching system
        QMembershipProblem qp = build_q_membership(pop, f0, r);
        const ConeSpec& cone = qp.conic.cone;
        ConstraintRow cr;
        auto add_gram_eval = [&](int block, const std::vector<Monomial>& basis, double gval) {
            const int side = static_cast<int>(basis.size());
            const int boff = cone.psd_offset(block);
            std::vector<double> v(side);
            for (int a = 0; a < side; ++a) v[a] = monomial_value(basis[a], x_hat);
            for (int col = 0; col < side; ++col)
                for (int row = col; row < side; ++row) {
                    const double kappa = (row == col) ? 1.0 : kSqrt2;
                    const double coef = kappa * v[row] * v[col] * gval;
                    if (coef != 0.0)
                        cr.entries.push_back({boff + svec_index(side, row, col), coef});
                }
        };
        add_gram_eval(0, qp.gram_basis_s0, 1.0);
        const int foff = cone.free_offset();
        for (std::size_t i = 0; i < pop.constraints.size(); ++i) {
            const double gval = pop.constraints[i].poly.evaluate(x_hat);
            if (qp.gram_block_of[i] >= 0) {
                add_gram_eval(qp.gram_block_of[i], qp.gram_basis[i], gval);
            } else {
                const auto& [off, count] = qp.eq_span[i];
                for (int k = 0; k < count; ++k) {
                    const double coef = gval * monomial_value(qp.eq_basis[i][k], x_hat);
                    if (coef != 0.0) cr.entries.push_back({foff + off + k, coef});
                }
            }
        }
        cr.rhs = 0.0;
        qp.conic.rows.push_back(std::move(cr));
        res.membership = solve_q_membership(qp, tols.member_tol);
        res.verdict = res.membership.verdict;
        return res;
    }

    // Feasible x_hat: a vanishing decomposition is a sum of nonnegative terms
    // summing to zero at x_hat, so every Gram is confined to the face
    // Q b(x_hat) = 0 (for constraints with g_i(x_hat) > 0, including g_0).
    // Substituting Q = P Q~ P' with P spanning the complement restores an
    // interior, making the membership solve certifiable both ways.
    // The target is recentered by its (tolerated) value at x_hat so the
    // vanishing holds exactly; the shift is bounded by the fast-path gate.
    const Polynomial target =
        f0.add_scaled(-f0.evaluate(x_hat), Polynomial::constant(pop.n, 1.0));
    const std::vector<Monomial> basis0 = monomial_basis(pop.n, r);
    struct Block {
        std::vector<Monomial> basis;
        Eigen::MatrixXd P;   // side x reduced, orthonormal columns
        int constraint = -1;  // -1 for s0
        double gval = 1.0;
    };
    std::vector<Block> blocks;
    auto make_block = [&](const std::vector<Monomial>& basis, int constraint, double gval,
                          bool project) {
        Block blk;
        blk.basis = basis;
        blk.constraint = constraint;
        blk.gval = gval;
        const int side = static_cast<int>(basis.size());
        if (project && side > 1) {
            Eigen::VectorXd v(side);
            for (int a = 0; a < side; ++a) v(a) = monomial_value(basis[a], x_hat);
            blk.P = complement_basis(v);
        } else if (project && side == 1) {
            blk.P = Eigen::MatrixXd(1, 0);  // fully collapsed
        } else {
            blk.P = Eigen::MatrixXd::Identity(side, side);
        }
        blocks.push_back(std::move(blk));
    };
    make_block(basis0, -1, 1.0, true);
    std::vector<std::pair<int, int>> eq_span(pop.constraints.size(), {-1, 0});
    std::vector<std::vector<Monomial>> eq_basis(pop.constraints.size());
    int free_count = 0;
    for (std::size_t i = 0; i < pop.constraints.size(); ++i) {
        const auto& c = pop.constraints[i];
        const double gval = c.poly.evaluate(x_hat);
        if (c.sense == ConstraintSense::ge) {
            const auto basis = monomial_basis(pop.n, localizing_order(r, c.poly.degree()));
            make_block(basis, static_cast<int>(i), gval, gval > tols.feas_tol);
        } else {
            eq_basis[i] = monomial_basis(pop.n, 2 * r - c.poly.degree());
            eq_span[i] = {free_count, static_cast<int>(eq_basis[i].size())};
            free_count += static_cast<int>(eq_basis[i].size());
        }
    }

    ConicProblem prob;
    for (const auto& blk : blocks) {
        const int side = static_cast<int>(blk.P.cols());
        if (side > 0) prob.cone.psd_block_sizes.push_back(side);
    }
    prob.cone.free_count = free_count;
    prob.objective = Eigen::VectorXd::Zero(prob.cone.scalar_dim());
    const int foff = prob.cone.free_offset();

    for (const auto& gamma : monomial_basis(pop.n, 2 * r)) {
        ConstraintRow cr;
        int psd_block = 0;
        for (const auto& blk : blocks) {
            const int side = static_cast<int>(blk.basis.size());
            const int red = static_cast<int>(blk.P.cols());
            if (red == 0) continue;
            Eigen::MatrixXd B = Eigen::MatrixXd::Zero(side, side);
            bool any = false;
            for (int a = 0; a < side; ++a)
                for (int b = 0; b < side; ++b) {
                    const Monomial base = blk.basis[a].times(blk.basis[b]);
                    double coef = 0.0;
                    if (blk.constraint < 0) {
                        if (base == gamma) coef = 1.0;
                    } else {
                        for (const auto& [gm, gc] : pop.constraints[blk.constraint].poly.terms())
                            if (base.times(gm) == gamma) coef += gc;
                    }
                    if (coef != 0.0) {
                        B(a, b) = coef;
                        any = true;
                    }
                }
            if (any) {
                const Eigen::MatrixXd Bt = blk.P.transpose() * B * blk.P;
                const int boff = prob.cone.psd_offset(psd_block);
                for (int col = 0; col < red; ++col)
                    for (int row = col; row < red; ++row) {
                        const double kappa = (row == col) ? 1.0 : kSqrt2;
                        const double coef = kappa * 0.5 * (Bt(row, col) + Bt(col, row));
                        if (coef != 0.0)
                            cr.entries.push_back({boff + svec_index(red, row, col), coef});
                    }
            }
            ++psd_block;
        }
        for (std::size_t i = 0; i < pop.constraints.size(); ++i) {
            if (pop.constraints[i].sense != ConstraintSense::eq) continue;
            const auto& [off, count] = eq_span[i];
            for (int k = 0; k < count; ++k) {
                double coef = 0.0;
                for (const auto& [gm, gc] : pop.constraints[i].poly.terms())
                    if (eq_basis[i][k].times(gm) == gamma) coef += gc;
                if (coef != 0.0) cr.entries.push_back({foff + off + k, coef});
            }
        }
        cr.rhs = target.coefficient(gamma);
        prob.rows.push_back(std::move(cr));
    }

    SolverSettings settings;
    settings.tol = std::min(tols.member_tol, 1e-8);
    res.membership.solution = solve(prob, settings);
    const auto& s = res.membership.solution;
    const double worst =
        std::max({s.residuals.primal_feas, s.residuals.dual_feas, s.residuals.gap});
    res.membership.certificate_residual = worst;
    if (s.status == SolveStatus::optimal && worst <= tols.member_tol) {
        res.membership.verdict = MemberVerdict::member;
        // lift the projected Grams for the witness and its soundness check
        Polynomial recon(pop.n);
        int psd_block = 0;
        for (const auto& blk : blocks) {
            const int red = static_cast<int>(blk.P.cols());
            Eigen::MatrixXd Q;
            if (red > 0) {
                const Eigen::MatrixXd Qt = svec_to_matrix(
                    s.primal.segment(prob.cone.psd_offset(psd_block), svec_dim(red)), red);
                Q = blk.P * Qt * blk.P.transpose();
                ++psd_block;
            } else {
                Q = Eigen::MatrixXd::Zero(blk.basis.size(), blk.basis.size());
            }
            res.membership.gram.push_back(Q);
            Polynomial w(pop.n);
            const int side = static_cast<int>(blk.basis.size());
            for (int a = 0; a < side; ++a)
                for (int b = 0; b < side; ++b) w.add_term(blk.basis[a].times(blk.basis[b]), Q(a, b));
            if (blk.constraint < 0)
                recon = recon.add_scaled(1.0, w);
            else
                recon = recon.add_scaled(1.0, w.multiply(pop.constraints[blk.constraint].poly));
        }
        for (std::size_t i = 0; i < pop.constraints.size(); ++i) {
            if (pop.constraints[i].sense != ConstraintSense::eq) continue;
            const auto& [off, count] = eq_span[i];
            Polynomial w(pop.n);
            for (int k = 0; k < count; ++k) w.add_term(eq_basis[i][k], s.primal(foff + off + k));
            res.membership.weights.push_back(w);
            recon = recon.add_scaled(1.0, w.multiply(pop.constraints[i].poly));
        }
        res.membership.reconstruction_error =
            recon.add_scaled(-1.0, target).max_abs_coefficient();
    } else if (s.status == SolveStatus::primal_infeasible && worst <= tols.member_tol) {
        res.membership.verdict = MemberVerdict::non_member;
    } else {
        res.membership.verdict = MemberVerdict::undetermined;
    }
    res.verdict = res.membership.verdict;
    return res;
}

ExactnessMemberResult exactness_cone_member(const Pop& pop, const Polynomial& f, int r,
                                            const Tolerances& tols, const std::optional<Box>& box,
                                            int grid_resolution) {
    ExactnessMemberResult result;
    const ExactnessCertificate cert = certify_exactness(pop, f, r, tols, box, grid_resolution);
    result.classification = cert.classification;
    switch (cert.classification) {
        case Classification::exact: result.verdict = MemberVerdict::member; break;
        case Classification::not_exact:
        case Classification::value_exact_dual_unattained:
            result.verdict = MemberVerdict::non_member;
            break;
        case Classification::undetermined: result.verdict = MemberVerdict::undetermined; break;
    }

    // second route: test f - v_hat against the S-cone at the extracted point;
    // meaningful only when the candidate lies in the feasible set
    const auto it = cert.residuals.find("candidate_feasibility");
    if (it != cert.residuals.end() && it->second <= tols.feas_tol) {
        const Polynomial f0 = f.add_scaled(-cert.v_hat, Polynomial::constant(pop.n, 1.0));
        result.s_route = s_cone_member(pop, r, cert.x_hat, f0, tols);
        result.s_route_ran = true;
        if (result.s_route.verdict != MemberVerdict::undetermined &&
            result.verdict != MemberVerdict::undetermined)
            result.routes_agree =
                (result.s_route.verdict == MemberVerdict::member) ==
                (result.verdict == MemberVerdict::member);
    }
    return result;
}

}  // namespace msos
