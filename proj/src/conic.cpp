#include "msos/conic.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace msos {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace

int ConeSpec::scalar_dim() const {
    return cone_dim() + free_count;
}

int ConeSpec::cone_dim() const {
    int d = nonneg_count;
    for (int s : psd_block_sizes) d += svec_dim(s);
    return d;
}

int ConeSpec::psd_offset(int block) const {
    int off = 0;
    for (int b = 0; b < block; ++b) off += svec_dim(psd_block_sizes[b]);
    return off;
}

int ConeSpec::nonneg_offset() const {
    return psd_offset(static_cast<int>(psd_block_sizes.size()));
}

int ConeSpec::free_offset() const {
    return nonneg_offset() + nonneg_count;
}

int ConeSpec::barrier_nu() const {
    int nu = nonneg_count;
    for (int s : psd_block_sizes) nu += s;
    return nu;
}

int svec_dim(int side) {
    return side * (side + 1) / 2;
}

int svec_index(int side, int row, int col) {
    if (row < col) std::swap(row, col);
    // lower triangle packed by columns
    return col * side - col * (col - 1) / 2 + (row - col);
}

Eigen::MatrixXd svec_to_matrix(const Eigen::Ref<const Eigen::VectorXd>& v, int side) {
    Eigen::MatrixXd m(side, side);
    int k = 0;
    for (int c = 0; c < side; ++c)
        for (int r = c; r < side; ++r, ++k) {
            const double val = (r == c) ? v(k) : v(k) / kSqrt2;
            m(r, c) = val;
            m(c, r) = val;
        }
    return m;
}

Eigen::VectorXd matrix_to_svec(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    const int side = static_cast<int>(m.rows());
    Eigen::VectorXd v(svec_dim(side));
    int k = 0;
    for (int c = 0; c < side; ++c)
        for (int r = c; r < side; ++r, ++k) v(k) = (r == c) ? m(r, c) : m(r, c) * kSqrt2;
    return v;
}

std::string ConicProblem::debug_dump() const {
    std::ostringstream os;
    os << "cone psd=[";
    for (std::size_t i = 0; i < cone.psd_block_sizes.size(); ++i) {
        if (i) os << ",";
        os << cone.psd_block_sizes[i];
    }
    os << "] nonneg=" << cone.nonneg_count << " free=" << cone.free_count << "\n";
    os << "c";
    for (int i = 0; i < objective.size(); ++i) os << " " << fmt_double(objective(i));
    os << "\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
        os << "row " << r << " rhs " << fmt_double(rows[r].rhs) << ":";
        for (const auto& [idx, coef] : rows[r].entries) os << " " << idx << ":" << fmt_double(coef);
        os << "\n";
    }
    return os.str();
}

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::primal_infeasible: return "primal_infeasible";
        case SolveStatus::dual_infeasible: return "dual_infeasible";
        case SolveStatus::numerical_trouble: return "numerical_trouble";
    }
    return "unknown";
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Cone-wise primitives over the scalarized layout
// ---------------------------------------------------------------------------

struct Scaling {
    // Nesterov-Todd scaling per PSD block: lambda = R^-1 X R^-T = R' Z R.
    std::vector<MatrixXd> R, Rinv;
    std::vector<VectorXd> lam_psd;  // singular values sigma
    VectorXd w_nonneg, lam_nonneg;
};

VectorXd unit_point(const ConeSpec& cone) {
    VectorXd e = VectorXd::Zero(cone.scalar_dim());
    for (std::size_t b = 0; b < cone.psd_block_sizes.size(); ++b) {
        const int s = cone.psd_block_sizes[b];
        int k = cone.psd_offset(static_cast<int>(b));
        for (int c = 0; c < s; ++c) {
            e(k) = 1.0;  // diagonal entry of identity
            k += s - c;
        }
    }
    e.segment(cone.nonneg_offset(), cone.nonneg_count).setOnes();
    return e;
}

double cone_dot(const ConeSpec& cone, const VectorXd& a, const VectorXd& b) {
    const int cd = cone.cone_dim();
    return a.head(cd).dot(b.head(cd));
}

bool compute_scaling(const ConeSpec& cone, const VectorXd& x, const VectorXd& z, Scaling& sc) {
    const std::size_t nb = cone.psd_block_sizes.size();
    sc.R.assign(nb, MatrixXd());
    sc.Rinv.assign(nb, MatrixXd());
    sc.lam_psd.assign(nb, VectorXd());
    for (std::size_t b = 0; b < nb; ++b) {
        const int s = cone.psd_block_sizes[b];
        const int off = cone.psd_offset(static_cast<int>(b));
        MatrixXd X = svec_to_matrix(x.segment(off, svec_dim(s)), s);
        MatrixXd Z = svec_to_matrix(z.segment(off, svec_dim(s)), s);
        Eigen::LLT<MatrixXd> lltx(X), lltz(Z);
        if (lltx.info() != Eigen::Success || lltz.info() != Eigen::Success) return false;
        MatrixXd Lx = lltx.matrixL();
        MatrixXd Lz = lltz.matrixL();
        Eigen::JacobiSVD<MatrixXd> svd(Lz.transpose() * Lx,
                                       Eigen::ComputeFullU | Eigen::ComputeFullV);
        VectorXd sig = svd.singularValues();
        if (sig.minCoeff() <= 0.0) return false;
        VectorXd isq = sig.cwiseSqrt().cwiseInverse();
        sc.R[b] = Lx * svd.matrixV() * isq.asDiagonal();
        sc.Rinv[b] = isq.asDiagonal() * svd.matrixU().transpose() * Lz.transpose();
        sc.lam_psd[b] = sig;
    }
    const int no = cone.nonneg_offset();
    sc.w_nonneg.resize(cone.nonneg_count);
    sc.lam_nonneg.resize(cone.nonneg_count);
    for (int i = 0; i < cone.nonneg_count; ++i) {
        const double xi = x(no + i), zi = z(no + i);
        if (xi <= 0.0 || zi <= 0.0) return false;
        sc.w_nonneg(i) = std::sqrt(xi / zi);
        sc.lam_nonneg(i) = std::sqrt(xi * zi);
    }
    return true;
}

enum class MapKind { W, Winv, WinvT };

// Apply the NT scaling map blockwise on the cone part; the free part is zeroed.
VectorXd apply_scaling(const ConeSpec& cone, const Scaling& sc, MapKind kind, const VectorXd& v) {
    VectorXd out = VectorXd::Zero(cone.scalar_dim());
    for (std::size_t b = 0; b < cone.psd_block_sizes.size(); ++b) {
        const int s = cone.psd_block_sizes[b];
        const int off = cone.psd_offset(static_cast<int>(b));
        MatrixXd M = svec_to_matrix(v.segment(off, svec_dim(s)), s);
        MatrixXd res;
        switch (kind) {
            case MapKind::W: res = sc.R[b].transpose() * M * sc.R[b]; break;
            case MapKind::Winv: res = sc.Rinv[b].transpose() * M * sc.Rinv[b]; break;
            case MapKind::WinvT: res = sc.Rinv[b] * M * sc.Rinv[b].transpose(); break;
        }
        res = 0.5 * (res + res.transpose().eval());
        out.segment(off, svec_dim(s)) = matrix_to_svec(res);
    }
    const int no = cone.nonneg_offset();
    for (int i = 0; i < cone.nonneg_count; ++i) {
        switch (kind) {
            case MapKind::W: out(no + i) = sc.w_nonneg(i) * v(no + i); break;
            case MapKind::Winv:
            case MapKind::WinvT: out(no + i) = v(no + i) / sc.w_nonneg(i); break;
        }
    }
    return out;
}

VectorXd lambda_vector(const ConeSpec& cone, const Scaling& sc) {
    VectorXd lam = VectorXd::Zero(cone.scalar_dim());
    for (std::size_t b = 0; b < cone.psd_block_sizes.size(); ++b) {
        const int s = cone.psd_block_sizes[b];
        int k = cone.psd_offset(static_cast<int>(b));
        for (int c = 0; c < s; ++c) {
            lam(k) = sc.lam_psd[b](c);
            k += s - c;
        }
    }
    lam.segment(cone.nonneg_offset(), cone.nonneg_count) = sc.lam_nonneg;
    return lam;
}

// Jordan product a o b: symmetrized matrix product on PSD blocks, entrywise on
// the orthant.
VectorXd jordan_product(const ConeSpec& cone, const VectorXd& a, const VectorXd& b) {
    VectorXd out = VectorXd::Zero(cone.scalar_dim());
    for (std::size_t blk = 0; blk < cone.psd_block_sizes.size(); ++blk) {
        const int s = cone.psd_block_sizes[blk];
        const int off = cone.psd_offset(static_cast<int>(blk));
        MatrixXd A = svec_to_matrix(a.segment(off, svec_dim(s)), s);
        MatrixXd B = svec_to_matrix(b.segment(off, svec_dim(s)), s);
        MatrixXd P = 0.5 * (A * B + B * A);
        out.segment(off, svec_dim(s)) = matrix_to_svec(P);
    }
    const int no = cone.nonneg_offset();
    for (int i = 0; i < cone.nonneg_count; ++i) out(no + i) = a(no + i) * b(no + i);
    return out;
}

// Solve lambda o u = d for u; lambda is diagonal in the scaled frame.
VectorXd lambda_divide(const ConeSpec& cone, const Scaling& sc, const VectorXd& d) {
    VectorXd out = VectorXd::Zero(cone.scalar_dim());
    for (std::size_t b = 0; b < cone.psd_block_sizes.size(); ++b) {
        const int s = cone.psd_block_sizes[b];
        const int off = cone.psd_offset(static_cast<int>(b));
        MatrixXd D = svec_to_matrix(d.segment(off, svec_dim(s)), s);
        const VectorXd& sig = sc.lam_psd[b];
        for (int r = 0; r < s; ++r)
            for (int c = 0; c < s; ++c) D(r, c) *= 2.0 / (sig(r) + sig(c));
        out.segment(off, svec_dim(s)) = matrix_to_svec(D);
    }
    const int no = cone.nonneg_offset();
    for (int i = 0; i < cone.nonneg_count; ++i) out(no + i) = d(no + i) / sc.lam_nonneg(i);
    return out;
}

// Largest t >= 0 limiting the step: lambda + alpha*dir stays in the cone for
// all alpha <= 1/t (t == 0 means the step is unbounded).
double max_step_scaled(const ConeSpec& cone, const Scaling& sc, const VectorXd& dir) {
    double t = 0.0;
    for (std::size_t b = 0; b < cone.psd_block_sizes.size(); ++b) {
        const int s = cone.psd_block_sizes[b];
        const int off = cone.psd_offset(static_cast<int>(b));
        MatrixXd D = svec_to_matrix(dir.segment(off, svec_dim(s)), s);
        const VectorXd isq = sc.lam_psd[b].cwiseSqrt().cwiseInverse();
        MatrixXd M = isq.asDiagonal() * D * isq.asDiagonal();
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(M, Eigen::EigenvaluesOnly);
        t = std::max(t, -es.eigenvalues().minCoeff());
    }
    const int no = cone.nonneg_offset();
    for (int i = 0; i < cone.nonneg_count; ++i) t = std::max(t, -dir(no + i) / sc.lam_nonneg(i));
    return t;
}

// H = W^-1 W^-T as a dense matrix on the full scalarized space (zero on the
// free part). For a PSD block this is the two-sided map X -> S X S with
// S = (R R')^-1.
MatrixXd scaling_hessian(const ConeSpec& cone, const Scaling& sc) {
    const int dim = cone.scalar_dim();
    MatrixXd H = MatrixXd::Zero(dim, dim);
    for (std::size_t b = 0; b < cone.psd_block_sizes.size(); ++b) {
        const int s = cone.psd_block_sizes[b];
        const int off = cone.psd_offset(static_cast<int>(b));
        const MatrixXd S = sc.Rinv[b].transpose() * sc.Rinv[b];
        int k = 0;
        for (int c = 0; c < s; ++c) {
            for (int r = c; r < s; ++r, ++k) {
                MatrixXd M;
                if (r == c) {
                    M = S.col(r) * S.col(r).transpose();
                } else {
                    M = (S.col(r) * S.col(c).transpose() + S.col(c) * S.col(r).transpose()) /
                        kSqrt2;
                }
                H.block(off, off + k, svec_dim(s), 1) = matrix_to_svec(M);
            }
        }
    }
    const int no = cone.nonneg_offset();
    for (int i = 0; i < cone.nonneg_count; ++i)
        H(no + i, no + i) = 1.0 / (sc.w_nonneg(i) * sc.w_nonneg(i));
    return H;
}

// Violation of dual-cone membership of a slack vector: negative eigenvalues
// and entries, plus the free part which must vanish.
double dual_cone_violation(const ConeSpec& cone, const VectorXd& slack) {
    double v = 0.0;
    for (std::size_t b = 0; b < cone.psd_block_sizes.size(); ++b) {
        const int s = cone.psd_block_sizes[b];
        const int off = cone.psd_offset(static_cast<int>(b));
        MatrixXd M = svec_to_matrix(slack.segment(off, svec_dim(s)), s);
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(M, Eigen::EigenvaluesOnly);
        v = std::max(v, -es.eigenvalues().minCoeff());
    }
    const int no = cone.nonneg_offset();
    for (int i = 0; i < cone.nonneg_count; ++i) v = std::max(v, -slack(no + i));
    const int fo = cone.free_offset();
    for (int i = 0; i < cone.free_count; ++i) v = std::max(v, std::abs(slack(fo + i)));
    return v;
}

// ---------------------------------------------------------------------------
// Presolve: deterministic dependent-row elimination via modified Gram-Schmidt
// with combination tracking, so an inconsistent dependency yields an exact
// Farkas certificate.
// ---------------------------------------------------------------------------

struct PresolveResult {
    std::vector<int> kept;
    bool infeasible = false;
    VectorXd farkas_y;  // full length; A'y ~ 0 and b'y = 1
    double farkas_residual = 0.0;
};

PresolveResult presolve_rows(const MatrixXd& A, const VectorXd& b) {
    const int m = static_cast<int>(A.rows());
    PresolveResult res;
    std::vector<VectorXd> q;          // orthonormal basis of kept row space
    std::vector<VectorXd> comb_of_q;  // q[k] expressed over kept original rows
    const double bnorm = (m > 0) ? b.cwiseAbs().maxCoeff() : 0.0;
    for (int i = 0; i < m; ++i) {
        VectorXd a = A.row(i).transpose();
        const double anorm = a.norm();
        VectorXd t = VectorXd::Zero(static_cast<int>(q.size()));
        VectorXd r = a;
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t k = 0; k < q.size(); ++k) {
                const double c = q[k].dot(r);
                t(static_cast<int>(k)) += c;
                r -= c * q[k];
            }
        }
        const double rnorm = r.norm();
        if (rnorm > 1e-8 * std::max(1.0, anorm)) {
            VectorXd comb = VectorXd::Zero(static_cast<int>(res.kept.size()) + 1);
            for (std::size_t k = 0; k < q.size(); ++k)
                comb.head(comb_of_q[k].size()) -= t(static_cast<int>(k)) * comb_of_q[k];
            comb(static_cast<int>(res.kept.size())) = 1.0;
            comb /= rnorm;
            res.kept.push_back(i);
            q.push_back(r / rnorm);
            comb_of_q.push_back(comb);
        } else {
            // dependent: a ~ sum_j comb_j * kept_row_j
            VectorXd comb = VectorXd::Zero(static_cast<int>(res.kept.size()));
            for (std::size_t k = 0; k < q.size(); ++k)
                comb.head(comb_of_q[k].size()) += t(static_cast<int>(k)) * comb_of_q[k];
            double brhs = 0.0;
            for (std::size_t j = 0; j < res.kept.size(); ++j)
                brhs += comb(static_cast<int>(j)) * b(res.kept[j]);
            const double mismatch = b(i) - brhs;
            const double consist_tol = 1e-8 * (1.0 + bnorm) * (1.0 + comb.cwiseAbs().sum());
            if (std::abs(mismatch) > consist_tol) {
                res.infeasible = true;
                res.farkas_y = VectorXd::Zero(m);
                const double s = 1.0 / mismatch;
                res.farkas_y(i) = s;
                for (std::size_t j = 0; j < res.kept.size(); ++j)
                    res.farkas_y(res.kept[j]) = -s * comb(static_cast<int>(j));
                res.farkas_residual = std::abs(s) * rnorm;
                return res;
            }
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Quasidefinite KKT solver: LDL' without pivoting on a statically regularized
// matrix, iterative refinement against the exact matrix.
// ---------------------------------------------------------------------------

struct KktSolver {
    MatrixXd Kexact;  // [H A'; A 0]
    MatrixXd L;       // unit lower triangular factor of the regularized K
    VectorXd d;
    int dim = 0, m = 0;

    bool factor(const MatrixXd& H, const MatrixXd& A) {
        dim = static_cast<int>(H.rows());
        m = static_cast<int>(A.rows());
        const int N = dim + m;
        Kexact.setZero(N, N);
        Kexact.topLeftCorner(dim, dim) = H;
        if (m > 0) {
            Kexact.bottomLeftCorner(m, dim) = A;
            Kexact.topRightCorner(dim, m) = A.transpose();
        }
        const double scale = std::max(1.0, Kexact.cwiseAbs().maxCoeff());
        const double delta = 1e-13 * scale;
        L = Kexact;
        for (int i = 0; i < dim; ++i) L(i, i) += delta;
        for (int i = dim; i < N; ++i) L(i, i) -= delta;
        d.resize(N);
        for (int j = 0; j < N; ++j) {
            double dj = L(j, j);
            if (j > 0) {
                VectorXd w = L.row(j).head(j).transpose().cwiseProduct(d.head(j));
                dj -= L.row(j).head(j).dot(w);
                if (j + 1 < N) L.col(j).tail(N - j - 1) -= L.bottomLeftCorner(N - j - 1, j) * w;
            }
            if (!std::isfinite(dj)) return false;
            // enforce the quasidefinite sign pattern; refinement absorbs the error
            if (j < dim && dj < delta) dj = delta;
            if (j >= dim && dj > -delta) dj = -delta;
            d(j) = dj;
            if (j + 1 < N) L.col(j).tail(N - j - 1) /= dj;
        }
        return true;
    }

    VectorXd solve_once(const VectorXd& rhs) const {
        VectorXd u = rhs;
        L.triangularView<Eigen::UnitLower>().solveInPlace(u);
        u.array() /= d.array();
        L.transpose().triangularView<Eigen::UnitUpper>().solveInPlace(u);
        return u;
    }

    VectorXd solve(const VectorXd& rhs) const {
        VectorXd u = solve_once(rhs);
        double prev = std::numeric_limits<double>::infinity();
        for (int it = 0; it < 6; ++it) {
            VectorXd r = rhs - Kexact.selfadjointView<Eigen::Lower>() * u;
            const double rn = r.lpNorm<Eigen::Infinity>();
            if (!(rn < prev * 0.5)) break;
            prev = rn;
            u += solve_once(r);
        }
        return u;
    }
};

struct Metrics {
    double pres = std::numeric_limits<double>::infinity();
    double dres = std::numeric_limits<double>::infinity();
    double gap = std::numeric_limits<double>::infinity();
    double worst() const { return std::max({pres, dres, gap}); }
};

Metrics honest_metrics(const ConeSpec& cone, const MatrixXd& Afull, const VectorXd& bfull,
                       const VectorXd& c, const VectorXd& xs, const VectorXd& ys, double bnorm1,
                       double cnorm1, double* pobj_out = nullptr, double* dobj_out = nullptr) {
    Metrics met;
    met.pres = (Afull * xs - bfull).lpNorm<Eigen::Infinity>() / bnorm1;
    VectorXd slack = c - Afull.transpose() * ys;
    met.dres = dual_cone_violation(cone, slack) / cnorm1;
    const double pobj = c.dot(xs);
    const double dobj = bfull.dot(ys);
    met.gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj));
    if (pobj_out) *pobj_out = pobj;
    if (dobj_out) *dobj_out = dobj;
    return met;
}

ConicSolution solve_impl(const ConicProblem& problem, const SolverSettings& settings,
                         int reduction_depth);

// ---------------------------------------------------------------------------
// Partial facial reduction (diagonal variant). When the path-following stalls,
// look for a row combination mu with A'mu supported on sign-constrained
// coordinates (PSD diagonals, orthant entries), (A'mu) >= 0 there and
// b'mu = 0. Such a certificate forces those coordinates to vanish on the whole
// feasible set, so the cone can be restricted to the corresponding face and
// the problem re-solved with an interior restored.
// ---------------------------------------------------------------------------

struct FaceMap {
    ConeSpec reduced_cone;
    std::vector<int> old_to_new;  // -1 when the coordinate is forced to zero
    int zeroed = 0;
};

std::optional<FaceMap> find_diagonal_face(const ConeSpec& cone, const MatrixXd& Afull,
                                          const VectorXd& bfull) {
    const int dim = cone.scalar_dim();
    const int m = static_cast<int>(Afull.rows());
    if (m == 0) return std::nullopt;

    // sign-constrained coordinates: PSD diagonals and orthant entries
    std::vector<int> diag_coords;
    for (std::size_t b = 0; b < cone.psd_block_sizes.size(); ++b) {
        const int s = cone.psd_block_sizes[b];
        int k = cone.psd_offset(static_cast<int>(b));
        for (int c = 0; c < s; ++c) {
            diag_coords.push_back(k);
            k += s - c;
        }
    }
    for (int i = 0; i < cone.nonneg_count; ++i) diag_coords.push_back(cone.nonneg_offset() + i);
    const int nd = static_cast<int>(diag_coords.size());
    if (nd == 0) return std::nullopt;
    std::vector<int> diag_pos(dim, -1);
    for (int i = 0; i < nd; ++i) diag_pos[diag_coords[i]] = i;

    // feasibility LP: s >= 0 (nd vars), mu free (m vars);
    //   (A'mu)_j - s_{pos(j)} = 0 on diagonal coords, (A'mu)_j = 0 elsewhere,
    //   b'mu = 0, sum s = 1.
    ConicProblem lp;
    lp.cone.nonneg_count = nd;
    lp.cone.free_count = m;
    lp.objective = VectorXd::Zero(nd + m);
    for (int j = 0; j < dim; ++j) {
        ConstraintRow row;
        for (int r = 0; r < m; ++r)
            if (Afull(r, j) != 0.0) row.entries.push_back({nd + r, Afull(r, j)});
        if (diag_pos[j] >= 0) row.entries.push_back({diag_pos[j], -1.0});
        if (row.entries.empty()) continue;
        row.rhs = 0.0;
        lp.rows.push_back(std::move(row));
    }
    {
        ConstraintRow row;
        for (int r = 0; r < m; ++r)
            if (bfull(r) != 0.0) row.entries.push_back({nd + r, bfull(r)});
        if (!row.entries.empty()) {
            row.rhs = 0.0;
            lp.rows.push_back(std::move(row));
        }
    }
    {
        ConstraintRow row;
        for (int i = 0; i < nd; ++i) row.entries.push_back({i, 1.0});
        row.rhs = 1.0;
        lp.rows.push_back(std::move(row));
    }
    SolverSettings lpset;
    lpset.tol = 1e-9;
    lpset.max_iter = 100;
    const ConicSolution lpsol = solve_impl(lp, lpset, 0);
    if (lpsol.status != SolveStatus::optimal) return std::nullopt;

    const VectorXd s = lpsol.primal.head(nd);
    const double smax = s.maxCoeff();
    if (!(smax > 0.0)) return std::nullopt;
    std::vector<int> zero_set;  // positions within diag_coords
    for (int i = 0; i < nd; ++i)
        if (s(i) > 1e-4 * smax) zero_set.push_back(i);
    if (zero_set.empty()) return std::nullopt;

    // Polish: recompute mu by minimum-norm least squares with the support
    // fixed (the certificate family may be rank deficient); shrink the support
    // when a coordinate's certificate value collapses, then verify essentially
    // exactly before trusting the face.
    VectorXd mu, atmu;
    std::vector<char> in_zero(nd, 0);
    for (int round = 0; round < 3; ++round) {
        std::fill(in_zero.begin(), in_zero.end(), 0);
        for (int i : zero_set) in_zero[i] = 1;
        MatrixXd F(dim + 2, m);
        VectorXd rhs = VectorXd::Zero(dim + 2);
        int nr = 0;
        VectorXd sum_zero_row = VectorXd::Zero(m);
        for (int j = 0; j < dim; ++j) {
            const int dp = diag_pos[j];
            if (dp >= 0 && in_zero[dp]) {
                sum_zero_row += Afull.col(j);
                continue;
            }
            F.row(nr++) = Afull.col(j).transpose();  // (A'mu)_j = 0
        }
        F.row(nr) = bfull.transpose();
        rhs(nr++) = 0.0;
        F.row(nr) = sum_zero_row.transpose();
        rhs(nr++) = 1.0;
        mu = F.topRows(nr).completeOrthogonalDecomposition().solve(rhs.head(nr));
        atmu = Afull.transpose() * mu;
        std::vector<int> keep;
        for (int i : zero_set)
            if (atmu(diag_coords[i]) > 1e-3 / static_cast<double>(zero_set.size()))
                keep.push_back(i);
        if (keep.empty()) return std::nullopt;
        if (keep.size() == zero_set.size()) break;
        zero_set = keep;
    }

    const double ref = 1e-9 * (1.0 + mu.cwiseAbs().sum()) *
                       std::max(1.0, Afull.cwiseAbs().maxCoeff());
    double min_on_zero = std::numeric_limits<double>::infinity();
    for (int j = 0; j < dim; ++j) {
        const int dp = diag_pos[j];
        if (dp >= 0 && in_zero[dp]) {
            min_on_zero = std::min(min_on_zero, atmu(j));
        } else if (std::abs(atmu(j)) > ref) {
            return std::nullopt;
        }
    }
    if (std::abs(bfull.dot(mu)) > ref) return std::nullopt;
    if (!(min_on_zero > 1e-3 / static_cast<double>(zero_set.size()))) return std::nullopt;

    // build the face: drop zeroed rows/cols of PSD blocks, drop zeroed orthant
    // coordinates
    FaceMap fm;
    fm.old_to_new.assign(dim, -1);
    std::vector<char> coord_zero(dim, 0);
    for (int i : zero_set) coord_zero[diag_coords[i]] = 1;
    int new_idx = 0;
    for (std::size_t b = 0; b < cone.psd_block_sizes.size(); ++b) {
        const int side = cone.psd_block_sizes[b];
        const int off = cone.psd_offset(static_cast<int>(b));
        std::vector<char> row_zero(side, 0);
        for (int c = 0; c < side; ++c)
            if (coord_zero[off + svec_index(side, c, c)]) row_zero[c] = 1;
        std::vector<int> keep;
        for (int c = 0; c < side; ++c)
            if (!row_zero[c]) keep.push_back(c);
        const int nside = static_cast<int>(keep.size());
        if (nside > 0) fm.reduced_cone.psd_block_sizes.push_back(nside);
        std::vector<int> new_of_old(side, -1);
        for (int c = 0; c < nside; ++c) new_of_old[keep[c]] = c;
        for (int c = 0; c < side; ++c)
            for (int r = c; r < side; ++r) {
                const int old = off + svec_index(side, r, c);
                if (row_zero[r] || row_zero[c]) continue;
                fm.old_to_new[old] = new_idx + svec_index(nside, new_of_old[r], new_of_old[c]);
            }
        new_idx += svec_dim(nside);
    }
    const int no = cone.nonneg_offset();
    int nn = 0;
    for (int i = 0; i < cone.nonneg_count; ++i)
        if (!coord_zero[no + i]) fm.old_to_new[no + i] = new_idx + nn++;
    fm.reduced_cone.nonneg_count = nn;
    new_idx += nn;
    const int fo = cone.free_offset();
    for (int i = 0; i < cone.free_count; ++i) fm.old_to_new[fo + i] = new_idx + i;
    fm.reduced_cone.free_count = cone.free_count;
    for (int j = 0; j < dim; ++j)
        if (fm.old_to_new[j] < 0) ++fm.zeroed;
    if (fm.zeroed == 0) return std::nullopt;
    return fm;
}

// ---------------------------------------------------------------------------
// Homogeneous self-dual path-following
// ---------------------------------------------------------------------------

ConicSolution run_ipm(const ConicProblem& problem, const SolverSettings& settings,
                      const MatrixXd& Afull, const VectorXd& bfull, const PresolveResult& pre) {
    const ConeSpec& cone = problem.cone;
    const int dim = cone.scalar_dim();
    const int m_full = static_cast<int>(Afull.rows());
    const int m = static_cast<int>(pre.kept.size());
    const VectorXd& c = problem.objective;

    ConicSolution sol;
    sol.primal = VectorXd::Zero(dim);
    sol.dual = VectorXd::Zero(m_full);
    sol.dual_slack = VectorXd::Zero(dim);

    MatrixXd A(m, dim);
    VectorXd b(m);
    for (int k = 0; k < m; ++k) {
        A.row(k) = Afull.row(pre.kept[k]);
        b(k) = bfull(pre.kept[k]);
    }

    if (m == 0 && c.lpNorm<Eigen::Infinity>() == 0.0) {
        sol.status = SolveStatus::optimal;
        return sol;
    }

    const double bnorm1 = 1.0 + bfull.lpNorm<Eigen::Infinity>();
    const double cnorm1 = 1.0 + c.lpNorm<Eigen::Infinity>();
    const int nu = cone.barrier_nu();

    VectorXd x = unit_point(cone);
    VectorXd z = unit_point(cone);
    VectorXd y = VectorXd::Zero(m);
    double tau = 1.0, kappa = 1.0;

    const double tol = settings.tol;
    Metrics best;
    VectorXd best_x = x / tau, best_y, best_z;
    best_y = VectorXd::Zero(m);
    best_z = c;
    int last_improve = 0;

    auto scatter_dual = [&](const VectorXd& ykept) {
        VectorXd out = VectorXd::Zero(m_full);
        for (int k = 0; k < m; ++k) out(pre.kept[k]) = ykept(k);
        return out;
    };

    Scaling sc;
    KktSolver kkt;

    for (int iter = 0;; ++iter) {
        // --- honest convergence metrics on the de-homogenized iterate ---
        VectorXd xs = x / tau;
        VectorXd ys = y / tau;
        double pobj = 0.0, dobj = 0.0;
        const VectorXd ysfull = scatter_dual(ys);
        Metrics met = honest_metrics(cone, Afull, bfull, c, xs, ysfull, bnorm1, cnorm1, &pobj,
                                     &dobj);

        if (met.worst() < best.worst()) {
            best = met;
            best_x = xs;
            best_y = ys;
            best_z = c - A.transpose() * ys;
            last_improve = iter;
        }

        if (settings.verbose)
            std::fprintf(stderr,
                         "it %3d  pres %9.2e dres %9.2e gap %9.2e  pobj % .6e  tau %8.2e "
                         "kappa %8.2e\n",
                         iter, met.pres, met.dres, met.gap, pobj, tau, kappa);

        if (met.pres <= tol && met.dres <= tol && met.gap <= tol) {
            sol.status = SolveStatus::optimal;
            sol.primal = xs;
            sol.dual = ysfull;
            sol.dual_slack = c - Afull.transpose() * ysfull;
            sol.primal_obj = pobj;
            sol.dual_obj = dobj;
            sol.residuals = {met.pres, met.dres, met.gap};
            sol.iterations = iter;
            return sol;
        }

        // --- infeasibility certificates ---
        const double by = b.dot(y);
        if (by > tol * std::max(1.0, y.lpNorm<Eigen::Infinity>())) {
            VectorXd yhat = y / by;
            VectorXd slack = -(A.transpose() * yhat);
            const double viol = dual_cone_violation(cone, slack);
            if (viol <= tol) {
                sol.status = SolveStatus::primal_infeasible;
                sol.dual = scatter_dual(yhat);
                sol.dual_slack = slack;
                sol.residuals = {viol, viol, 0.0};
                sol.iterations = iter;
                return sol;
            }
        }
        const double cx = c.dot(x);
        if (cx < -tol * std::max(1.0, x.lpNorm<Eigen::Infinity>())) {
            VectorXd xhat = x / (-cx);
            const double viol = (Afull * xhat).lpNorm<Eigen::Infinity>();
            if (viol <= tol) {
                sol.status = SolveStatus::dual_infeasible;
                sol.primal = xhat;
                sol.residuals = {viol, viol, 0.0};
                sol.iterations = iter;
                return sol;
            }
        }

        if (iter >= settings.max_iter || iter - last_improve > 30) break;

        // --- Nesterov-Todd scaling and KKT factorization ---
        if (!compute_scaling(cone, x, z, sc)) break;
        const VectorXd lam = lambda_vector(cone, sc);
        const double mu = (cone_dot(cone, x, z) + tau * kappa) / (nu + 1);
        if (mu < 1e-300) break;

        const MatrixXd H = scaling_hessian(cone, sc);
        if (!kkt.factor(H, A)) break;

        // direction against the constant tau column
        VectorXd rhs2(dim + m);
        rhs2.head(dim) = -c;
        rhs2.tail(m) = b;
        const VectorXd sol2 = kkt.solve(rhs2);
        const VectorXd dx2 = sol2.head(dim);
        const VectorXd w2 = sol2.tail(m);

        // residuals of the self-dual embedding
        const VectorXd Rp = A * x - b * tau;
        VectorXd Rd = -(A.transpose() * y) + c * tau;
        Rd.head(cone.cone_dim()) -= z.head(cone.cone_dim());
        const double Rg = b.dot(y) - c.dot(x) - kappa;

        auto newton_step = [&](double tf, const VectorXd& ds, double dk, VectorXd& dx,
                               VectorXd& dy, VectorXd& dz, double& dtau, double& dkappa) -> bool {
            const VectorXd ghat = lambda_divide(cone, sc, ds);
            const VectorXd wgh = apply_scaling(cone, sc, MapKind::Winv, ghat);
            VectorXd rhs1(dim + m);
            rhs1.head(dim) = -tf * Rd + wgh;
            rhs1.tail(m) = -tf * Rp;
            const VectorXd sol1 = kkt.solve(rhs1);
            const VectorXd dx1 = sol1.head(dim);
            const VectorXd w1 = sol1.tail(m);
            const double rg_hat = -tf * Rg + dk / tau;
            const double denom = kappa / tau - c.dot(dx2) - b.dot(w2);
            if (denom == 0.0 || !std::isfinite(denom)) return false;
            dtau = (rg_hat + c.dot(dx1) + b.dot(w1)) / denom;
            dx = dx1 + dtau * dx2;
            dy = -(w1 + dtau * w2);
            dz = wgh - H * dx;
            dz.tail(cone.free_count).setZero();
            dkappa = (dk - kappa * dtau) / tau;
            return !(dx.hasNaN() || dy.hasNaN() || dz.hasNaN() || !std::isfinite(dtau) ||
                     !std::isfinite(dkappa));
        };

        // predictor (affine)
        VectorXd dx_aff, dy_aff, dz_aff;
        double dtau_aff = 0.0, dkappa_aff = 0.0;
        const VectorXd lamsq = jordan_product(cone, lam, lam);
        if (!newton_step(1.0, -lamsq, -tau * kappa, dx_aff, dy_aff, dz_aff, dtau_aff, dkappa_aff))
            break;

        const VectorXd dsx_aff = apply_scaling(cone, sc, MapKind::WinvT, dx_aff);
        const VectorXd dsz_aff = apply_scaling(cone, sc, MapKind::W, dz_aff);
        double tt = max_step_scaled(cone, sc, dsx_aff);
        tt = std::max(tt, max_step_scaled(cone, sc, dsz_aff));
        if (dtau_aff < 0.0) tt = std::max(tt, -dtau_aff / tau);
        if (dkappa_aff < 0.0) tt = std::max(tt, -dkappa_aff / kappa);
        const double alpha_aff = (tt > 0.0) ? std::min(1.0, 1.0 / tt) : 1.0;
        const double sigma = std::min(1.0, std::pow(1.0 - alpha_aff, 3));

        // corrector (combined)
        const VectorXd ds =
            sigma * mu * unit_point(cone) - lamsq - jordan_product(cone, dsx_aff, dsz_aff);
        const double dk = sigma * mu - tau * kappa - dtau_aff * dkappa_aff;
        VectorXd dx, dy, dz;
        double dtau = 0.0, dkappa = 0.0;
        if (!newton_step(1.0 - sigma, ds, dk, dx, dy, dz, dtau, dkappa)) break;

        const VectorXd dsx = apply_scaling(cone, sc, MapKind::WinvT, dx);
        const VectorXd dsz = apply_scaling(cone, sc, MapKind::W, dz);
        double tc = max_step_scaled(cone, sc, dsx);
        tc = std::max(tc, max_step_scaled(cone, sc, dsz));
        if (dtau < 0.0) tc = std::max(tc, -dtau / tau);
        if (dkappa < 0.0) tc = std::max(tc, -dkappa / kappa);
        double alpha = (tc > 0.0) ? std::min(1.0, 0.99 / tc) : 1.0;

        // the step must keep both cone blocks factorizable
        bool stepped = false;
        for (int tries = 0; tries < 30; ++tries) {
            VectorXd xn = x + alpha * dx;
            VectorXd zn = z + alpha * dz;
            const double taun = tau + alpha * dtau;
            const double kappan = kappa + alpha * dkappa;
            Scaling trial;
            if (taun > 0.0 && kappan > 0.0 && compute_scaling(cone, xn, zn, trial)) {
                x = std::move(xn);
                z = std::move(zn);
                y += alpha * dy;
                tau = taun;
                kappa = kappan;
                stepped = true;
                break;
            }
            alpha *= 0.8;
        }
        if (!stepped || alpha < 1e-13) break;

        // The embedding is homogeneous: renormalize so the iterate scale stays
        // O(1) even when tau and kappa drift towards zero together.
        const double scale =
            std::max({tau, kappa, x.lpNorm<Eigen::Infinity>(), z.lpNorm<Eigen::Infinity>()});
        if (scale > 0.0 && std::isfinite(scale)) {
            const double s = 1.0 / scale;
            x *= s;
            y *= s;
            z *= s;
            tau *= s;
            kappa *= s;
        }
    }

    // no certificate reached: report the best iterate seen
    sol.status = SolveStatus::numerical_trouble;
    sol.primal = best_x;
    sol.dual = scatter_dual(best_y);
    sol.dual_slack = c - Afull.transpose() * sol.dual;
    sol.primal_obj = c.dot(best_x);
    sol.dual_obj = bfull.dot(sol.dual);
    sol.residuals = {best.pres, best.dres, best.gap};
    sol.iterations = settings.max_iter;
    return sol;
}

ConicSolution solve_impl(const ConicProblem& problem, const SolverSettings& settings,
                         int reduction_depth) {
    const ConeSpec& cone = problem.cone;
    const int dim = cone.scalar_dim();
    const int m_full = static_cast<int>(problem.rows.size());
    if (settings.tol <= 0.0) throw std::invalid_argument("solver tolerance must be positive");

    MatrixXd Afull = MatrixXd::Zero(m_full, dim);
    VectorXd bfull = VectorXd::Zero(m_full);
    for (int r = 0; r < m_full; ++r) {
        for (const auto& [idx, coef] : problem.rows[r].entries) {
            if (idx < 0 || idx >= dim) throw std::invalid_argument("row index out of range");
            Afull(r, idx) += coef;
        }
        bfull(r) = problem.rows[r].rhs;
    }
    if (problem.objective.size() != dim)
        throw std::invalid_argument("objective dimension mismatch");

    ConicSolution sol;
    sol.primal = VectorXd::Zero(dim);
    sol.dual = VectorXd::Zero(m_full);
    sol.dual_slack = VectorXd::Zero(dim);
    if (dim == 0) {
        sol.status = SolveStatus::optimal;
        return sol;
    }

    const PresolveResult pre = presolve_rows(Afull, bfull);
    if (pre.infeasible) {
        sol.status = SolveStatus::primal_infeasible;
        sol.dual = pre.farkas_y;
        sol.dual_slack = -(Afull.transpose() * pre.farkas_y);
        sol.residuals = {pre.farkas_residual, pre.farkas_residual, 0.0};
        return sol;
    }

    sol = run_ipm(problem, settings, Afull, bfull, pre);
    if (sol.status != SolveStatus::numerical_trouble || reduction_depth <= 0) return sol;

    // stalled: attempt a facial reduction and re-solve on the face
    const auto face = find_diagonal_face(cone, Afull, bfull);
    if (!face) return sol;

    ConicProblem red;
    red.cone = face->reduced_cone;
    const int rdim = red.cone.scalar_dim();
    red.objective = VectorXd::Zero(rdim);
    for (int j = 0; j < dim; ++j)
        if (face->old_to_new[j] >= 0) red.objective(face->old_to_new[j]) = problem.objective(j);
    red.rows.reserve(problem.rows.size());
    for (const auto& row : problem.rows) {
        ConstraintRow nr;
        nr.rhs = row.rhs;
        for (const auto& [idx, coef] : row.entries)
            if (face->old_to_new[idx] >= 0) nr.entries.push_back({face->old_to_new[idx], coef});
        red.rows.push_back(std::move(nr));
    }

    const ConicSolution rsol = solve_impl(red, settings, reduction_depth - 1);

    auto lift_primal = [&](const VectorXd& xr) {
        VectorXd xo = VectorXd::Zero(dim);
        for (int j = 0; j < dim; ++j)
            if (face->old_to_new[j] >= 0) xo(j) = xr(face->old_to_new[j]);
        return xo;
    };

    const double bnorm1 = 1.0 + bfull.lpNorm<Eigen::Infinity>();
    const double cnorm1 = 1.0 + problem.objective.lpNorm<Eigen::Infinity>();

    if (rsol.status == SolveStatus::optimal || rsol.status == SolveStatus::numerical_trouble) {
        ConicSolution out;
        out.primal = lift_primal(rsol.primal);
        out.dual = rsol.dual;
        out.dual_slack = problem.objective - Afull.transpose() * rsol.dual;
        double pobj = 0.0, dobj = 0.0;
        const Metrics met = honest_metrics(cone, Afull, bfull, problem.objective, out.primal,
                                           out.dual, bnorm1, cnorm1, &pobj, &dobj);
        out.primal_obj = pobj;
        out.dual_obj = dobj;
        out.residuals = {met.pres, met.dres, met.gap};
        out.iterations = rsol.iterations;
        out.status = (met.pres <= settings.tol && met.dres <= settings.tol &&
                      met.gap <= settings.tol)
                         ? SolveStatus::optimal
                         : SolveStatus::numerical_trouble;
        // A clean solve on the face settles the primal side even when the
        // original dual residual cannot be met (dual unattained); fall back to
        // the stalled iterate only when the face solve stalled too and looks
        // worse.
        if (rsol.status == SolveStatus::numerical_trouble &&
            out.status == SolveStatus::numerical_trouble &&
            sol.residuals.primal_feas + sol.residuals.dual_feas + sol.residuals.gap <
                met.pres + met.dres + met.gap)
            return sol;
        return out;
    }
    if (rsol.status == SolveStatus::dual_infeasible) {
        // an unbounded ray on the face lifts exactly
        ConicSolution out = rsol;
        out.primal = lift_primal(rsol.primal);
        out.dual_slack = VectorXd::Zero(dim);
        return out;
    }
    // primal infeasibility on the face: valid for the original problem iff the
    // Farkas certificate lifts within tolerance
    VectorXd slack = -(Afull.transpose() * rsol.dual);
    const double viol = dual_cone_violation(cone, slack);
    double byv = bfull.dot(rsol.dual);
    if (byv > 0.0 && viol / byv <= settings.tol * 10) {
        ConicSolution out = rsol;
        out.dual /= byv;
        out.dual_slack = slack / byv;
        out.residuals = {viol / byv, viol / byv, 0.0};
        return out;
    }
    return sol;
}

}  // namespace

ConicSolution solve(const ConicProblem& problem, const SolverSettings& settings) {
    return solve_impl(problem, settings, 3);
}

ResidualReport check_residuals(const ConicProblem& problem, const ConicSolution& solution) {
    const ConeSpec& cone = problem.cone;
    const int dim = cone.scalar_dim();
    const int m = static_cast<int>(problem.rows.size());
    if (solution.primal.size() != dim || solution.dual.size() != m)
        throw std::invalid_argument("check_residuals: dimension mismatch");

    ResidualReport rep;
    double primal_inf = 0.0;
    for (int r = 0; r < m; ++r) {
        double ax = 0.0;
        for (const auto& [idx, coef] : problem.rows[r].entries) ax += coef * solution.primal(idx);
        primal_inf = std::max(primal_inf, std::abs(ax - problem.rows[r].rhs));
    }
    rep.primal_inf_norm = primal_inf;

    VectorXd slack = problem.objective;
    for (int r = 0; r < m; ++r)
        for (const auto& [idx, coef] : problem.rows[r].entries)
            slack(idx) -= coef * solution.dual(r);

    double min_eig = 0.0;
    bool has_psd = false;
    for (std::size_t b = 0; b < cone.psd_block_sizes.size(); ++b) {
        const int s = cone.psd_block_sizes[b];
        const int off = cone.psd_offset(static_cast<int>(b));
        Eigen::MatrixXd M = svec_to_matrix(slack.segment(off, svec_dim(s)), s);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
        const double me = es.eigenvalues().minCoeff();
        min_eig = has_psd ? std::min(min_eig, me) : me;
        has_psd = true;
    }
    rep.dual_slack_min_eig = has_psd ? min_eig : 0.0;

    const int no = cone.nonneg_offset();
    double nn_min = 0.0;
    for (int i = 0; i < cone.nonneg_count; ++i)
        nn_min = (i == 0) ? slack(no + i) : std::min(nn_min, slack(no + i));
    rep.nonneg_slack_min = cone.nonneg_count > 0 ? nn_min : 0.0;

    const int fo = cone.free_offset();
    double fmax = 0.0;
    for (int i = 0; i < cone.free_count; ++i) fmax = std::max(fmax, std::abs(slack(fo + i)));
    rep.free_slack_abs_max = fmax;

    double by = 0.0;
    for (int r = 0; r < m; ++r) by += problem.rows[r].rhs * solution.dual(r);
    rep.gap_abs = std::abs(problem.objective.dot(solution.primal) - by);
    return rep;
}

}  // namespace msos
