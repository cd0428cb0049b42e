#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace msos {

/// Cone layout for a conic program in standard primal form
///     min c'x   s.t.  A x = b,   x in K,
/// where K is a product of PSD blocks, a nonnegative orthant and a free part,
/// scalarized in that order. Symmetric blocks are stored as lower-triangular
/// columns with off-diagonal entries scaled by sqrt(2) (svec), so the PSD
/// trace inner product equals the plain dot product on the scalarized vector.
struct ConeSpec {
    std::vector<int> psd_block_sizes;
    int nonneg_count = 0;
    int free_count = 0;

    int scalar_dim() const;
    int cone_dim() const;  // scalar_dim minus the free part
    int psd_offset(int block) const;
    int nonneg_offset() const;
    int free_offset() const;
    /// Barrier degree: sum of PSD block sides plus nonneg count.
    int barrier_nu() const;
};

int svec_dim(int side);
/// Index of entry (row, col), row >= col, within one svec block.
int svec_index(int side, int row, int col);
Eigen::MatrixXd svec_to_matrix(const Eigen::Ref<const Eigen::VectorXd>& v, int side);
Eigen::VectorXd matrix_to_svec(const Eigen::Ref<const Eigen::MatrixXd>& m);

struct ConstraintRow {
    std::vector<std::pair<int, double>> entries;  // (scalarized index, coefficient)
    double rhs = 0.0;
};

struct ConicProblem {
    ConeSpec cone;
    Eigen::VectorXd objective;  // size scalar_dim
    std::vector<ConstraintRow> rows;

    /// Line-oriented text dump (cone spec, objective, then one line per row)
    /// for diffing assemblies.
    std::string debug_dump() const;
};

enum class SolveStatus { optimal, primal_infeasible, dual_infeasible, numerical_trouble };
const char* to_string(SolveStatus s);

struct SolverSettings {
    double tol = 1e-8;
    int max_iter = 200;
    bool verbose = false;  // per-iteration trace on stderr
};

struct Residuals {
    double primal_feas = 0.0;
    double dual_feas = 0.0;
    double gap = 0.0;
};

struct ConicSolution {
    SolveStatus status = SolveStatus::numerical_trouble;
    Eigen::VectorXd primal;      // x (scaled by 1/tau); Farkas ray when dual_infeasible
    Eigen::VectorXd dual;        // y, one entry per input row; Farkas ray when primal_infeasible
    Eigen::VectorXd dual_slack;  // z = c - A'y on the cone part (zero on free part)
    double primal_obj = 0.0;
    double dual_obj = 0.0;
    Residuals residuals;
    int iterations = 0;
};

ConicSolution solve(const ConicProblem& problem, const SolverSettings& settings = {});

/// From-scratch residual recomputation that does not trust solver internals.
struct ResidualReport {
    double primal_inf_norm = 0.0;      // ||Ax - b||_inf
    double dual_slack_min_eig = 0.0;   // min eigenvalue over PSD blocks of c - A'y (0 if none)
    double nonneg_slack_min = 0.0;     // min entry of the nonneg part of c - A'y (0 if none)
    double free_slack_abs_max = 0.0;   // ||(c - A'y)_free||_inf
    double gap_abs = 0.0;              // |c'x - b'y|
};
ResidualReport check_residuals(const ConicProblem& problem, const ConicSolution& solution);

}  // namespace msos
