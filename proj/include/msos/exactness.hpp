#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "msos/relaxation.hpp"

namespace msos {

struct Tolerances {
    double feas_tol = 1e-6;
    double value_tol = 1e-6;
    double member_tol = 1e-7;
};

/// Axis-aligned box, used by the grid value oracle.
struct Box {
    std::vector<double> lo, hi;
};

struct RelaxationOutcome {
    double value = 0.0;
    Eigen::VectorXd moments;  // y over the moment index
    Point candidate;          // first-order moments
    SolveStatus solver_status = SolveStatus::numerical_trouble;
    /// Independently re-checked: the moment vector satisfies the relaxation
    /// rows and PSD blocks well enough to read value/candidate off it even
    /// when the solver could not certify full optimality.
    bool primal_usable = false;
    double primal_residual = 0.0;
};

RelaxationOutcome solve_relaxation(const Pop& pop, const Polynomial& f, int r,
                                   const SolverSettings& settings = {});

enum class Classification { exact, value_exact_dual_unattained, not_exact, undetermined };
const char* to_string(Classification c);

struct GramBlock {
    std::string label;  // "s0", "s1", ...
    bool is_gram = true;
    Eigen::MatrixXd gram;          // when is_gram
    std::vector<double> eq_coeffs;  // when the weight is a sign-free eq weight
};

struct ExactnessCertificate {
    Classification classification = Classification::undetermined;
    Point x_hat;
    double v_hat = 0.0;
    std::map<std::string, double> residuals;
    std::vector<GramBlock> gram_data;
    SolveStatus relaxation_status = SolveStatus::numerical_trouble;
    MemberVerdict membership_verdict = MemberVerdict::undetermined;
};

/// Full certification pipeline: solve the relaxation, check the Dirac
/// candidate, the value gap, and dual attainment via Q-membership of the
/// shifted objective. A bounding box enables the relaxation-gap test that
/// separates not_exact from undetermined.
ExactnessCertificate certify_exactness(const Pop& pop, const Polynomial& f, int r,
                                       const Tolerances& tols,
                                       const std::optional<Box>& box = std::nullopt,
                                       int grid_resolution = 801);

struct SConeResult {
    MemberVerdict verdict = MemberVerdict::undetermined;
    double vanish_residual = 0.0;  // |f0(x_hat)|
    bool fast_path = false;        // rejected by the vanishing test alone
    QMembershipResult membership;
};

/// Membership of f0 in S_xhat(g)^r = {f in Q(g)^r : f(xhat) = 0}: Q-membership
/// with the vanishing-at-xhat row added to the matching system.
SConeResult s_cone_member(const Pop& pop, int r, const Point& x_hat, const Polynomial& f0,
                          const Tolerances& tols);

struct ExactnessMemberResult {
    MemberVerdict verdict = MemberVerdict::undetermined;
    Classification classification = Classification::undetermined;
    SConeResult s_route;
    bool s_route_ran = false;
    bool routes_agree = true;  // false only when both routes are determined and differ
};

/// Union-of-cones cross-check: the certification pipeline and the S-cone test
/// at the extracted minimizer must agree whenever both are determined.
ExactnessMemberResult exactness_cone_member(const Pop& pop, const Polynomial& f, int r,
                                            const Tolerances& tols,
                                            const std::optional<Box>& box = std::nullopt,
                                            int grid_resolution = 801);

/// Brute-force reference for v(f): minimum of f over the grid points of the
/// box that satisfy the constraints up to a slack scaled with the spacing.
/// Returns +infinity when no grid point qualifies.
double value_oracle_grid(const Pop& pop, const Polynomial& f, const Box& box, int resolution);

/// Slack used by the grid oracle for the given box/resolution.
double grid_slack(const Pop& pop, const Box& box, int resolution);

/// Grid points of the box satisfying the constraints up to grid_slack.
std::vector<Point> feasible_grid_points(const Pop& pop, const Box& box, int resolution);

}  // namespace msos
