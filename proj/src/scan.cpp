#include "msos/scan.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "msos/json_io.hpp"

namespace msos {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

Polynomial direction_objective(int n, double theta_deg) {
    const double th = theta_deg * kPi / 180.0;
    Polynomial f(n);
    f.add_term(Monomial::unit_var(n, 0), std::cos(th));
    f.add_term(Monomial::unit_var(n, 1), std::sin(th));
    return f;
}

const char* classification_color(Classification c) {
    switch (c) {
        case Classification::exact: return "#2e8b57";
        case Classification::value_exact_dual_unattained: return "#e8a23a";
        case Classification::not_exact: return "#d03030";
        case Classification::undetermined: return "#9e9e9e";
    }
    return "#000000";
}

}  // namespace

AngularScan exactness_scan(const Pop& pop, int r, int num_angles, const Tolerances& tols,
                           const Box& box, int grid_resolution) {
    if (pop.n != 2) throw std::invalid_argument("exactness_scan needs a two-variable pop");
    if (num_angles < 1) throw std::invalid_argument("need at least one angle");

    // the feasible grid is independent of the direction; compute it once
    const auto pts = feasible_grid_points(pop, box, grid_resolution);

    AngularScan scan;
    scan.order = r;
    scan.records.reserve(num_angles);
    for (int k = 0; k < num_angles; ++k) {
        const double theta = k * 360.0 / num_angles;
        const Polynomial f = direction_objective(pop.n, theta);
        const ExactnessCertificate cert =
            certify_exactness(pop, f, r, tols, box, grid_resolution);
        ScanRecord rec;
        rec.theta_deg = theta;
        rec.v_relax = cert.v_hat;
        rec.classification = cert.classification;
        double vo = std::numeric_limits<double>::infinity();
        for (const auto& x : pts) vo = std::min(vo, f.evaluate(x));
        rec.v_oracle = vo;
        scan.records.push_back(rec);
    }
    return scan;
}

BoundaryPolyline relaxation_boundary(const Pop& pop, int r, int num_angles) {
    if (pop.n != 2) throw std::invalid_argument("relaxation_boundary needs a two-variable pop");
    if (num_angles < 1) throw std::invalid_argument("need at least one angle");

    BoundaryPolyline poly;
    poly.order = r;
    poly.points.reserve(num_angles);
    for (int k = 0; k < num_angles; ++k) {
        const double theta = k * 360.0 / num_angles;
        // support function: maximize <u, (y1,y2)> = minimize <-u, (y1,y2)>
        Polynomial obj = direction_objective(pop.n, theta).negate();
        const RelaxationProblem rp = build_moment_relaxation(pop, obj, r);
        const ConicSolution sol = solve(rp.conic);
        BoundaryPoint bp;
        bp.theta_deg = theta;
        if (sol.status == SolveStatus::optimal) {
            const int yoff = rp.moment_var_offset;
            bp.y1 = sol.primal(yoff + rp.index.index_of(Monomial::unit_var(2, 0)));
            bp.y2 = sol.primal(yoff + rp.index.index_of(Monomial::unit_var(2, 1)));
            bp.status = "ok";
        } else if (sol.status == SolveStatus::dual_infeasible) {
            bp.status = "unbounded";
        } else {
            // weak unboundedness carries no improving-ray certificate; probe
            // whether an absurdly large support value is still feasible
            ConicProblem probe = rp.conic;
            probe.objective.setZero();
            ConstraintRow cr;
            const int yoff = rp.moment_var_offset;
            cr.entries.push_back(
                {yoff + rp.index.index_of(Monomial::unit_var(2, 0)), -obj.coefficient(Monomial::unit_var(2, 0))});
            cr.entries.push_back(
                {yoff + rp.index.index_of(Monomial::unit_var(2, 1)), -obj.coefficient(Monomial::unit_var(2, 1))});
            cr.rhs = 1e3;
            probe.rows.push_back(std::move(cr));
            bp.status = (solve(probe).status == SolveStatus::optimal) ? "unbounded" : "failed";
        }
        poly.points.push_back(bp);
    }
    return poly;
}

void write_scan_csv(const AngularScan& scan, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << "theta_deg,v_relax,v_oracle,classification\n";
    for (const auto& rec : scan.records)
        os << fmt_double(rec.theta_deg) << "," << fmt_double(rec.v_relax) << ","
           << fmt_double(rec.v_oracle) << "," << to_string(rec.classification) << "\n";
    if (!os.flush()) throw std::runtime_error("write failed: " + path);
}

void write_boundary_csv(const BoundaryPolyline& poly, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << "theta_deg,y1,y2,status\n";
    for (const auto& p : poly.points)
        os << fmt_double(p.theta_deg) << "," << fmt_double(p.y1) << "," << fmt_double(p.y2) << ","
           << p.status << "\n";
    if (!os.flush()) throw std::runtime_error("write failed: " + path);
}

void write_svg(const AngularScan& scan, const BoundaryPolyline& poly,
               const std::vector<std::array<double, 2>>& feasible_points,
               const std::string& path) {
    double xmin = -1.0, xmax = 1.0, ymin = -1.0, ymax = 1.0;
    auto grow = [&](double x, double y) {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    };
    for (const auto& p : poly.points)
        if (p.status == "ok") grow(p.y1, p.y2);
    for (const auto& p : feasible_points) grow(p[0], p[1]);
    const double margin = 0.1 * std::max(xmax - xmin, ymax - ymin);
    xmin -= margin;
    xmax += margin;
    ymin -= margin;
    ymax += margin;
    const double ray_len = 0.45 * std::min(xmax - xmin, ymax - ymin);

    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" "
       << "viewBox=\"" << fmt_double(xmin) << " " << fmt_double(-ymax) << " "
       << fmt_double(xmax - xmin) << " " << fmt_double(ymax - ymin) << "\" "
       << "width=\"640\" height=\"640\">\n";
    // y axis points up in moment coordinates
    os << "<g transform=\"scale(1,-1)\">\n";
    for (const auto& p : feasible_points)
        os << "<circle class=\"feasible\" cx=\"" << fmt_double(p[0]) << "\" cy=\""
           << fmt_double(p[1]) << "\" r=\"" << fmt_double(0.004 * (xmax - xmin))
           << "\" fill=\"#c8c8c8\"/>\n";
    for (const auto& rec : scan.records) {
        const double th = rec.theta_deg * kPi / 180.0;
        os << "<line class=\"ray\" x1=\"0\" y1=\"0\" x2=\"" << fmt_double(ray_len * std::cos(th))
           << "\" y2=\"" << fmt_double(ray_len * std::sin(th)) << "\" stroke=\""
           << classification_color(rec.classification) << "\" stroke-width=\""
           << fmt_double(0.002 * (xmax - xmin)) << "\"/>\n";
    }
    bool have_poly = false;
    std::string pts;
    for (const auto& p : poly.points) {
        if (p.status != "ok") continue;
        if (have_poly) pts += " ";
        pts += fmt_double(p.y1) + "," + fmt_double(p.y2);
        have_poly = true;
    }
    if (have_poly)
        os << "<polyline class=\"boundary\" points=\"" << pts
           << "\" fill=\"none\" stroke=\"#303030\" stroke-width=\""
           << fmt_double(0.004 * (xmax - xmin)) << "\"/>\n";
    os << "</g>\n</svg>\n";
    if (!os.flush()) throw std::runtime_error("write failed: " + path);
}

std::vector<Transition> refine_transitions(const Pop& pop, int r, const AngularScan& scan,
                                           const Tolerances& tols, const Box& box,
                                           int grid_resolution, double target_width_deg) {
    std::vector<Transition> out;
    const std::size_t n = scan.records.size();
    if (n < 2) return out;
    auto classify = [&](double theta) {
        const Polynomial f = direction_objective(pop.n, theta);
        return certify_exactness(pop, f, r, tols, box, grid_resolution).classification;
    };
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = scan.records[i];
        const auto& b = scan.records[(i + 1) % n];
        const bool ae = a.classification == Classification::exact;
        const bool be = b.classification == Classification::exact;
        if (ae == be) continue;
        double lo = a.theta_deg;
        double hi = (i + 1 == n) ? 360.0 : b.theta_deg;
        Classification clo = a.classification, chi = b.classification;
        while (hi - lo > target_width_deg) {
            const double mid = 0.5 * (lo + hi);
            const Classification cm = classify(mid);
            if ((cm == Classification::exact) == ae) {
                lo = mid;
                clo = cm;
            } else {
                hi = mid;
                chi = cm;
            }
        }
        out.push_back({lo, hi, clo, chi});
    }
    return out;
}

}  // namespace msos
