#pragma once

#include <array>
#include <string>
#include <vector>

#include "msos/exactness.hpp"

namespace msos {

struct ScanRecord {
    double theta_deg = 0.0;
    double v_relax = 0.0;
    double v_oracle = 0.0;
    Classification classification = Classification::undetermined;
};

struct AngularScan {
    int order = 0;
    std::vector<ScanRecord> records;  // strictly increasing angles in [0, 360)
};

/// Certify every direction f_theta = cos(theta) x1 + sin(theta) x2 on the
/// uniform angle grid theta_k = k*360/num_angles, recording the relaxation
/// value, the grid-oracle value and the classification. n = 2 only.
AngularScan exactness_scan(const Pop& pop, int r, int num_angles, const Tolerances& tols,
                           const Box& box, int grid_resolution);

struct BoundaryPoint {
    double theta_deg = 0.0;
    double y1 = 0.0;
    double y2 = 0.0;
    std::string status;  // "ok", "unbounded" or "failed"
};

struct BoundaryPolyline {
    int order = 0;
    std::vector<BoundaryPoint> points;
};

/// Support points of the projection of the order-r relaxation onto the
/// first-order moments: for each direction the maximizer of <u_theta, (y1,y2)>.
BoundaryPolyline relaxation_boundary(const Pop& pop, int r, int num_angles);

void write_scan_csv(const AngularScan& scan, const std::string& path);
void write_boundary_csv(const BoundaryPolyline& poly, const std::string& path);

/// Overlay of the boundary polyline, feasible-set samples and angle rays
/// colored by classification (SVG 1.1, viewBox fitted to the data).
void write_svg(const AngularScan& scan, const BoundaryPolyline& poly,
               const std::vector<std::array<double, 2>>& feasible_points,
               const std::string& path);

struct Transition {
    double theta_lo = 0.0;
    double theta_hi = 0.0;
    Classification class_lo = Classification::undetermined;
    Classification class_hi = Classification::undetermined;
};

/// Bisect every exact/not-exact boundary of the scan down to the target width
/// (degrees).
std::vector<Transition> refine_transitions(const Pop& pop, int r, const AngularScan& scan,
                                           const Tolerances& tols, const Box& box,
                                           int grid_resolution, double target_width_deg = 0.01);

}  // namespace msos
