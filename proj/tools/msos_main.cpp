#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "msos/exactness.hpp"
#include "msos/fixtures.hpp"
#include "msos/json_io.hpp"
#include "msos/scan.hpp"

namespace {

using namespace msos;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitInfeasible = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<double> parse_csv_doubles(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t pos = 0;
        const double v = std::stod(item, &pos);
        while (pos < item.size() && std::isspace(static_cast<unsigned char>(item[pos]))) ++pos;
        if (pos != item.size()) throw UsageError("malformed number list: " + text);
        out.push_back(v);
    }
    if (out.empty()) throw UsageError("empty number list");
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw UsageError("cannot open " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

struct ProblemInput {
    Pop pop;
    std::optional<Box> box;
};

ProblemInput load_pop(const std::string& fixture_name, const std::string& pop_path,
                      const std::string& box_spec) {
    if (fixture_name.empty() == pop_path.empty())
        throw UsageError("exactly one of --fixture and --pop is required");
    ProblemInput in;
    if (!fixture_name.empty()) {
        const auto fx = fixture_by_name(fixture_name);
        if (!fx) throw UsageError("unknown fixture: " + fixture_name);
        in.pop = fx->pop;
        in.box = fx->box;
    } else {
        in.pop = parse_pop_json(read_file(pop_path));
    }
    if (!box_spec.empty()) {
        const auto v = parse_csv_doubles(box_spec);
        if (static_cast<int>(v.size()) != 2 * in.pop.n)
            throw UsageError("--box needs 2n values (min,max per variable)");
        Box b;
        for (int i = 0; i < in.pop.n; ++i) {
            b.lo.push_back(v[2 * i]);
            b.hi.push_back(v[2 * i + 1]);
            if (!(b.lo[i] < b.hi[i])) throw UsageError("--box needs min < max per variable");
        }
        in.box = b;
    }
    return in;
}

Polynomial load_objective(const std::string& spec, int n) {
    if (spec.empty()) throw UsageError("--objective is required");
    if (std::filesystem::exists(spec)) {
        Polynomial p = parse_polynomial_json(read_file(spec));
        if (p.var_count() != n) throw UsageError("objective variable count mismatch");
        return p;
    }
    const auto v = parse_csv_doubles(spec);
    if (static_cast<int>(v.size()) != n + 1)
        throw UsageError("inline objective needs n+1 coefficients (constant first)");
    Polynomial p(n);
    p.add_term(Monomial::constant(n), v[0]);
    for (int k = 0; k < n; ++k) p.add_term(Monomial::unit_var(n, k), v[k + 1]);
    return p;
}

std::string point_json(const Point& x) {
    std::string s = "[";
    for (std::size_t i = 0; i < x.coords.size(); ++i) {
        if (i) s += ", ";
        s += fmt_double(x.coords[i]);
    }
    return s + "]";
}

std::string residuals_json(const std::map<std::string, double>& residuals) {
    std::string s = "{";
    bool first = true;
    for (const auto& [k, v] : residuals) {
        if (!first) s += ", ";
        first = false;
        s += "\"" + json_escape(k) + "\": " + fmt_double(v);
    }
    return s + "}";
}

std::string gram_json(const std::vector<GramBlock>& blocks) {
    std::string s = "[";
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (i) s += ", ";
        const auto& b = blocks[i];
        s += "{\"label\": \"" + json_escape(b.label) + "\", ";
        if (b.is_gram) {
            s += "\"size\": " + std::to_string(b.gram.rows()) + ", \"data\": [";
            for (int r = 0; r < b.gram.rows(); ++r)
                for (int c = 0; c < b.gram.cols(); ++c) {
                    if (r || c) s += ", ";
                    s += fmt_double(b.gram(r, c));
                }
            s += "]}";
        } else {
            s += "\"coeffs\": [";
            for (std::size_t k = 0; k < b.eq_coeffs.size(); ++k) {
                if (k) s += ", ";
                s += fmt_double(b.eq_coeffs[k]);
            }
            s += "]}";
        }
    }
    return s + "]";
}

std::vector<std::array<double, 2>> svg_feasible_samples(const Pop& pop,
                                                        const std::optional<Box>& box) {
    std::vector<std::array<double, 2>> out;
    if (!box || pop.n != 2) return out;
    for (const auto& p : feasible_grid_points(pop, *box, 161))
        out.push_back({p.coords[0], p.coords[1]});
    return out;
}

int run(int argc, char** argv) {
    CLI::App app{"moment-SOS relaxations, exactness certification and figure data"};
    app.require_subcommand(1);

    std::string fixture_name, pop_path, objective_spec, box_spec, out_path, svg_path, point_spec;
    int order = 1;
    int angles = 720;
    int grid = 801;
    double tol = 0.0;
    bool refine = false;

    auto add_common = [&](CLI::App* cmd, bool with_objective) {
        cmd->add_option("--fixture", fixture_name, "bundled problem: four-points|nonconvex|remark4");
        cmd->add_option("--pop", pop_path, "POP JSON file");
        if (with_objective)
            cmd->add_option("--objective", objective_spec,
                            "inline \"f0,f1,...,fn\" (constant first) or polynomial JSON file");
        cmd->add_option("--order", order, "relaxation order r")->check(CLI::PositiveNumber);
        cmd->add_option("--grid", grid, "oracle grid resolution")->check(CLI::PositiveNumber);
        cmd->add_option("--box", box_spec, "bounding box \"x1min,x1max,...\"");
        cmd->add_option("--tol", tol, "tolerance override");
    };

    auto* c_solve = app.add_subcommand("solve", "solve the order-r moment relaxation");
    add_common(c_solve, true);
    auto* c_certify = app.add_subcommand("certify", "certify exactness of the relaxation");
    add_common(c_certify, true);
    auto* c_member_q = app.add_subcommand("member-q", "truncated quadratic module membership");
    add_common(c_member_q, true);
    auto* c_member_s = app.add_subcommand("member-s", "S-cone membership at a point");
    add_common(c_member_s, true);
    c_member_s->add_option("--point", point_spec, "the point \"p1,...,pn\"")->required();
    auto* c_scan = app.add_subcommand("scan", "angular exactness scan");
    add_common(c_scan, false);
    c_scan->add_option("--angles", angles, "number of angles")->check(CLI::PositiveNumber);
    c_scan->add_option("--out", out_path, "scan CSV path")->required();
    c_scan->add_option("--svg", svg_path, "SVG overlay path");
    c_scan->add_flag("--refine", refine, "bisect exact/not-exact transitions to 0.01 deg");
    auto* c_boundary = app.add_subcommand("boundary", "relaxation boundary polyline");
    add_common(c_boundary, false);
    c_boundary->add_option("--angles", angles, "number of angles")->check(CLI::PositiveNumber);
    c_boundary->add_option("--out", out_path, "boundary CSV path")->required();
    c_boundary->add_option("--svg", svg_path, "SVG overlay path");
    std::string fixture_arg;
    auto* c_fixture = app.add_subcommand("fixture", "print a bundled POP as JSON");
    c_fixture->add_option("name", fixture_arg, "four-points|nonconvex|remark4")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {  // --help
            std::cout << app.help();
            return kExitOk;
        }
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    Tolerances tols;
    if (tol > 0.0) {
        tols.feas_tol = tol;
        tols.value_tol = tol;
        tols.member_tol = std::min(tol, 1e-7);
    }

    std::string stdout_text;

    if (c_fixture->parsed()) {
        const auto fx = fixture_by_name(fixture_arg);
        if (!fx) throw UsageError("unknown fixture: " + fixture_arg);
        stdout_text = pop_to_json(fx->pop) + "\n";
        std::cout << stdout_text;
        return kExitOk;
    }

    const ProblemInput in = load_pop(fixture_name, pop_path, box_spec);

    // Assumption-1 advisory: when a bounding box is known, look for the
    // Archimedean certificate R^2 - |x|^2 in Q(g)^r and warn when absent.
    if (in.box && order >= 1) {
        double r2 = 0.0;
        for (int i = 0; i < in.pop.n; ++i)
            r2 += std::max(in.box->lo[i] * in.box->lo[i], in.box->hi[i] * in.box->hi[i]);
        try {
            if (!assumption_radius_check(in.pop, std::sqrt(r2), order))
                std::cerr << "warning: no certificate of R^2 - |x|^2 in Q(g)^r found at order "
                          << order << " (R = " << fmt_double(std::sqrt(r2))
                          << "); convergence guarantees may not apply\n";
        } catch (const std::exception&) {
            // degree overflow at this order: nothing to check
        }
    }

    if (c_solve->parsed()) {
        const Polynomial f = load_objective(objective_spec, in.pop.n);
        const RelaxationOutcome out = solve_relaxation(in.pop, f, order);
        if (out.solver_status == SolveStatus::primal_infeasible) {
            std::cerr << "error: relaxation infeasible (empty feasible set at this order)\n";
            return kExitInfeasible;
        }
        if (!out.primal_usable) {
            std::cerr << "error: numerical trouble, no usable relaxation solution\n";
            return kExitNumerical;
        }
        stdout_text = "{\"order\": " + std::to_string(order) + ", \"status\": \"" +
                      to_string(out.solver_status) + "\", \"value\": " + fmt_double(out.value) +
                      ", \"candidate\": " + point_json(out.candidate) + "}\n";
    } else if (c_certify->parsed()) {
        const Polynomial f = load_objective(objective_spec, in.pop.n);
        const ExactnessCertificate cert =
            certify_exactness(in.pop, f, order, tols, in.box, grid);
        if (cert.classification == Classification::undetermined) {
            std::cerr << "error: certification undetermined (numerical trouble)\n";
            return kExitNumerical;
        }
        stdout_text = "{\"classification\": \"" + std::string(to_string(cert.classification)) +
                      "\", \"x_hat\": " + point_json(cert.x_hat) +
                      ", \"v_hat\": " + fmt_double(cert.v_hat) +
                      ", \"residuals\": " + residuals_json(cert.residuals) +
                      ", \"gram\": " + gram_json(cert.gram_data) + "}\n";
    } else if (c_member_q->parsed()) {
        const Polynomial p = load_objective(objective_spec, in.pop.n);
        const auto qp = build_q_membership(in.pop, p, order);
        const auto res = solve_q_membership(qp, tols.member_tol);
        stdout_text = "{\"verdict\": \"" + std::string(to_string(res.verdict)) +
                      "\", \"residual\": " + fmt_double(res.certificate_residual) + "}\n";
    } else if (c_member_s->parsed()) {
        const Polynomial p = load_objective(objective_spec, in.pop.n);
        const auto coords = parse_csv_doubles(point_spec);
        if (static_cast<int>(coords.size()) != in.pop.n)
            throw UsageError("--point needs n coordinates");
        const SConeResult res = s_cone_member(in.pop, order, Point{coords}, p, tols);
        stdout_text = "{\"verdict\": \"" + std::string(to_string(res.verdict)) +
                      "\", \"vanish_residual\": " + fmt_double(res.vanish_residual) +
                      ", \"fast_path\": " + (res.fast_path ? "true" : "false") +
                      ", \"residual\": " + fmt_double(res.membership.certificate_residual) +
                      "}\n";
    } else if (c_scan->parsed()) {
        if (!in.box) throw UsageError("scan needs a box (--box or a fixture)");
        const AngularScan scan = exactness_scan(in.pop, order, angles, tols, *in.box, grid);
        write_scan_csv(scan, out_path);
        if (!svg_path.empty()) {
            const BoundaryPolyline poly = relaxation_boundary(in.pop, order, angles);
            write_svg(scan, poly, svg_feasible_samples(in.pop, in.box), svg_path);
        }
        int n_exact = 0, n_veda = 0, n_not = 0, n_und = 0;
        for (const auto& r : scan.records) switch (r.classification) {
                case Classification::exact: ++n_exact; break;
                case Classification::value_exact_dual_unattained: ++n_veda; break;
                case Classification::not_exact: ++n_not; break;
                case Classification::undetermined: ++n_und; break;
            }
        stdout_text = "{\"order\": " + std::to_string(order) +
                      ", \"angles\": " + std::to_string(angles) +
                      ", \"exact\": " + std::to_string(n_exact) +
                      ", \"value_exact_dual_unattained\": " + std::to_string(n_veda) +
                      ", \"not_exact\": " + std::to_string(n_not) +
                      ", \"undetermined\": " + std::to_string(n_und);
        if (refine) {
            const auto trans = refine_transitions(in.pop, order, scan, tols, *in.box, grid);
            stdout_text += ", \"transitions\": [";
            for (std::size_t i = 0; i < trans.size(); ++i) {
                if (i) stdout_text += ", ";
                stdout_text += "{\"theta_lo\": " + fmt_double(trans[i].theta_lo) +
                               ", \"theta_hi\": " + fmt_double(trans[i].theta_hi) +
                               ", \"class_lo\": \"" + to_string(trans[i].class_lo) +
                               "\", \"class_hi\": \"" + to_string(trans[i].class_hi) + "\"}";
            }
            stdout_text += "]";
        }
        stdout_text += "}\n";
    } else if (c_boundary->parsed()) {
        const BoundaryPolyline poly = relaxation_boundary(in.pop, order, angles);
        write_boundary_csv(poly, out_path);
        if (!svg_path.empty())
            write_svg(AngularScan{order, {}}, poly, svg_feasible_samples(in.pop, in.box),
                      svg_path);
        int n_ok = 0, n_unb = 0, n_fail = 0;
        for (const auto& p : poly.points) {
            if (p.status == "ok") ++n_ok;
            else if (p.status == "unbounded") ++n_unb;
            else ++n_fail;
        }
        stdout_text = "{\"order\": " + std::to_string(order) +
                      ", \"angles\": " + std::to_string(angles) + ", \"ok\": " +
                      std::to_string(n_ok) + ", \"unbounded\": " + std::to_string(n_unb) +
                      ", \"failed\": " + std::to_string(n_fail) + "}\n";
    }

    std::cout << stdout_text;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        std::cerr << "error: " << msg << "\n";
        if (msg.find("infeasible") != std::string::npos) return kExitInfeasible;
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
