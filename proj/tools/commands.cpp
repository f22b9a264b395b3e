#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "bundletc/dsl.hpp"
#include "bundletc/manifolds.hpp"
#include "bundletc/variational.hpp"
#include "bundletc/verify.hpp"

namespace bundletc::cli {

using nlohmann::json;

namespace {

// Schema violations carry a JSON-pointer-style path.
class SchemaError : public Error {
public:
    SchemaError(const std::string& pointer, const std::string& msg)
        : Error(pointer + ": " + msg), pointer(pointer) {}
    std::string pointer;
};

const json& require(const json& j, const std::string& pointer, const char* key) {
    if (!j.is_object() || !j.contains(key))
        throw SchemaError(pointer + "/" + key, "missing required key");
    return j.at(key);
}

double require_number(const json& j, const std::string& pointer, const char* key) {
    const json& v = require(j, pointer, key);
    if (!v.is_number()) throw SchemaError(pointer + "/" + key, "expected a number");
    return v.get<double>();
}

long require_int(const json& j, const std::string& pointer, const char* key) {
    const json& v = require(j, pointer, key);
    if (!v.is_number_integer()) throw SchemaError(pointer + "/" + key, "expected an integer");
    return v.get<long>();
}

std::string require_string(const json& j, const std::string& pointer, const char* key) {
    const json& v = require(j, pointer, key);
    if (!v.is_string()) throw SchemaError(pointer + "/" + key, "expected a string");
    return v.get<std::string>();
}

Vec require_vec(const json& j, const std::string& pointer, const char* key) {
    const json& v = require(j, pointer, key);
    if (!v.is_array()) throw SchemaError(pointer + "/" + key, "expected an array of numbers");
    Vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number())
            throw SchemaError(pointer + "/" + key + "/" + std::to_string(i),
                              "expected a number");
        out[static_cast<int>(i)] = v[i].get<double>();
    }
    return out;
}

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open config '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw SchemaError("", std::string("invalid JSON: ") + e.what());
    }
    return j;
}

ManifoldPtr manifold_from(const json& j, const std::string& pointer) {
    const std::string name = require_string(j, pointer, "name");
    int dim = 2;
    if (j.contains("params") && j["params"].contains("dim"))
        dim = j["params"]["dim"].get<int>();
    try {
        return make_manifold(name, dim);
    } catch (const UsageError& e) {
        throw SchemaError(pointer + "/name", e.what());
    }
}

Grid grid_from(const json& j, const std::string& pointer) {
    const std::string type = require_string(j, pointer, "type");
    if (type == "interval")
        return Grid::interval(require_number(j, pointer, "a"), require_number(j, pointer, "b"),
                              static_cast<int>(require_int(j, pointer, "n")));
    if (type == "rectangle")
        return Grid::rectangle(require_number(j, pointer, "ax"), require_number(j, pointer, "bx"),
                               static_cast<int>(require_int(j, pointer, "nx")),
                               require_number(j, pointer, "ay"), require_number(j, pointer, "by"),
                               static_cast<int>(require_int(j, pointer, "ny")));
    throw SchemaError(pointer + "/type", "expected 'interval' or 'rectangle'");
}

Lagrangian lagrangian_from(const json& j, const std::string& pointer, ManifoldPtr m,
                           ManifoldPtr s) {
    const std::string name = require_string(j, pointer, "name");
    if (name == "kinetic") return kinetic_lagrangian(std::move(m), std::move(s));
    if (name == "kinetic_potential") {
        // V(s) = amplitude · cos(s_0): a simple height potential on the chart.
        const double amp = j.contains("params") && j["params"].contains("amplitude")
                               ? j["params"]["amplitude"].get<double>()
                               : 1.0;
        auto v = [amp](const Vec& sc) { return amp * std::cos(sc[0]); };
        auto grad = [amp](const Vec& sc) {
            Vec g = Vec::Zero(sc.size());
            g[0] = -amp * std::sin(sc[0]);
            return g;
        };
        auto hess = [amp](const Vec& sc) {
            Mat h = Mat::Zero(sc.size(), sc.size());
            h(0, 0) = -amp * std::cos(sc[0]);
            return h;
        };
        return kinetic_potential_lagrangian(std::move(m), std::move(s), v, grad, hess);
    }
    if (name == "anisotropic") {
        if (!j.contains("params") || !j["params"].contains("weights"))
            throw SchemaError(pointer + "/params/weights", "missing anisotropic weights");
        Vec w = require_vec(j["params"], pointer + "/params", "weights");
        return anisotropic_quadratic_lagrangian(std::move(m), std::move(s), w);
    }
    throw SchemaError(pointer + "/name",
                      "expected 'kinetic', 'kinetic_potential' or 'anisotropic'");
}

BoundaryMode boundary_from(const json& j) {
    if (!j.contains("boundary")) return BoundaryMode::Fixed;
    const std::string b = j.at("boundary").get<std::string>();
    if (b == "fixed") return BoundaryMode::Fixed;
    if (b == "free") return BoundaryMode::Free;
    throw SchemaError("/boundary", "expected 'fixed' or 'free'");
}

FieldConfiguration curve_from(const json& j, const std::string& pointer,
                              const EnergyProblem& p) {
    const std::string type = require_string(j, pointer, "type");
    FieldConfiguration phi;
    phi.values.resize(p.grid.count);
    if (type == "geodesic" || type == "perturbed_geodesic") {
        const Vec x0 = require_vec(j, pointer, "x0");
        const Vec v0 = require_vec(j, pointer, "v0");
        for (int k = 0; k < p.grid.count; ++k)
            phi.values[k] = p.target->exp_map(x0, v0, p.grid.points[k][0]);
        if (type == "perturbed_geodesic") {
            const double amp = require_number(j, pointer, "amplitude");
            const double a = p.grid.points.front()[0];
            const double len = p.grid.points.back()[0] - a;
            for (int k = 0; k < p.grid.count; ++k)
                phi.values[k][0] += amp * std::sin(M_PI * (p.grid.points[k][0] - a) / len);
        }
        return phi;
    }
    if (type == "chart_line") {
        const Vec from = require_vec(j, pointer, "from");
        const Vec to = require_vec(j, pointer, "to");
        const double a = p.grid.points.front()[0];
        const double len = p.grid.points.back()[0] - a;
        for (int k = 0; k < p.grid.count; ++k) {
            const double t = (p.grid.points[k][0] - a) / len;
            phi.values[k] = (1.0 - t) * from + t * to;
        }
        return phi;
    }
    throw SchemaError(pointer + "/type",
                      "expected 'geodesic', 'perturbed_geodesic' or 'chart_line'");
}

VariationField variation_from(const json& j, const std::string& pointer, const EnergyProblem& p,
                              const FieldConfiguration& phi) {
    const std::string type = require_string(j, pointer, "type");
    const double amp = j.contains("amplitude") ? j.at("amplitude").get<double>() : 1.0;
    const double a = p.grid.points.front()[0];
    const double len = p.grid.points.back()[0] - a;
    VariationField out;
    out.values.assign(p.grid.count, Vec::Zero(p.target->dim()));
    if (type == "sine_normal") {
        const int mode = static_cast<int>(require_int(j, pointer, "mode"));
        std::vector<Vec> normal = unit_normal_field(p, phi);
        for (int k = 0; k < p.grid.count; ++k) {
            if (p.grid.boundary[k]) continue;
            const double t = (p.grid.points[k][0] - a) / len;
            out.values[k] = amp * std::sin(mode * M_PI * t) * normal[k];
        }
        return out;
    }
    if (type == "coordinate_sine") {
        const int mode = static_cast<int>(require_int(j, pointer, "mode"));
        const int comp = static_cast<int>(require_int(j, pointer, "component"));
        if (comp < 0 || comp >= p.target->dim())
            throw SchemaError(pointer + "/component", "component out of range");
        for (int k = 0; k < p.grid.count; ++k) {
            if (p.grid.boundary[k]) continue;
            const double t = (p.grid.points[k][0] - a) / len;
            out.values[k][comp] = amp * std::sin(mode * M_PI * t);
        }
        return out;
    }
    if (type == "endpoint_bump") {
        // Smooth bump touching the right endpoint (free-boundary runs).
        const double width = j.contains("width") ? j.at("width").get<double>() : 0.25;
        for (int k = 0; k < p.grid.count; ++k) {
            const double t = (p.grid.points[k][0] - a) / len;
            if (t < 1.0 - width) continue;
            const double u = (t - (1.0 - width)) / width;
            out.values[k][0] = amp * u * u;
        }
        return out;
    }
    throw SchemaError(pointer + "/type",
                      "expected 'sine_normal', 'coordinate_sine' or 'endpoint_bump'");
}

void write_csv_row(std::ostream& out, const std::vector<double>& row) {
    char buf[64];
    for (std::size_t i = 0; i < row.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", row[i]);
        if (i) out << ",";
        out << buf;
    }
    out << "\n";
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(); }

int run_domain_command(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const SchemaError& e) {
        err << "config error at " << (e.pointer.empty() ? "/" : e.pointer) << ": " << e.what()
            << "\n";
        return exit_usage;
    } catch (const std::ios_base::failure& e) {
        err << "io error: " << e.what() << "\n";
        return exit_usage;
    } catch (const ChartExit& e) {
        err << "chart exit at t=" << e.exit_time << ": " << e.what() << "\n";
        return exit_domain;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_domain;
    }
}

} // namespace

int telescope_from_name(const std::string& name) {
    if (name == "low") return 0;
    if (name == "mid") return 1;
    if (name == "high") return 2;
    throw UsageError("telescope level must be low, mid or high");
}

int default_telescope() {
    if (const char* env = std::getenv("BUNDLETC_TELESCOPE")) {
        try {
            return telescope_from_name(env);
        } catch (const UsageError&) {
            return 2;
        }
    }
    return 2;
}

int cmd_typecheck(const std::string& path, int telescope, std::ostream& out, std::ostream& err) {
    std::ifstream in(path);
    if (!in) {
        err << path << ": cannot open file\n";
        return exit_usage;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    const dsl::FileCheckResult res = dsl::check_source(buf.str(), telescope);
    for (const auto& d : res.diagnostics)
        out << path << ":" << d.span.line << ":" << d.span.col << ": " << d.kind << ": "
            << d.message << "\n";
    if (res.ok()) {
        out << path << ": " << res.forms << " forms, " << res.expressions
            << " expressions, all well-typed\n";
        return exit_ok;
    }
    return exit_domain;
}

int cmd_geodesic(const std::string& config_path, std::ostream& out, std::ostream& err) {
    return run_domain_command(err, [&] {
        const json cfg = load_config(config_path);
        ManifoldPtr target = manifold_from(require(cfg, "", "target"), "/target");
        const json& solver = require(cfg, "", "solver");
        const Vec x0 = require_vec(solver, "/solver", "x0");
        const Vec v0 = require_vec(solver, "/solver", "v0");
        const double total = require_number(solver, "/solver", "T");
        const double step = solver.contains("step") ? solver.at("step").get<double>() : 1e-3;

        GeodesicCurve curve = solve_geodesic(target, x0, v0, total, step);
        out << "t";
        for (int i = 0; i < target->dim(); ++i) out << ",x" << i + 1;
        out << ",speed,H\n";
        for (std::size_t k = 0; k < curve.t.size(); ++k) {
            std::vector<double> row;
            row.push_back(curve.t[k]);
            for (int i = 0; i < target->dim(); ++i) row.push_back(curve.x[k][i]);
            const double speed = target->norm(curve.x[k], curve.v[k]);
            row.push_back(speed);
            row.push_back(0.5 * speed * speed);
            write_csv_row(out, row);
        }
        return exit_ok;
    });
}

int cmd_variation(const std::string& config_path, std::ostream& out, std::ostream& err) {
    return run_domain_command(err, [&] {
        const json cfg = load_config(config_path);
        ManifoldPtr domain = manifold_from(require(cfg, "", "manifold"), "/manifold");
        ManifoldPtr target = manifold_from(require(cfg, "", "target"), "/target");
        Grid grid = grid_from(require(cfg, "", "domain"), "/domain");
        Lagrangian lag =
            lagrangian_from(require(cfg, "", "lagrangian"), "/lagrangian", domain, target);
        EnergyProblem p{domain, target, std::move(lag), std::move(grid), boundary_from(cfg)};

        FieldConfiguration phi = curve_from(require(cfg, "", "curve"), "/curve", p);
        VariationField a = variation_from(require(cfg, "", "variation"), "/variation", p, phi);
        VariationField b = cfg.contains("variation_b")
                               ? variation_from(cfg.at("variation_b"), "/variation_b", p, phi)
                               : a;

        json report;
        report["energy"] = energy(p, phi);
        FirstVariationResult fv = first_variation(p, phi, a);
        report["first_variation_formula"] = fv.formula;
        report["first_variation_fd"] = fv.fd;
        report["first_variation_boundary_term"] = fv.boundary_term;

        ELResidual res = euler_lagrange_residual(p, phi);
        report["el_residual_sup"] = res.sup_interior;
        json grid_json = json::array();
        for (const Vec& r : res.interior) {
            json row = json::array();
            for (int i = 0; i < r.size(); ++i) row.push_back(r[i]);
            grid_json.push_back(row);
        }
        report["el_residual_grid"] = grid_json;
        json bres = json::array();
        for (int k = 0; k < p.grid.count; ++k) {
            if (!p.grid.boundary[k]) continue;
            json row = json::array();
            for (int i = 0; i < res.boundary[k].size(); ++i) row.push_back(res.boundary[k][i]);
            bres.push_back(row);
        }
        report["boundary_residual"] = bres;

        if (p.grid.is_interval()) {
            try {
                report["hamiltonian_trace"] = hamiltonian(p, phi);
            } catch (const NonAutonomousLagrangian&) {
                report["hamiltonian_trace"] = nullptr;
            }
        } else {
            report["hamiltonian_trace"] = nullptr;
        }

        if (p.lagrangian.has_second_partials() && res.sup_interior < 1e-5) {
            SecondVariationResult sv = second_variation(p, phi, a, b);
            report["second_variation_formula"] = number_or_null(sv.formula);
            report["second_variation_fd"] = number_or_null(sv.fd);
        } else {
            report["second_variation_formula"] = nullptr;
            report["second_variation_fd"] = nullptr;
        }
        out << report.dump(2) << "\n";
        return exit_ok;
    });
}

int cmd_harmonic(const std::string& config_path, std::ostream& out, std::ostream& err) {
    return run_domain_command(err, [&] {
        const json cfg = load_config(config_path);
        ManifoldPtr domain = manifold_from(require(cfg, "", "manifold"), "/manifold");
        ManifoldPtr target = manifold_from(require(cfg, "", "target"), "/target");
        Grid grid = grid_from(require(cfg, "", "domain"), "/domain");
        EnergyProblem p{domain, target, kinetic_lagrangian(domain, target), std::move(grid),
                        BoundaryMode::Fixed};

        const json& init = require(cfg, "", "init");
        const std::string type = require_string(init, "/init", "type");
        FieldConfiguration phi0;
        phi0.values.resize(p.grid.count);
        if (type == "identity_perturbed") {
            if (domain->dim() != target->dim())
                throw SchemaError("/init/type", "identity needs equal dimensions");
            const double amp = require_number(init, "/init", "amplitude");
            const double ax = p.grid.points.front()[0];
            const double bx = p.grid.points.back()[0];
            for (int k = 0; k < p.grid.count; ++k) {
                const Vec& x = p.grid.points[k];
                Vec v = x;
                if (!p.grid.boundary[k]) {
                    double bump = std::sin(M_PI * (x[0] - ax) / (bx - ax));
                    if (!p.grid.is_interval()) {
                        const double ay = p.grid.points[0][1];
                        const double by = p.grid.points[p.grid.ny - 1][1];
                        bump *= std::sin(M_PI * (x[1] - ay) / (by - ay));
                    }
                    for (int i = 0; i < v.size(); ++i) v[i] += amp * bump;
                }
                phi0.values[k] = v;
            }
        } else if (type == "chart_line") {
            phi0 = curve_from(init, "/init", p);
        } else {
            throw SchemaError("/init/type", "expected 'identity_perturbed' or 'chart_line'");
        }

        const json& solver = require(cfg, "", "solver");
        const int steps = static_cast<int>(require_int(solver, "/solver", "steps"));
        double dt;
        if (solver.contains("dt")) {
            dt = solver.at("dt").get<double>();
        } else {
            const double factor =
                solver.contains("dt_factor") ? solver.at("dt_factor").get<double>() : 0.1;
            const double hmin = p.grid.is_interval() ? p.grid.hx : std::min(p.grid.hx, p.grid.hy);
            dt = factor * hmin * hmin;
        }
        const double stop =
            solver.contains("stop_tension") ? solver.at("stop_tension").get<double>() : 0.0;

        FlowResult flow = gradient_flow_harmonic(p, phi0, steps, dt, stop);
        out << "step,sup_tension\n";
        for (std::size_t k = 0; k < flow.tension_history.size(); ++k)
            write_csv_row(out, {static_cast<double>(k), flow.tension_history[k]});
        out << "\n";
        out << "node";
        for (int i = 0; i < domain->dim(); ++i) out << ",x" << i + 1;
        for (int i = 0; i < target->dim(); ++i) out << ",phi" << i + 1;
        out << "\n";
        for (int k = 0; k < p.grid.count; ++k) {
            std::vector<double> row;
            row.push_back(k);
            for (int i = 0; i < domain->dim(); ++i) row.push_back(p.grid.points[k][i]);
            for (int i = 0; i < target->dim(); ++i) row.push_back(flow.config.values[k][i]);
            write_csv_row(out, row);
        }
        return exit_ok;
    });
}

int cmd_verify(const std::string& suite, unsigned long long seed, std::ostream& out,
               std::ostream& err) {
    try {
        auto results = verify::run_suite(suite, seed);
        std::size_t width = 0;
        for (const auto& r : results) width = std::max(width, r.name.size());
        for (const auto& r : results) {
            out << (r.pass ? "PASS  " : "FAIL  ") << r.name;
            for (std::size_t i = r.name.size(); i < width + 2; ++i) out << ' ';
            out << r.detail << "\n";
        }
        const bool ok = verify::all_passed(results);
        out << (ok ? "all checks passed" : "FAILURES present") << " (" << results.size()
            << " checks, suite '" << suite << "', seed " << seed << ")\n";
        return ok ? exit_ok : exit_domain;
    } catch (const UsageError& e) {
        err << e.what() << "\n";
        return exit_usage;
    }
}

} // namespace bundletc::cli
