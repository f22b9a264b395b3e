#include "bundletc/variational.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace bundletc {

Grid Grid::interval(double a, double b, int n) {
    if (n < 8) throw UsageError("interval grid needs n >= 8 points");
    if (!(b > a)) throw UsageError("interval grid needs b > a");
    Grid g;
    g.ndim = 1;
    g.nx = n;
    g.count = n;
    g.hx = (b - a) / (n - 1);
    g.points.resize(n);
    g.quad_w.resize(n);
    g.boundary.resize(n);
    for (int i = 0; i < n; ++i) {
        Vec p(1);
        p[0] = a + i * g.hx;
        g.points[i] = p;
        g.quad_w[i] = (i == 0 || i == n - 1) ? g.hx / 2 : g.hx;
        g.boundary[i] = (i == 0 || i == n - 1);
    }
    return g;
}

Grid Grid::rectangle(double ax, double bx, int nx, double ay, double by, int ny) {
    if (nx < 8 || ny < 8) throw UsageError("rectangle grid needs nx, ny >= 8 points");
    if (!(bx > ax) || !(by > ay)) throw UsageError("rectangle grid needs positive extents");
    Grid g;
    g.ndim = 2;
    g.nx = nx;
    g.ny = ny;
    g.count = nx * ny;
    g.hx = (bx - ax) / (nx - 1);
    g.hy = (by - ay) / (ny - 1);
    g.points.resize(g.count);
    g.quad_w.resize(g.count);
    g.boundary.resize(g.count);
    for (int ix = 0; ix < nx; ++ix)
        for (int iy = 0; iy < ny; ++iy) {
            const int k = ix * ny + iy;
            Vec p(2);
            p[0] = ax + ix * g.hx;
            p[1] = ay + iy * g.hy;
            g.points[k] = p;
            const double wx = (ix == 0 || ix == nx - 1) ? g.hx / 2 : g.hx;
            const double wy = (iy == 0 || iy == ny - 1) ? g.hy / 2 : g.hy;
            g.quad_w[k] = wx * wy;
            g.boundary[k] = (ix == 0 || ix == nx - 1 || iy == 0 || iy == ny - 1);
        }
    return g;
}

Grid Grid::from_spec(const DomainSpec& d) {
    if (const auto* iv = std::get_if<IntervalDomain>(&d))
        return interval(iv->a, iv->b, iv->n);
    const auto& r = std::get<RectangleDomain>(d);
    return rectangle(r.ax, r.bx, r.nx, r.ay, r.by, r.ny);
}

namespace {

// One-dimensional O(h²) stencil along a line of nodes addressed by `at`:
// central inside, one-sided at the ends.
Vec line_derivative(const std::function<const Vec&(int)>& at, int i, int n, double h) {
    if (i > 0 && i < n - 1) return (at(i + 1) - at(i - 1)) / (2 * h);
    if (i == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2 * h);
    return (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2 * h);
}

// Variant for derivatives of stencil-derived node fields (φ*L_,v and kin):
// never reads boundary nodes, whose values carry a different truncation
// family; mixing them with central-stencil values next to the boundary costs
// an order of accuracy. One-sided O(h²) over interior nodes near the ends,
// central elsewhere.
Vec line_derivative_interior(const std::function<const Vec&(int)>& at, int i, int n, double h) {
    if (i > 1 && i < n - 2) return (at(i + 1) - at(i - 1)) / (2 * h);
    if (i == 1) return (-3.0 * at(1) + 4.0 * at(2) - at(3)) / (2 * h);
    if (i == 0) return (-5.0 * at(1) + 8.0 * at(2) - 3.0 * at(3)) / (2 * h);
    if (i == n - 2) return (3.0 * at(n - 2) - 4.0 * at(n - 3) + at(n - 4)) / (2 * h);
    return (5.0 * at(n - 2) - 8.0 * at(n - 3) + 3.0 * at(n - 4)) / (2 * h);
}

} // namespace

Mat Grid::jacobian_at(const std::vector<Vec>& f, int k) const {
    const int c = static_cast<int>(f[0].size());
    Mat out(c, ndim);
    if (is_interval()) {
        out.col(0) = line_derivative([&](int i) -> const Vec& { return f[i]; }, k, nx, hx);
        return out;
    }
    const int ix = k / ny, iy = k % ny;
    out.col(0) = line_derivative([&](int i) -> const Vec& { return f[i * ny + iy]; }, ix, nx, hx);
    out.col(1) = line_derivative([&](int i) -> const Vec& { return f[ix * ny + i]; }, iy, ny, hy);
    return out;
}

Mat Grid::jacobian_interior_at(const std::vector<Vec>& f, int k) const {
    const int c = static_cast<int>(f[0].size());
    Mat out(c, ndim);
    if (is_interval()) {
        out.col(0) =
            line_derivative_interior([&](int i) -> const Vec& { return f[i]; }, k, nx, hx);
        return out;
    }
    const int ix = k / ny, iy = k % ny;
    out.col(0) =
        line_derivative_interior([&](int i) -> const Vec& { return f[i * ny + iy]; }, ix, nx, hx);
    out.col(1) =
        line_derivative_interior([&](int i) -> const Vec& { return f[ix * ny + i]; }, iy, ny, hy);
    return out;
}

std::vector<Mat> Grid::second_derivs_at(const std::vector<Vec>& f, int k) const {
    if (boundary[k]) throw UsageError("second_derivs_at: interior nodes only");
    const int c = static_cast<int>(f[0].size());
    std::vector<Mat> out(c, Mat::Zero(ndim, ndim));
    if (is_interval()) {
        const Vec d = (f[k + 1] - 2.0 * f[k] + f[k - 1]) / (hx * hx);
        for (int a = 0; a < c; ++a) out[a](0, 0) = d[a];
        return out;
    }
    const int ix = k / ny, iy = k % ny;
    auto at = [&](int jx, int jy) -> const Vec& { return f[jx * ny + jy]; };
    const Vec dxx = (at(ix + 1, iy) - 2.0 * f[k] + at(ix - 1, iy)) / (hx * hx);
    const Vec dyy = (at(ix, iy + 1) - 2.0 * f[k] + at(ix, iy - 1)) / (hy * hy);
    const Vec dxy = (at(ix + 1, iy + 1) - at(ix + 1, iy - 1) - at(ix - 1, iy + 1) +
                     at(ix - 1, iy - 1)) /
                    (4 * hx * hy);
    for (int a = 0; a < c; ++a) {
        out[a](0, 0) = dxx[a];
        out[a](1, 1) = dyy[a];
        out[a](0, 1) = dxy[a];
        out[a](1, 0) = dxy[a];
    }
    return out;
}

double Grid::boundary_integral(
    const std::function<double(int node, int axis, double sign)>& integrand) const {
    double total = 0.0;
    if (is_interval()) {
        total += integrand(0, 0, -1.0);
        total += integrand(nx - 1, 0, +1.0);
        return total;
    }
    for (int iy = 0; iy < ny; ++iy) {
        const double w = (iy == 0 || iy == ny - 1) ? hy / 2 : hy;
        total += w * integrand(index(0, iy), 0, -1.0);
        total += w * integrand(index(nx - 1, iy), 0, +1.0);
    }
    for (int ix = 0; ix < nx; ++ix) {
        const double w = (ix == 0 || ix == nx - 1) ? hx / 2 : hx;
        total += w * integrand(index(ix, 0), 1, -1.0);
        total += w * integrand(index(ix, ny - 1), 1, +1.0);
    }
    return total;
}

Lagrangian kinetic_lagrangian(ManifoldPtr domain, ManifoldPtr target) {
    Lagrangian l;
    l.name = "kinetic";
    const RiemannianManifold* m = domain.get();
    const RiemannianManifold* s = target.get();
    l.value = [m, s](const Vec& x, const Vec& sc, const Mat& a) {
        const Mat h = s->metric_at(sc);
        const Mat gi = m->inverse_metric_at(x);
        return 0.5 * (a.transpose() * h * a * gi).trace();
    };
    l.sigma_exact = [s](const Vec&, const Vec&, const Mat&) {
        return Vec::Zero(s->dim()).eval();
    };
    l.mu_exact = [m](const Vec&, const Vec&, const Mat&) { return Vec::Zero(m->dim()).eval(); };
    l.v_exact = [m, s](const Vec& x, const Vec& sc, const Mat& a) {
        return (s->metric_at(sc) * a * m->inverse_metric_at(x)).eval();
    };
    l.second_exact = [m, s](const Vec& x, const Vec& sc, const Mat&) {
        const int dm = m->dim(), ds = s->dim();
        const Mat h = s->metric_at(sc);
        const Mat gi = m->inverse_metric_at(x);
        SecondPartials sp;
        sp.sigma_sigma = Mat::Zero(ds, ds);
        sp.sigma_v = Mat::Zero(ds, ds * dm);
        sp.v_sigma = Mat::Zero(ds * dm, ds);
        sp.v_v = Mat::Zero(ds * dm, ds * dm);
        for (int a = 0; a < ds; ++a)
            for (int i = 0; i < dm; ++i)
                for (int b = 0; b < ds; ++b)
                    for (int j = 0; j < dm; ++j)
                        sp.v_v(a * dm + i, b * dm + j) = h(a, b) * gi(i, j);
        return sp;
    };
    return l;
}

Lagrangian kinetic_potential_lagrangian(ManifoldPtr domain, ManifoldPtr target,
                                        std::function<double(const Vec&)> potential,
                                        std::function<Vec(const Vec&)> potential_grad,
                                        std::function<Mat(const Vec&)> potential_hess) {
    Lagrangian base = kinetic_lagrangian(domain, target);
    Lagrangian l;
    l.name = "kinetic_potential";
    const RiemannianManifold* s = target.get();
    l.value = [base, potential](const Vec& x, const Vec& sc, const Mat& a) {
        return base.value(x, sc, a) - potential(sc);
    };
    l.sigma_exact = [potential_grad](const Vec&, const Vec& sc, const Mat&) {
        return (-potential_grad(sc)).eval();
    };
    l.mu_exact = base.mu_exact;
    l.v_exact = base.v_exact;
    l.second_exact = [base, potential_grad, potential_hess, s](const Vec& x, const Vec& sc,
                                                               const Mat& a) {
        SecondPartials sp = base.second_exact(x, sc, a);
        // Covariant Hessian of V on S: ∂²V_ab − Γ^c_{ab} ∂_c V.
        const Mat hess = potential_hess(sc);
        const Vec grad = potential_grad(sc);
        const Christoffel gs = s->christoffel_at(sc);
        Mat cov = hess;
        for (int i = 0; i < s->dim(); ++i)
            for (int j = 0; j < s->dim(); ++j)
                for (int c = 0; c < s->dim(); ++c) cov(i, j) -= gs(c, i, j) * grad[c];
        sp.sigma_sigma = -cov;
        return sp;
    };
    return l;
}

Lagrangian anisotropic_quadratic_lagrangian(ManifoldPtr domain, ManifoldPtr target, Vec weights) {
    if (weights.size() != domain->dim())
        throw UsageError("anisotropic weights must match the domain dimension");
    Lagrangian l;
    l.name = "anisotropic";
    const RiemannianManifold* m = domain.get();
    const RiemannianManifold* s = target.get();
    const Mat d = weights.asDiagonal();
    l.value = [s, d](const Vec&, const Vec& sc, const Mat& a) {
        return 0.5 * (a.transpose() * s->metric_at(sc) * a * d).trace();
    };
    l.sigma_exact = [s](const Vec&, const Vec&, const Mat&) {
        return Vec::Zero(s->dim()).eval();
    };
    l.mu_exact = [m](const Vec&, const Vec&, const Mat&) { return Vec::Zero(m->dim()).eval(); };
    l.v_exact = [s, d](const Vec&, const Vec& sc, const Mat& a) {
        return (s->metric_at(sc) * a * d).eval();
    };
    l.second_exact = [m, s, d](const Vec&, const Vec& sc, const Mat&) {
        const int dm = m->dim(), ds = s->dim();
        const Mat h = s->metric_at(sc);
        SecondPartials sp;
        sp.sigma_sigma = Mat::Zero(ds, ds);
        sp.sigma_v = Mat::Zero(ds, ds * dm);
        sp.v_sigma = Mat::Zero(ds * dm, ds);
        sp.v_v = Mat::Zero(ds * dm, ds * dm);
        for (int a = 0; a < ds; ++a)
            for (int i = 0; i < dm; ++i)
                for (int b = 0; b < ds; ++b)
                    for (int j = 0; j < dm; ++j)
                        sp.v_v(a * dm + i, b * dm + j) = h(a, b) * d(i, j);
        return sp;
    };
    return l;
}

FieldConfiguration sample_map(const Grid& grid, const SmoothMap& phi) {
    FieldConfiguration f;
    f.values.reserve(grid.count);
    for (const Vec& x : grid.points) f.values.push_back(phi(x));
    return f;
}

namespace {

struct NodeData {
    Vec x;
    Vec s;
    Mat jac;       // stencil ∂φ (ds × ndim)
    double weight; // quadrature weight × √det g
    Mat g, ginv;
};

std::vector<NodeData> gather_nodes(const EnergyProblem& p, const FieldConfiguration& phi) {
    if (static_cast<int>(phi.values.size()) != p.grid.count)
        throw UsageError("field configuration does not match the grid");
    std::vector<NodeData> nodes(p.grid.count);
    for (int k = 0; k < p.grid.count; ++k) {
        NodeData& n = nodes[k];
        n.x = p.grid.points[k];
        n.s = phi.values[k];
        p.target->require_in_chart(n.s);
        n.jac = p.grid.jacobian_at(phi.values, k);
        n.g = p.domain_manifold->metric_at(n.x);
        n.ginv = n.g.inverse();
        n.weight = p.grid.quad_w[k] * std::sqrt(n.g.determinant());
    }
    return nodes;
}

struct NodePartials {
    Vec sigma;
    Mat v;
};

NodePartials node_partials(const EnergyProblem& p, const NodeData& n) {
    NodePartials out;
    if (p.lagrangian.has_exact_partials() && p.lagrangian.sigma_exact) {
        out.sigma = p.lagrangian.sigma_exact(n.x, n.s, n.jac);
        out.v = p.lagrangian.v_exact(n.x, n.s, n.jac);
        return out;
    }
    LagrangianPartials pd = partial_covariant_derivatives(
        p.lagrangian.value, *p.domain_manifold, *p.target, n.x, n.s, n.jac);
    out.sigma = pd.sigma;
    out.v = pd.v;
    return out;
}

// Covariant divergence of the grid section W ∈ Γ(φ*T*S ⊗ TM) at node k.
Vec divergence_of_lv(const EnergyProblem& p, const std::vector<NodeData>& nodes,
                     const std::vector<Vec>& w_flat, int k) {
    const int dm = p.domain_manifold->dim(), ds = p.target->dim();
    const NodeData& n = nodes[k];
    const Mat dw = p.grid.jacobian_interior_at(w_flat, k); // (ds·dm × ndim)
    const Christoffel gs = p.target->christoffel_at(n.s);
    const Christoffel gm = p.domain_manifold->christoffel_at(n.x);
    auto w = [&](int a, int i) { return w_flat[k][a * dm + i]; };
    Vec out = Vec::Zero(ds);
    for (int a = 0; a < ds; ++a) {
        double acc = 0.0;
        for (int i = 0; i < dm; ++i) {
            acc += dw(a * dm + i, i);
            for (int b = 0; b < ds; ++b)
                for (int c = 0; c < ds; ++c) acc -= gs(b, a, c) * n.jac(c, i) * w(b, i);
            for (int m = 0; m < dm; ++m) acc += gm(i, i, m) * w(a, m);
        }
        out[a] = acc;
    }
    return out;
}

std::vector<Vec> lv_grid(const EnergyProblem& p, const std::vector<NodeData>& nodes) {
    const int dm = p.domain_manifold->dim(), ds = p.target->dim();
    std::vector<Vec> w(nodes.size(), Vec::Zero(ds * dm));
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const Mat v = node_partials(p, nodes[k]).v;
        for (int a = 0; a < ds; ++a)
            for (int i = 0; i < dm; ++i) w[k][a * dm + i] = v(a, i);
    }
    return w;
}

FieldConfiguration vary(const EnergyProblem& p, const FieldConfiguration& phi,
                        const VariationField& a, const VariationField* b, double i, double j) {
    FieldConfiguration out = phi;
    for (int k = 0; k < p.grid.count; ++k) {
        Vec w = i * a.values[k];
        if (b) w += j * b->values[k];
        if (w.lpNorm<Eigen::Infinity>() > 0.0)
            out.values[k] = p.target->exp_map(phi.values[k], w, 1.0);
    }
    return out;
}

void check_boundary_mode(const EnergyProblem& p, const VariationField& a) {
    if (static_cast<int>(a.values.size()) != p.grid.count)
        throw UsageError("variation field does not match the grid");
    if (p.boundary != BoundaryMode::Fixed) return;
    for (int k = 0; k < p.grid.count; ++k)
        if (p.grid.boundary[k] && a.values[k].lpNorm<Eigen::Infinity>() != 0.0)
            throw UsageError("fixed-boundary problem requires variations vanishing on ∂M");
}

// Covariant derivative of a variation field along φ at node k: stencil plus
// the Γ_S(φ)(A, ∂φ) correction.
Mat nabla_variation(const EnergyProblem& p, const std::vector<NodeData>& nodes,
                    const std::vector<Vec>& avals, int k) {
    const int dm = p.domain_manifold->dim(), ds = p.target->dim();
    const NodeData& n = nodes[k];
    Mat da = p.grid.jacobian_at(avals, k); // (ds × ndim)
    const Christoffel gs = p.target->christoffel_at(n.s);
    for (int a = 0; a < ds; ++a)
        for (int i = 0; i < dm; ++i) {
            double corr = 0.0;
            for (int b = 0; b < ds; ++b)
                for (int c = 0; c < ds; ++c) corr += gs(a, b, c) * avals[k][b] * n.jac(c, i);
            da(a, i) += corr;
        }
    return da;
}

} // namespace

double energy(const EnergyProblem& p, const FieldConfiguration& phi) {
    const std::vector<NodeData> nodes = gather_nodes(p, phi);
    double total = 0.0;
    for (const NodeData& n : nodes) total += n.weight * p.lagrangian.value(n.x, n.s, n.jac);
    return total;
}

FirstVariationResult first_variation(const EnergyProblem& p, const FieldConfiguration& phi,
                                     const VariationField& a, double fd_eps) {
    check_boundary_mode(p, a);
    const std::vector<NodeData> nodes = gather_nodes(p, phi);
    const std::vector<Vec> w = lv_grid(p, nodes);
    const int dm = p.domain_manifold->dim(), ds = p.target->dim();

    FirstVariationResult out;
    for (int k = 0; k < p.grid.count; ++k) {
        const NodeData& n = nodes[k];
        if (a.values[k].lpNorm<Eigen::Infinity>() == 0.0) continue;
        const Vec sigma = node_partials(p, n).sigma;
        const Vec div = divergence_of_lv(p, nodes, w, k);
        out.interior_term += n.weight * a.values[k].dot(sigma - div);
    }

    out.boundary_term = p.grid.boundary_integral([&](int k, int axis, double sign) {
        // (A · φ*L_,v) is a TM vector; pair with ν and the edge volume, which
        // together contribute sign·√det g times its outward component.
        const NodeData& n = nodes[k];
        double comp = 0.0;
        for (int aa = 0; aa < ds; ++aa) comp += a.values[k][aa] * w[k][aa * dm + axis];
        return sign * std::sqrt(n.g.determinant()) * comp;
    });

    out.formula = out.interior_term + out.boundary_term;

    const double ep = energy(p, vary(p, phi, a, nullptr, fd_eps, 0.0));
    const double em = energy(p, vary(p, phi, a, nullptr, -fd_eps, 0.0));
    out.fd = (ep - em) / (2 * fd_eps);
    return out;
}

ELResidual euler_lagrange_residual(const EnergyProblem& p, const FieldConfiguration& phi) {
    const std::vector<NodeData> nodes = gather_nodes(p, phi);
    const std::vector<Vec> w = lv_grid(p, nodes);
    const int dm = p.domain_manifold->dim(), ds = p.target->dim();

    ELResidual out;
    out.interior.assign(p.grid.count, Vec::Zero(ds));
    out.boundary.assign(p.grid.count, Vec::Zero(ds));
    for (int k = 0; k < p.grid.count; ++k) {
        const NodeData& n = nodes[k];
        if (!p.grid.boundary[k]) {
            const Vec sigma = node_partials(p, n).sigma;
            out.interior[k] = sigma - divergence_of_lv(p, nodes, w, k);
            out.sup_interior =
                std::max(out.sup_interior, out.interior[k].lpNorm<Eigen::Infinity>());
        } else {
            // φ*L_,v · ν with the unit outward conormal ν = ±dx^axis/√(g^aa).
            const int ix = p.grid.is_interval() ? k : k / p.grid.ny;
            const int iy = p.grid.is_interval() ? 0 : k % p.grid.ny;
            int axis = 0;
            double sign = 0.0;
            if (ix == 0) { axis = 0; sign = -1.0; }
            else if (ix == p.grid.nx - 1) { axis = 0; sign = 1.0; }
            else if (iy == 0) { axis = 1; sign = -1.0; }
            else { axis = 1; sign = 1.0; }
            const double nu_scale = 1.0 / std::sqrt(n.ginv(axis, axis));
            for (int a = 0; a < ds; ++a)
                out.boundary[k][a] = sign * nu_scale * w[k][a * dm + axis];
        }
    }
    return out;
}

std::vector<Vec> discrete_tension(const EnergyProblem& p, const FieldConfiguration& phi) {
    const std::vector<NodeData> nodes = gather_nodes(p, phi);
    const int dm = p.domain_manifold->dim(), ds = p.target->dim();
    std::vector<Vec> out(p.grid.count, Vec::Zero(ds));
    for (int k = 0; k < p.grid.count; ++k) {
        if (p.grid.boundary[k]) continue;
        const NodeData& n = nodes[k];
        const std::vector<Mat> dd = p.grid.second_derivs_at(phi.values, k);
        const Christoffel gs = p.target->christoffel_at(n.s);
        const Christoffel gm = p.domain_manifold->christoffel_at(n.x);
        for (int a = 0; a < ds; ++a) {
            double acc = 0.0;
            for (int i = 0; i < dm; ++i)
                for (int j = 0; j < dm; ++j) {
                    double h2 = dd[a](i, j);
                    for (int b = 0; b < ds; ++b)
                        for (int c = 0; c < ds; ++c)
                            h2 += gs(a, b, c) * n.jac(b, i) * n.jac(c, j);
                    for (int m = 0; m < dm; ++m) h2 -= gm(m, i, j) * n.jac(a, m);
                    acc += n.ginv(i, j) * h2;
                }
            out[k][a] = acc;
        }
    }
    return out;
}

GeodesicCurve solve_geodesic(const ManifoldPtr& s, const Vec& x0, const Vec& v0, double total_time,
                             double step) {
    GeodesicCurve out;
    const long steps = std::max<long>(1, static_cast<long>(std::llround(total_time / step)));
    const double h = total_time / static_cast<double>(steps);
    out.t.reserve(steps + 1);
    out.x.reserve(steps + 1);
    out.v.reserve(steps + 1);
    out.t.push_back(0.0);
    out.x.push_back(x0);
    out.v.push_back(v0);
    Vec x = x0, v = v0;
    for (long i = 0; i < steps; ++i) {
        Vec nx, nv;
        try {
            s->exp_map_with_velocity(x, v, h, std::abs(h) * 2, nx, nv);
        } catch (const ChartExit& e) {
            const double when = out.t.back() + e.exit_time;
            throw ChartExit(s->name() + ": geodesic left chart at t=" + std::to_string(when),
                            when);
        }
        x = nx;
        v = nv;
        out.t.push_back((i + 1) * h);
        out.x.push_back(x);
        out.v.push_back(v);
    }
    return out;
}

std::vector<double> hamiltonian(const EnergyProblem& p, const FieldConfiguration& phi,
                                double mu_tol) {
    if (!p.grid.is_interval())
        throw DomainNotInterval("hamiltonian: interval domains only");
    const std::vector<NodeData> nodes = gather_nodes(p, phi);
    // Autonomy check (numeric, independent of any exact μ the Lagrangian may
    // carry) at a few sample nodes.
    for (int k : {0, p.grid.count / 2, p.grid.count - 1}) {
        const NodeData& n = nodes[k];
        LagrangianPartials pd = partial_covariant_derivatives(
            p.lagrangian.value, *p.domain_manifold, *p.target, n.x, n.s, n.jac);
        if (pd.mu.lpNorm<Eigen::Infinity>() > mu_tol)
            throw NonAutonomousLagrangian("hamiltonian: L_,μ = " +
                                          std::to_string(pd.mu.lpNorm<Eigen::Infinity>()));
    }
    std::vector<double> h(p.grid.count);
    for (int k = 0; k < p.grid.count; ++k) {
        const NodeData& n = nodes[k];
        const Mat v = node_partials(p, n).v;
        h[k] = (v.array() * n.jac.array()).sum() - p.lagrangian.value(n.x, n.s, n.jac);
    }
    return h;
}

FlowResult gradient_flow_harmonic(const EnergyProblem& p, const FieldConfiguration& phi0,
                                  int steps, double dt, double stop_tension) {
    if (p.boundary != BoundaryMode::Fixed)
        throw UsageError("gradient_flow_harmonic: fixed boundary required");
    FlowResult out;
    out.config = phi0;
    auto sup_of = [&](const std::vector<Vec>& t) {
        double s = 0.0;
        for (const Vec& v : t) s = std::max(s, v.lpNorm<Eigen::Infinity>());
        return s;
    };
    std::vector<Vec> tension = discrete_tension(p, out.config);
    double sup0 = sup_of(tension);
    out.tension_history.push_back(sup0);
    for (int it = 0; it < steps; ++it) {
        for (int k = 0; k < p.grid.count; ++k) {
            if (p.grid.boundary[k]) continue;
            const Vec w = dt * tension[k];
            if (w.lpNorm<Eigen::Infinity>() > 0.0)
                out.config.values[k] = p.target->exp_map(out.config.values[k], w, 1.0);
        }
        tension = discrete_tension(p, out.config);
        const double sup = sup_of(tension);
        out.tension_history.push_back(sup);
        out.steps_taken = it + 1;
        if (sup > 10.0 * sup0 + 1e-12)
            throw FlowDiverged("gradient_flow_harmonic: tension grew to " + std::to_string(sup));
        if (stop_tension > 0.0 && sup < stop_tension) break;
    }
    return out;
}

namespace {

// Per-node cache for the second-variation bilinear form (five-term integrand
// with the curvature term from R_std(B, dφ·X)A paired against φ*L_,v).
struct SecondVariationAssembly {
    const EnergyProblem* p;
    std::vector<NodeData> nodes;
    std::vector<Vec> lv;               // flattened φ*L_,v
    std::vector<SecondPartials> sp;
    std::vector<CurvatureTensor> curv; // at φ(x)

    SecondVariationAssembly(const EnergyProblem& prob, const FieldConfiguration& phi,
                            double crit_tol)
        : p(&prob) {
        ELResidual res = euler_lagrange_residual(prob, phi);
        if (res.sup_interior > crit_tol)
            throw NotCritical("second variation at non-critical configuration (sup residual " +
                              std::to_string(res.sup_interior) + ")");
        if (!prob.lagrangian.has_second_partials())
            throw UsageError("second variation requires exact second partials");
        nodes = gather_nodes(prob, phi);
        lv = lv_grid(prob, nodes);
        sp.reserve(nodes.size());
        curv.reserve(nodes.size());
        for (const NodeData& n : nodes) {
            sp.push_back(prob.lagrangian.second_exact(n.x, n.s, n.jac));
            curv.push_back(prob.target->curvature_at(n.s));
        }
    }

    double operator()(const VariationField& a, const VariationField& b) const {
        const int dm = p->domain_manifold->dim(), ds = p->target->dim();
        double total = 0.0;
        for (int k = 0; k < p->grid.count; ++k) {
            const NodeData& n = nodes[k];
            const Mat na = nabla_variation(*p, nodes, a.values, k);
            const Mat nb = nabla_variation(*p, nodes, b.values, k);
            Vec naf(ds * dm), nbf(ds * dm);
            for (int aa = 0; aa < ds; ++aa)
                for (int i = 0; i < dm; ++i) {
                    naf[aa * dm + i] = na(aa, i);
                    nbf[aa * dm + i] = nb(aa, i);
                }
            const SecondPartials& s2 = sp[k];
            double term = a.values[k].dot(s2.sigma_sigma * b.values[k]);
            term += a.values[k].dot(s2.sigma_v * nbf);
            term += naf.dot(s2.v_sigma * b.values[k]);
            term += naf.dot(s2.v_v * nbf);
            // Curvature term: Σ L_,v(a,i) · [R_std(B, dφ∂_i)A]^a.
            const CurvatureTensor& R = curv[k];
            for (int aa = 0; aa < ds; ++aa)
                for (int i = 0; i < dm; ++i) {
                    double c = 0.0;
                    for (int bb = 0; bb < ds; ++bb)
                        for (int cc = 0; cc < ds; ++cc)
                            for (int dd = 0; dd < ds; ++dd)
                                c += R.up(aa, bb, cc, dd) * a.values[k][bb] * b.values[k][cc] *
                                     n.jac(dd, i);
                    term += lv[k][aa * dm + i] * c;
                }
            total += n.weight * term;
        }
        return total;
    }
};

} // namespace

SecondVariationResult second_variation(const EnergyProblem& p, const FieldConfiguration& phi,
                                       const VariationField& a, const VariationField& b,
                                       bool with_fd, double fd_eps, double crit_tol) {
    check_boundary_mode(p, a);
    check_boundary_mode(p, b);
    SecondVariationAssembly form(p, phi, crit_tol);
    SecondVariationResult out;
    out.formula = form(a, b);
    if (with_fd) {
        const double epp = energy(p, vary(p, phi, a, &b, fd_eps, fd_eps));
        const double epm = energy(p, vary(p, phi, a, &b, fd_eps, -fd_eps));
        const double emp = energy(p, vary(p, phi, a, &b, -fd_eps, fd_eps));
        const double emm = energy(p, vary(p, phi, a, &b, -fd_eps, -fd_eps));
        out.fd = (epp - epm - emp + emm) / (4 * fd_eps * fd_eps);
    }
    return out;
}

std::vector<Vec> unit_normal_field(const EnergyProblem& p, const FieldConfiguration& phi) {
    if (!p.grid.is_interval())
        throw DomainNotInterval("unit_normal_field: interval domains only");
    if (p.target->dim() != 2) throw UsageError("unit_normal_field: 2D targets only");
    std::vector<Vec> out(p.grid.count);
    for (int k = 0; k < p.grid.count; ++k) {
        const Vec s = phi.values[k];
        const Mat h = p.target->metric_at(s);
        const Vec vel = p.grid.jacobian_at(phi.values, k).col(0);
        const Vec w = h * vel;
        Vec n(2);
        n[0] = -w[1];
        n[1] = w[0];
        const double len = std::sqrt(n.dot(h * n));
        if (len < 1e-14) throw UsageError("unit_normal_field: stationary curve point");
        out[k] = n / len;
    }
    return out;
}

Vec index_form_spectrum(const EnergyProblem& p, const FieldConfiguration& geodesic, int k) {
    if (!p.grid.is_interval())
        throw DomainNotInterval("index_form_spectrum: interval domains only");
    if (k < 1) throw UsageError("index_form_spectrum: basis size must be positive");
    SecondVariationAssembly form(p, geodesic, 1e-5);
    const std::vector<Vec> normal = unit_normal_field(p, geodesic);
    const double a0 = p.grid.points.front()[0];
    const double len = p.grid.points.back()[0] - a0;

    std::vector<VariationField> basis(k);
    for (int m = 1; m <= k; ++m) {
        basis[m - 1].values.resize(p.grid.count);
        for (int i = 0; i < p.grid.count; ++i) {
            const double t = p.grid.points[i][0] - a0;
            double amp = std::sin(m * M_PI * t / len);
            if (p.grid.boundary[i]) amp = 0.0; // exact zeros at the ends
            basis[m - 1].values[i] = amp * normal[i];
        }
    }
    Mat gram(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = i; j < k; ++j) {
            gram(i, j) = form(basis[i], basis[j]);
            gram(j, i) = gram(i, j);
        }
    Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (gram + gram.transpose()));
    return eig.eigenvalues();
}

} // namespace bundletc
