#include "bundletc/manifolds.hpp"

#include <cmath>
#include <sstream>

namespace bundletc {

namespace {

std::string point_string(const Vec& x) {
    std::ostringstream os;
    os << "(";
    for (int i = 0; i < x.size(); ++i) {
        if (i) os << ",";
        os << x[i];
    }
    os << ")";
    return os.str();
}

} // namespace

Vec CurvatureTensor::apply(const Vec& x, const Vec& y, const Vec& z) const {
    Vec out = Vec::Zero(n);
    for (int l = 0; l < n; ++l) {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    s += up(l, i, j, k) * z[i] * x[j] * y[k];
        out[l] = s;
    }
    return out;
}

RiemannianManifold::RiemannianManifold(std::string name, int dim, DomainFn domain, MetricFn metric)
    : id_{std::move(name), dim}, domain_(std::move(domain)), metric_(std::move(metric)) {
    if (dim < 1) throw UsageError("manifold dimension must be >= 1");
}

void RiemannianManifold::require_in_chart(const Vec& x) const {
    if (x.size() != dim())
        throw OutOfChart(id_.name + ": point of dimension " + std::to_string(x.size()));
    if (!domain_(x)) throw OutOfChart(id_.name + ": point " + point_string(x) + " outside chart");
}

Mat RiemannianManifold::metric_at(const Vec& x) const {
    require_in_chart(x);
    return metric_(x);
}

Mat RiemannianManifold::inverse_metric_at(const Vec& x) const {
    return metric_at(x).inverse();
}

double RiemannianManifold::volume_density_at(const Vec& x) const {
    return std::sqrt(metric_at(x).determinant());
}

std::vector<Mat> RiemannianManifold::metric_derivs_at(const Vec& x) const {
    require_in_chart(x);
    if (metric_derivs_) return metric_derivs_(x);
    std::vector<Mat> d(dim());
    Vec xp = x, xm = x;
    for (int k = 0; k < dim(); ++k) {
        xp[k] = x[k] + fd_step_;
        xm[k] = x[k] - fd_step_;
        d[k] = (metric_(xp) - metric_(xm)) / (2.0 * fd_step_);
        xp[k] = x[k];
        xm[k] = x[k];
    }
    return d;
}

Christoffel RiemannianManifold::christoffel_at(const Vec& x) const {
    require_in_chart(x);
    if (christoffel_) return christoffel_(x);
    const int n = dim();
    const Mat ginv = inverse_metric_at(x);
    const std::vector<Mat> dg = metric_derivs_at(x);
    Christoffel c;
    c.gamma.assign(n, Mat::Zero(n, n));
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                double s = 0.0;
                for (int l = 0; l < n; ++l)
                    s += ginv(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
                c.gamma[k](i, j) = 0.5 * s;
                c.gamma[k](j, i) = c.gamma[k](i, j);
            }
    return c;
}

std::vector<Christoffel> RiemannianManifold::christoffel_derivs_at(const Vec& x) const {
    require_in_chart(x);
    const int n = dim();
    std::vector<Christoffel> d(n);
    Vec xp = x, xm = x;
    for (int m = 0; m < n; ++m) {
        xp[m] = x[m] + fd_step_;
        xm[m] = x[m] - fd_step_;
        Christoffel cp = christoffel_at(xp);
        Christoffel cm = christoffel_at(xm);
        d[m].gamma.resize(n);
        for (int k = 0; k < n; ++k) d[m].gamma[k] = (cp.gamma[k] - cm.gamma[k]) / (2.0 * fd_step_);
        xp[m] = x[m];
        xm[m] = x[m];
    }
    return d;
}

CurvatureTensor RiemannianManifold::curvature_at(const Vec& x) const {
    const int n = dim();
    const Christoffel c = christoffel_at(x);
    const std::vector<Christoffel> dc = christoffel_derivs_at(x);
    const Mat g = metric_at(x);

    CurvatureTensor R;
    R.n = n;
    R.up_data.assign(static_cast<std::size_t>(n) * n * n * n, 0.0);
    R.low_data.assign(R.up_data.size(), 0.0);
    // up(l,i,j,k) = ∂_j Γ^l_{ki} − ∂_k Γ^l_{ji} + Γ^l_{jm}Γ^m_{ki} − Γ^l_{km}Γ^m_{ji}
    for (int l = 0; l < n; ++l)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    double s = dc[j].gamma[l](k, i) - dc[k].gamma[l](j, i);
                    for (int m = 0; m < n; ++m)
                        s += c(l, j, m) * c(m, k, i) - c(l, k, m) * c(m, j, i);
                    R.up_ref(l, i, j, k) = s;
                }
    for (int l = 0; l < n; ++l)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    double s = 0.0;
                    for (int m = 0; m < n; ++m) s += g(l, m) * R.up(m, i, j, k);
                    R.low_data[((static_cast<std::size_t>(l) * n + i) * n + j) * n + k] = s;
                }
    return R;
}

double RiemannianManifold::sectional_curvature(const Vec& x, const Vec& u, const Vec& v) const {
    const Mat g = metric_at(x);
    const CurvatureTensor R = curvature_at(x);
    const Vec ruv = R.apply(u, v, v); // R(u,v)v
    const double num = u.dot(g * ruv);
    const double uu = u.dot(g * u), vv = v.dot(g * v), uv = u.dot(g * v);
    const double den = uu * vv - uv * uv;
    if (std::abs(den) < 1e-14) throw UsageError("sectional_curvature: degenerate plane");
    return num / den;
}

namespace {

struct GeodesicState {
    Vec x, v;
};

GeodesicState geodesic_rhs(const RiemannianManifold& m, const GeodesicState& s) {
    const Christoffel c = m.christoffel_at(s.x);
    const int n = m.dim();
    Vec a = Vec::Zero(n);
    for (int k = 0; k < n; ++k) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) acc += c(k, i, j) * s.v[i] * s.v[j];
        a[k] = -acc;
    }
    return {s.v, a};
}

GeodesicState rk4_step(const RiemannianManifold& m, const GeodesicState& s, double h) {
    auto add = [](const GeodesicState& a, const GeodesicState& b, double c) {
        return GeodesicState{a.x + c * b.x, a.v + c * b.v};
    };
    GeodesicState k1 = geodesic_rhs(m, s);
    GeodesicState k2 = geodesic_rhs(m, add(s, k1, h / 2));
    GeodesicState k3 = geodesic_rhs(m, add(s, k2, h / 2));
    GeodesicState k4 = geodesic_rhs(m, add(s, k3, h));
    GeodesicState out = s;
    out.x += (h / 6.0) * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
    out.v += (h / 6.0) * (k1.v + 2 * k2.v + 2 * k3.v + k4.v);
    return out;
}

} // namespace

void RiemannianManifold::exp_map_with_velocity(const Vec& x, const Vec& v, double t, double step,
                                               Vec& pos_out, Vec& vel_out) const {
    require_in_chart(x);
    if (t == 0.0 || v.lpNorm<Eigen::Infinity>() == 0.0) {
        pos_out = x;
        vel_out = v;
        return;
    }
    const double arc = std::abs(t) * v.lpNorm<Eigen::Infinity>();
    const long steps = std::max<long>(4, static_cast<long>(std::ceil(arc / step)));
    const double h = t / static_cast<double>(steps);
    GeodesicState s{x, v};
    for (long i = 0; i < steps; ++i) {
        try {
            s = rk4_step(*this, s, h);
        } catch (const OutOfChart&) {
            // An intermediate stage stepped outside the chart.
            throw ChartExit(id_.name + ": geodesic left chart at t=" +
                                std::to_string((i + 1) * h),
                            (i + 1) * h);
        }
        if (!domain_(s.x))
            throw ChartExit(id_.name + ": geodesic left chart at t=" +
                                std::to_string((i + 1) * h),
                            (i + 1) * h);
    }
    pos_out = s.x;
    vel_out = s.v;
}

Vec RiemannianManifold::exp_map(const Vec& x, const Vec& v, double t, double step) const {
    Vec p, w;
    exp_map_with_velocity(x, v, t, step, p, w);
    return p;
}

double RiemannianManifold::norm(const Vec& x, const Vec& v) const {
    return std::sqrt(v.dot(metric_at(x) * v));
}

ManifoldPtr make_euclidean(int dim) {
    auto m = std::make_shared<RiemannianManifold>(
        "Euclidean" + std::to_string(dim), dim, [](const Vec&) { return true; },
        [dim](const Vec&) { return Mat::Identity(dim, dim); });
    m->set_metric_derivs([dim](const Vec&) { return std::vector<Mat>(dim, Mat::Zero(dim, dim)); });
    m->set_christoffel([dim](const Vec&) {
        Christoffel c;
        c.gamma.assign(dim, Mat::Zero(dim, dim));
        return c;
    });
    return m;
}

ManifoldPtr make_sphere2() {
    // Spherical chart (θ, φ), g = diag(1, sin²θ); φ unbounded (the metric is
    // φ-independent), θ kept away from the poles.
    auto m = std::make_shared<RiemannianManifold>(
        "Sphere2", 2, [](const Vec& x) { return x[0] > 0.01 && x[0] < M_PI - 0.01; },
        [](const Vec& x) {
            Mat g = Mat::Zero(2, 2);
            g(0, 0) = 1.0;
            const double s = std::sin(x[0]);
            g(1, 1) = s * s;
            return g;
        });
    m->set_metric_derivs([](const Vec& x) {
        std::vector<Mat> d(2, Mat::Zero(2, 2));
        d[0](1, 1) = 2.0 * std::sin(x[0]) * std::cos(x[0]);
        return d;
    });
    m->set_christoffel([](const Vec& x) {
        const double s = std::sin(x[0]), c = std::cos(x[0]);
        Christoffel ch;
        ch.gamma.assign(2, Mat::Zero(2, 2));
        ch.gamma[0](1, 1) = -s * c;         // Γ^θ_{φφ}
        ch.gamma[1](0, 1) = c / s;          // Γ^φ_{θφ}
        ch.gamma[1](1, 0) = c / s;
        return ch;
    });
    return m;
}

ManifoldPtr make_half_plane() {
    // Hyperbolic half-plane (x, y), y > 0, g = diag(1/y², 1/y²).
    auto m = std::make_shared<RiemannianManifold>(
        "HalfPlane", 2, [](const Vec& x) { return x[1] > 1e-8; },
        [](const Vec& x) {
            const double f = 1.0 / (x[1] * x[1]);
            Mat g = Mat::Zero(2, 2);
            g(0, 0) = f;
            g(1, 1) = f;
            return g;
        });
    m->set_metric_derivs([](const Vec& x) {
        std::vector<Mat> d(2, Mat::Zero(2, 2));
        const double f = -2.0 / (x[1] * x[1] * x[1]);
        d[1](0, 0) = f;
        d[1](1, 1) = f;
        return d;
    });
    m->set_christoffel([](const Vec& x) {
        const double iy = 1.0 / x[1];
        Christoffel ch;
        ch.gamma.assign(2, Mat::Zero(2, 2));
        ch.gamma[0](0, 1) = -iy; // Γ^x_{xy}
        ch.gamma[0](1, 0) = -iy;
        ch.gamma[1](0, 0) = iy;  // Γ^y_{xx}
        ch.gamma[1](1, 1) = -iy; // Γ^y_{yy}
        return ch;
    });
    return m;
}

ManifoldPtr make_flat_torus2() {
    auto m = std::make_shared<RiemannianManifold>(
        "FlatTorus2", 2, [](const Vec&) { return true; },
        [](const Vec&) { return Mat::Identity(2, 2); });
    m->set_metric_derivs([](const Vec&) { return std::vector<Mat>(2, Mat::Zero(2, 2)); });
    m->set_christoffel([](const Vec&) {
        Christoffel c;
        c.gamma.assign(2, Mat::Zero(2, 2));
        return c;
    });
    return m;
}

ManifoldPtr make_manifold(const std::string& name, int dim) {
    if (name == "euclidean") return make_euclidean(dim);
    if (name == "sphere2") return make_sphere2();
    if (name == "halfplane") return make_half_plane();
    if (name == "flattorus2") return make_flat_torus2();
    throw UsageError("unknown manifold '" + name + "'");
}

SmoothMap::SmoothMap(std::string name, ManifoldPtr domain, ManifoldPtr codomain, ForwardFn fwd)
    : name_(std::move(name)), domain_(std::move(domain)), codomain_(std::move(codomain)),
      forward_(std::move(fwd)) {}

Vec SmoothMap::operator()(const Vec& x) const {
    domain_->require_in_chart(x);
    Vec y = forward_(x);
    if (!codomain_->in_chart(y))
        throw OutOfChart(name_ + ": image " + "of point leaves chart of " + codomain_->name());
    return y;
}

Mat SmoothMap::jacobian(const Vec& x) const {
    if (jacobian_) return jacobian_(x);
    return fd_jacobian([this](const Vec& p) { return forward_(p); }, x);
}

std::vector<Mat> SmoothMap::hessian(const Vec& x) const {
    const int dn = domain_->dim(), cn = codomain_->dim();
    if (hessian_) return hessian_(x);
    std::vector<Mat> h(cn, Mat::Zero(dn, dn));
    const double s = 1e-4;
    for (int i = 0; i < dn; ++i)
        for (int j = i; j < dn; ++j) {
            Vec xpp = x, xpm = x, xmp = x, xmm = x;
            xpp[i] += s; xpp[j] += s;
            xpm[i] += s; xpm[j] -= s;
            xmp[i] -= s; xmp[j] += s;
            xmm[i] -= s; xmm[j] -= s;
            Vec d = (forward_(xpp) - forward_(xpm) - forward_(xmp) + forward_(xmm)) / (4 * s * s);
            for (int a = 0; a < cn; ++a) {
                h[a](i, j) = d[a];
                h[a](j, i) = d[a];
            }
        }
    return h;
}

SmoothMap SmoothMap::identity(const ManifoldPtr& m) {
    SmoothMap id("id_" + m->name(), m, m, [](const Vec& x) { return x; });
    const int n = m->dim();
    id.set_jacobian([n](const Vec&) { return Mat::Identity(n, n); });
    id.set_hessian([n](const Vec&) { return std::vector<Mat>(n, Mat::Zero(n, n)); });
    return id;
}

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
    Vec g = Vec::Zero(x.size());
    Vec xp = x, xm = x;
    for (int i = 0; i < x.size(); ++i) {
        xp[i] = x[i] + h;
        xm[i] = x[i] - h;
        g[i] = (f(xp) - f(xm)) / (2 * h);
        xp[i] = x[i];
        xm[i] = x[i];
    }
    return g;
}

Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double h) {
    Vec xp = x, xm = x;
    Vec probe = f(x);
    Mat j = Mat::Zero(probe.size(), x.size());
    for (int i = 0; i < x.size(); ++i) {
        xp[i] = x[i] + h;
        xm[i] = x[i] - h;
        j.col(i) = (f(xp) - f(xm)) / (2 * h);
        xp[i] = x[i];
        xm[i] = x[i];
    }
    return j;
}

Mat fd_hessian(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
    const int n = static_cast<int>(x.size());
    Mat hss = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            Vec xpp = x, xpm = x, xmp = x, xmm = x;
            xpp[i] += h; xpp[j] += h;
            xpm[i] += h; xpm[j] -= h;
            xmp[i] -= h; xmp[j] += h;
            xmm[i] -= h; xmm[j] -= h;
            hss(i, j) = (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (4 * h * h);
            hss(j, i) = hss(i, j);
        }
    return hss;
}

} // namespace bundletc
