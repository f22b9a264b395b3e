#include "bundletc/covariant.hpp"

#include <cmath>
#include <cstdio>

namespace bundletc {

std::string point_key(const Vec& x) {
    std::string s = "(";
    char buf[32];
    for (int i = 0; i < x.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9g", x[i]);
        if (i) s += ",";
        s += buf;
    }
    s += ")";
    return s;
}

Factor domain_vector() { return {FactorBase::Domain, Variance::Vector}; }
Factor domain_covector() { return {FactorBase::Domain, Variance::Covector}; }
Factor target_vector() { return {FactorBase::Target, Variance::Vector}; }
Factor target_covector() { return {FactorBase::Target, Variance::Covector}; }

namespace {

std::size_t word_size(const std::vector<int>& dims) {
    std::size_t n = 1;
    for (int d : dims) n *= static_cast<std::size_t>(d);
    return n;
}

// Iterate multi-indices of `dims` row-major; f(flat_offset, idx).
template <typename F>
void for_each_index(const std::vector<int>& dims, F&& f) {
    std::vector<int> idx(dims.size(), 0);
    std::size_t flat = 0;
    const std::size_t total = word_size(dims);
    for (; flat < total; ++flat) {
        f(flat, idx);
        for (int k = static_cast<int>(dims.size()) - 1; k >= 0; --k) {
            if (++idx[k] < dims[k]) break;
            idx[k] = 0;
        }
    }
}

std::vector<std::size_t> strides_of(const std::vector<int>& dims) {
    std::vector<std::size_t> s(dims.size(), 1);
    for (int i = static_cast<int>(dims.size()) - 2; i >= 0; --i)
        s[i] = s[i + 1] * static_cast<std::size_t>(dims[i + 1]);
    return s;
}

} // namespace

TensorField::TensorField(ManifoldPtr m, std::vector<Variance> word, RawFn raw)
    : manifold_(std::move(m)), word_(std::move(word)), raw_(std::move(raw)) {
    btype_ = BundleType::line(manifold_->id());
    if (!word_.empty()) {
        auto leaf = [&](Variance v) {
            return v == Variance::Vector ? BundleType::tangent(manifold_->id())
                                         : BundleType::cotangent(manifold_->id());
        };
        btype_ = leaf(word_[0]);
        for (std::size_t i = 1; i < word_.size(); ++i)
            btype_ = BundleType::tensor_shared(btype_, leaf(word_[i]));
    }
}

TypedTensor TensorField::eval(const Vec& x) const {
    manifold_->require_in_chart(x);
    const std::string space = manifold_->name() + "@" + point_key(x);
    std::vector<AxisTag> tags;
    for (Variance v : word_) tags.push_back({space, manifold_->dim(), v});
    return TypedTensor(std::move(tags), raw_(x));
}

TensorField scalar_field(ManifoldPtr m, std::function<double(const Vec&)> f) {
    return TensorField(std::move(m), {},
                       [f = std::move(f)](const Vec& x) { return std::vector<double>{f(x)}; });
}

TensorField metric_field(ManifoldPtr m) {
    const RiemannianManifold* mp = m.get();
    return TensorField(m, {Variance::Covector, Variance::Covector}, [mp](const Vec& x) {
        const Mat g = mp->metric_at(x);
        std::vector<double> out(static_cast<std::size_t>(g.rows()) * g.cols());
        for (int i = 0; i < g.rows(); ++i)
            for (int j = 0; j < g.cols(); ++j)
                out[static_cast<std::size_t>(i) * g.cols() + j] = g(i, j);
        return out;
    });
}

SectionAlongMap::SectionAlongMap(MapPtr phi, std::vector<Factor> word, RawFn raw)
    : phi_(std::move(phi)), word_(std::move(word)), raw_(std::move(raw)) {}

TypedTensor SectionAlongMap::eval(const Vec& x) const {
    const Vec y = (*phi_)(x);
    const std::string dspace = phi_->domain()->name() + "@" + point_key(x);
    const std::string tspace = phi_->codomain()->name() + "@" + point_key(y);
    std::vector<AxisTag> tags;
    for (const Factor& f : word_) {
        if (f.base == FactorBase::Domain)
            tags.push_back({dspace, phi_->domain()->dim(), f.variance});
        else
            tags.push_back({tspace, phi_->codomain()->dim(), f.variance});
    }
    return TypedTensor(std::move(tags), raw_(x));
}

TwoPointField tangent_map(MapPtr phi) {
    const SmoothMap* p = phi.get();
    return SectionAlongMap(phi, {target_vector(), domain_covector()}, [p](const Vec& x) {
        const Mat j = p->jacobian(x);
        std::vector<double> out(static_cast<std::size_t>(j.rows()) * j.cols());
        for (int a = 0; a < j.rows(); ++a)
            for (int i = 0; i < j.cols(); ++i)
                out[static_cast<std::size_t>(a) * j.cols() + i] = j(a, i);
        return out;
    });
}

SectionAlongMap pullback_section(MapPtr phi, const TensorField& e) {
    std::vector<Factor> word;
    for (Variance v : e.word()) word.push_back({FactorBase::Target, v});
    const SmoothMap* p = phi.get();
    return SectionAlongMap(phi, std::move(word),
                           [p, e](const Vec& x) { return e.raw((*p)(x)); });
}

namespace {

// Shared covariant-derivative engine. `phi` is null for plain tensor fields
// (all factors Domain). Appends one Domain covector slot.
std::vector<double> covariant_derivative_raw(const std::function<std::vector<double>(const Vec&)>& raw,
                                             const std::vector<Factor>& word,
                                             const RiemannianManifold& m, const SmoothMap* phi,
                                             const Vec& x, double h) {
    const int dm = m.dim();
    std::vector<int> dims;
    dims.reserve(word.size());
    const int dt = phi ? phi->codomain()->dim() : 0;
    for (const Factor& f : word) dims.push_back(f.base == FactorBase::Domain ? dm : dt);

    const std::size_t n = word_size(dims);
    const std::vector<std::size_t> strides = strides_of(dims);

    // Coordinate derivatives of the components.
    std::vector<std::vector<double>> partial(dm);
    {
        Vec xp = x, xm = x;
        for (int j = 0; j < dm; ++j) {
            xp[j] = x[j] + h;
            xm[j] = x[j] - h;
            std::vector<double> fp = raw(xp), fm = raw(xm);
            partial[j].resize(n);
            for (std::size_t k = 0; k < n; ++k) partial[j][k] = (fp[k] - fm[k]) / (2 * h);
            xp[j] = x[j];
            xm[j] = x[j];
        }
    }

    const std::vector<double> val = raw(x);
    const Christoffel gm = m.christoffel_at(x);
    Christoffel gs;
    Mat jac;
    if (phi) {
        const Vec y = (*phi)(x);
        gs = phi->codomain()->christoffel_at(y);
        jac = phi->jacobian(x);
    }

    // Correction matrix per factor and derivative direction j:
    // C(new, old), added as C(idx_p, m)·T[idx with slot p = m].
    auto corr = [&](const Factor& f, int j, int newi, int oldi) -> double {
        if (f.base == FactorBase::Domain) {
            return f.variance == Variance::Vector ? gm(newi, j, oldi) : -gm(oldi, j, newi);
        }
        double s = 0.0;
        const int ds = phi->codomain()->dim();
        if (f.variance == Variance::Vector) {
            for (int c = 0; c < ds; ++c) s += gs(newi, oldi, c) * jac(c, j);
        } else {
            for (int c = 0; c < ds; ++c) s -= gs(oldi, newi, c) * jac(c, j);
        }
        return s;
    };

    std::vector<double> out(n * static_cast<std::size_t>(dm), 0.0);
    for_each_index(dims, [&](std::size_t flat, const std::vector<int>& idx) {
        for (int j = 0; j < dm; ++j) {
            double s = partial[j][flat];
            for (std::size_t p = 0; p < word.size(); ++p) {
                const int dp = dims[p];
                const std::size_t base = flat - static_cast<std::size_t>(idx[p]) * strides[p];
                for (int old = 0; old < dp; ++old) {
                    const double c = corr(word[p], j, idx[p], old);
                    if (c != 0.0) s += c * val[base + static_cast<std::size_t>(old) * strides[p]];
                }
            }
            out[flat * dm + j] = s;
        }
    });
    return out;
}

std::vector<Factor> domain_word(const std::vector<Variance>& w) {
    std::vector<Factor> out;
    for (Variance v : w) out.push_back({FactorBase::Domain, v});
    return out;
}

} // namespace

TensorField covariant_derivative(const TensorField& x, double h) {
    std::vector<Variance> word = x.word();
    word.push_back(Variance::Covector);
    ManifoldPtr m = x.manifold();
    auto raw = [x, m, h](const Vec& p) {
        return covariant_derivative_raw([&x](const Vec& q) { return x.raw(q); },
                                        domain_word(x.word()), *m, nullptr, p, h);
    };
    return TensorField(m, std::move(word), std::move(raw));
}

SectionAlongMap pullback_covariant_derivative(const SectionAlongMap& s, double h) {
    std::vector<Factor> word = s.word();
    word.push_back(domain_covector());
    MapPtr phi = s.map();
    auto raw = [s, phi, h](const Vec& p) {
        return covariant_derivative_raw([&s](const Vec& q) { return s.raw(q); }, s.word(),
                                        *phi->domain(), phi.get(), p, h);
    };
    return SectionAlongMap(phi, std::move(word), std::move(raw));
}

SectionAlongMap covariant_hessian(MapPtr phi) {
    const SmoothMap* p = phi.get();
    auto raw = [p](const Vec& x) {
        const int dm = p->domain()->dim(), ds = p->codomain()->dim();
        const Mat j = p->jacobian(x);
        const std::vector<Mat> hes = p->hessian(x);
        const Christoffel gm = p->domain()->christoffel_at(x);
        const Vec y = (*p)(x);
        const Christoffel gs = p->codomain()->christoffel_at(y);
        std::vector<double> out(static_cast<std::size_t>(ds) * dm * dm);
        for (int a = 0; a < ds; ++a)
            for (int i = 0; i < dm; ++i)
                for (int k = 0; k < dm; ++k) {
                    double s = hes[a](i, k);
                    for (int b = 0; b < ds; ++b)
                        for (int c = 0; c < ds; ++c) s += gs(a, b, c) * j(b, i) * j(c, k);
                    for (int mth = 0; mth < dm; ++mth) s -= gm(mth, i, k) * j(a, mth);
                    out[(static_cast<std::size_t>(a) * dm + i) * dm + k] = s;
                }
        return out;
    };
    return SectionAlongMap(std::move(phi),
                           {target_vector(), domain_covector(), domain_covector()},
                           std::move(raw));
}

SectionAlongMap tension_field(MapPtr phi) {
    SectionAlongMap hess = covariant_hessian(phi);
    const SmoothMap* p = phi.get();
    auto raw = [hess, p](const Vec& x) {
        const int dm = p->domain()->dim(), ds = p->codomain()->dim();
        const Mat ginv = p->domain()->inverse_metric_at(x);
        const std::vector<double> h = hess.raw(x);
        std::vector<double> out(ds, 0.0);
        for (int a = 0; a < ds; ++a)
            for (int i = 0; i < dm; ++i)
                for (int j = 0; j < dm; ++j)
                    out[a] += ginv(i, j) * h[(static_cast<std::size_t>(a) * dm + i) * dm + j];
        return out;
    };
    return SectionAlongMap(std::move(phi), {target_vector()}, std::move(raw));
}

namespace {

std::vector<double> divergence_raw(const std::vector<double>& grad, const std::vector<int>& dims,
                                   int dm) {
    // grad has dims ++ [dm]; trace over (last original slot, derivative slot).
    std::vector<int> head(dims.begin(), dims.end() - 1);
    const int last = dims.back();
    if (last != dm) throw TagMismatch("divergence: trailing factor is not Tangent of the domain");
    const std::size_t nh = word_size(head);
    std::vector<double> out(nh, 0.0);
    for (std::size_t k = 0; k < nh; ++k)
        for (int i = 0; i < last; ++i)
            out[k] += grad[(k * static_cast<std::size_t>(last) + i) * dm + i];
    return out;
}

} // namespace

TensorField divergence(const TensorField& t) {
    if (t.rank() == 0 || t.word().back() != Variance::Vector)
        throw TagMismatch("divergence: field needs a trailing Tangent factor");
    TensorField grad = covariant_derivative(t);
    std::vector<Variance> word(t.word().begin(), t.word().end() - 1);
    ManifoldPtr m = t.manifold();
    const int dm = m->dim();
    std::vector<int> dims(t.rank(), dm);
    auto raw = [grad, dims, dm](const Vec& x) { return divergence_raw(grad.raw(x), dims, dm); };
    return TensorField(std::move(m), std::move(word), std::move(raw));
}

SectionAlongMap divergence(const SectionAlongMap& s) {
    if (s.rank() == 0 || s.word().back().base != FactorBase::Domain ||
        s.word().back().variance != Variance::Vector)
        throw TagMismatch("divergence: section needs a trailing Tangent(domain) factor");
    SectionAlongMap grad = pullback_covariant_derivative(s);
    std::vector<Factor> word(s.word().begin(), s.word().end() - 1);
    MapPtr phi = s.map();
    const int dm = phi->domain()->dim(), dt = phi->codomain()->dim();
    std::vector<int> dims;
    for (const Factor& f : s.word()) dims.push_back(f.base == FactorBase::Domain ? dm : dt);
    auto raw = [grad, dims, dm](const Vec& x) { return divergence_raw(grad.raw(x), dims, dm); };
    return SectionAlongMap(std::move(phi), std::move(word), std::move(raw));
}

namespace {

template <typename SecondDeriv>
TypedTensor antisymmetrize_second(const SecondDeriv& d2, const std::vector<int>& fiber_dims,
                                  const std::vector<AxisTag>& fiber_tags, int dm, const Vec& xd,
                                  const Vec& yd) {
    // d2 has layout fiber ++ [inner i, outer j]; contract with X⊗Y − Y⊗X
    // (inner slot takes X).
    const std::size_t nf = word_size(fiber_dims);
    std::vector<double> out(nf, 0.0);
    for (std::size_t k = 0; k < nf; ++k) {
        double s = 0.0;
        for (int i = 0; i < dm; ++i)
            for (int j = 0; j < dm; ++j) {
                const double w = xd[i] * yd[j] - yd[i] * xd[j];
                if (w != 0.0) s += d2[(k * dm + i) * dm + j] * w;
            }
        out[k] = s;
    }
    if (fiber_tags.empty()) return TypedTensor::scalar(out[0]);
    return TypedTensor(fiber_tags, std::move(out));
}

} // namespace

TypedTensor curvature_operator(const TensorField& t, const Vec& x, const Vec& xdir,
                               const Vec& ydir, double outer_h) {
    TensorField d1 = covariant_derivative(t);
    TensorField d2 = covariant_derivative(d1, outer_h);
    const int dm = t.manifold()->dim();
    std::vector<int> fdims(t.rank(), dm);
    const std::string space = t.manifold()->name() + "@" + point_key(x);
    std::vector<AxisTag> tags;
    for (Variance v : t.word()) tags.push_back({space, dm, v});
    return antisymmetrize_second(d2.raw(x), fdims, tags, dm, xdir, ydir);
}

TypedTensor curvature_operator(const SectionAlongMap& s, const Vec& x, const Vec& xdir,
                               const Vec& ydir, double outer_h) {
    SectionAlongMap d1 = pullback_covariant_derivative(s);
    SectionAlongMap d2 = pullback_covariant_derivative(d1, outer_h);
    const int dm = s.map()->domain()->dim(), dt = s.map()->codomain()->dim();
    std::vector<int> fdims;
    for (const Factor& f : s.word()) fdims.push_back(f.base == FactorBase::Domain ? dm : dt);
    const Vec y = (*s.map())(x);
    const std::string dspace = s.map()->domain()->name() + "@" + point_key(x);
    const std::string tspace = s.map()->codomain()->name() + "@" + point_key(y);
    std::vector<AxisTag> tags;
    for (const Factor& f : s.word())
        tags.push_back(f.base == FactorBase::Domain ? AxisTag{dspace, dm, f.variance}
                                                    : AxisTag{tspace, dt, f.variance});
    return antisymmetrize_second(d2.raw(x), fdims, tags, dm, xdir, ydir);
}

double pullback_curvature_identity_error(const MapPtr& phi, const SectionAlongMap& sigma,
                                         const Vec& x, const Vec& xdir, const Vec& ydir) {
    if (sigma.rank() != 1 || sigma.word()[0].base != FactorBase::Target ||
        sigma.word()[0].variance != Variance::Vector)
        throw UsageError("pullback_curvature_identity_error: σ must be a φ*TS section");
    const TypedTensor lhs = curvature_operator(sigma, x, xdir, ydir);

    // Right side: φ*R^{TS} contracted with (∇∘φ·X, ∇∘φ·Y) and σ, in the
    // operator sign convention (−R_std).
    const Vec y = (*phi)(x);
    const Mat j = phi->jacobian(x);
    const CurvatureTensor R = phi->codomain()->curvature_at(y);
    const std::vector<double> sv = sigma.raw(x);
    Vec sigv = Vec::Zero(phi->codomain()->dim());
    for (int a = 0; a < sigv.size(); ++a) sigv[a] = sv[a];
    const Vec rhs = -R.apply(j * xdir, j * ydir, sigv);

    double err = 0.0;
    for (int a = 0; a < rhs.size(); ++a)
        err = std::max(err, std::abs(lhs.data()[a] - rhs[a]));
    return err;
}

Mat ConnectionMap::apply(const Vec& x, const Vec& s, const Mat& a, const Vec& xdot,
                         const Vec& sdot, const Mat& adot) const {
    const int dm = domain->dim(), ds = target->dim();
    const Christoffel gm = domain->christoffel_at(x);
    const Christoffel gs = target->christoffel_at(s);
    Mat out = adot;
    for (int p = 0; p < ds; ++p)
        for (int i = 0; i < dm; ++i) {
            double corr = 0.0;
            for (int b = 0; b < ds; ++b)
                for (int c = 0; c < ds; ++c) corr += gs(p, b, c) * sdot[c] * a(b, i);
            for (int k = 0; k < dm; ++k)
                for (int m = 0; m < dm; ++m) corr -= gm(m, k, i) * xdot[k] * a(p, m);
            out(p, i) += corr;
        }
    return out;
}

LagrangianPartials partial_covariant_derivatives(const TotalSpaceFn& lagrangian,
                                                 const RiemannianManifold& domain,
                                                 const RiemannianManifold& target, const Vec& x,
                                                 const Vec& s, const Mat& a, double transport_eps,
                                                 double fiber_eps) {
    const int dm = domain.dim(), ds = target.dim();
    LagrangianPartials out;

    out.v = Mat::Zero(ds, dm);
    for (int p = 0; p < ds; ++p)
        for (int i = 0; i < dm; ++i) {
            Mat ap = a, am = a;
            ap(p, i) += fiber_eps;
            am(p, i) -= fiber_eps;
            out.v(p, i) = (lagrangian(x, s, ap) - lagrangian(x, s, am)) / (2 * fiber_eps);
        }

    // Spatial component: move s along each coordinate direction, transporting
    // the TS factor of A parallelly (one explicit Euler transport step).
    const Christoffel gs = target.christoffel_at(s);
    out.sigma = Vec::Zero(ds);
    for (int c = 0; c < ds; ++c) {
        Vec sp = s, sm = s;
        sp[c] += transport_eps;
        sm[c] -= transport_eps;
        Mat tp = a, tm = a;
        for (int p = 0; p < ds; ++p)
            for (int i = 0; i < dm; ++i) {
                double corr = 0.0;
                for (int b = 0; b < ds; ++b) corr += gs(p, b, c) * a(b, i);
                tp(p, i) -= transport_eps * corr;
                tm(p, i) += transport_eps * corr;
            }
        out.sigma[c] = (lagrangian(x, sp, tp) - lagrangian(x, sm, tm)) / (2 * transport_eps);
    }

    // Material component: move x, transporting the T*M factor.
    const Christoffel gm = domain.christoffel_at(x);
    out.mu = Vec::Zero(dm);
    for (int k = 0; k < dm; ++k) {
        Vec xp = x, xm = x;
        xp[k] += transport_eps;
        xm[k] -= transport_eps;
        Mat tp = a, tm = a;
        for (int p = 0; p < ds; ++p)
            for (int i = 0; i < dm; ++i) {
                double corr = 0.0;
                for (int m = 0; m < dm; ++m) corr += gm(m, k, i) * a(p, m);
                tp(p, i) += transport_eps * corr;
                tm(p, i) -= transport_eps * corr;
            }
        out.mu[k] = (lagrangian(xp, s, tp) - lagrangian(xm, s, tm)) / (2 * transport_eps);
    }
    return out;
}

MixedPartials mixed_partials(const FamilyFn& family, const RiemannianManifold& domain,
                             const RiemannianManifold& target, const Vec& x, double h) {
    const int dm = domain.dim(), ds = target.dim();
    const Vec s0 = family(x, 0.0);
    const Christoffel gs = target.christoffel_at(s0);

    auto jac_x = [&](double i) {
        return fd_jacobian([&](const Vec& p) { return family(p, i); }, x, h);
    };
    auto dI = [&](const Vec& p) -> Vec { return (family(p, h) - family(p, -h)) / (2 * h); };

    // ψ_{,MI}: I-covariant derivative of the partial tangent map ψ_{,M}.
    const Mat jp = jac_x(h), jm = jac_x(-h);
    const Mat j0 = jac_x(0.0);
    const Vec di_phi = dI(x);
    MixedPartials out;
    out.mi = (jp - jm) / (2 * h);
    for (int a = 0; a < ds; ++a)
        for (int jj = 0; jj < dm; ++jj) {
            double corr = 0.0;
            for (int b = 0; b < ds; ++b)
                for (int c = 0; c < ds; ++c) corr += gs(a, b, c) * j0(b, jj) * di_phi[c];
            out.mi(a, jj) += corr;
        }

    // ψ_{,IM}: M-covariant derivative of the variation field ψ_{,I}.
    out.im = fd_jacobian(dI, x, h);
    for (int a = 0; a < ds; ++a)
        for (int jj = 0; jj < dm; ++jj) {
            double corr = 0.0;
            for (int b = 0; b < ds; ++b)
                for (int c = 0; c < ds; ++c) corr += gs(a, b, c) * di_phi[b] * j0(c, jj);
            out.im(a, jj) += corr;
        }
    return out;
}

} // namespace bundletc
