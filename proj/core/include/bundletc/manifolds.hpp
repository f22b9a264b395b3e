#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bundletc/bundle_types.hpp"
#include "bundletc/tensor.hpp"

namespace bundletc {

// Rank-3 Christoffel data Γ^k_{ij}, stored as one matrix per upper index.
struct Christoffel {
    std::vector<Mat> gamma; // gamma[k](i, j)
    int dim() const { return static_cast<int>(gamma.size()); }
    double operator()(int k, int i, int j) const { return gamma[k](i, j); }
};

// Coordinate curvature tensor in the standard convention
//   up(l, i, j, k) = [R(∂_j, ∂_k) ∂_i]^l,  R(X,Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_[X,Y],
// so the round sphere has sectional curvature +1. The lowered tensor
// R_{lijk} = g_{lm} up(m,i,j,k) is antisymmetric in its last index pair.
struct CurvatureTensor {
    int n = 0;
    std::vector<double> up_data;  // l, i, j, k row-major
    std::vector<double> low_data; // same layout, first index lowered

    double up(int l, int i, int j, int k) const {
        return up_data[((l * n + i) * n + j) * n + k];
    }
    double low(int l, int i, int j, int k) const {
        return low_data[((l * n + i) * n + j) * n + k];
    }
    double& up_ref(int l, int i, int j, int k) {
        return up_data[((l * n + i) * n + j) * n + k];
    }
    // [R(X,Y)Z]^l
    Vec apply(const Vec& x, const Vec& y, const Vec& z) const;
};

// Chart-based Riemannian manifold: one chart, a domain predicate, the metric
// in coordinates, and optional exact derivative data. All evaluators are pure.
class RiemannianManifold {
public:
    using MetricFn = std::function<Mat(const Vec&)>;
    using MetricDerivFn = std::function<std::vector<Mat>(const Vec&)>; // d[k] = ∂_k g
    using ChristoffelFn = std::function<Christoffel(const Vec&)>;
    using DomainFn = std::function<bool(const Vec&)>;

    RiemannianManifold(std::string name, int dim, DomainFn domain, MetricFn metric);

    const std::string& name() const { return id_.name; }
    int dim() const { return id_.dim; }
    const ManifoldId& id() const { return id_; }

    void set_metric_derivs(MetricDerivFn f) { metric_derivs_ = std::move(f); }
    void set_christoffel(ChristoffelFn f) { christoffel_ = std::move(f); }

    bool in_chart(const Vec& x) const { return domain_(x); }
    void require_in_chart(const Vec& x) const;

    Mat metric_at(const Vec& x) const;
    Mat inverse_metric_at(const Vec& x) const;
    double volume_density_at(const Vec& x) const; // √det g
    std::vector<Mat> metric_derivs_at(const Vec& x) const;
    Christoffel christoffel_at(const Vec& x) const;
    std::vector<Christoffel> christoffel_derivs_at(const Vec& x) const; // ∂_m Γ
    CurvatureTensor curvature_at(const Vec& x) const;
    // Sectional curvature of the plane spanned by x-directions u, v.
    double sectional_curvature(const Vec& x, const Vec& u, const Vec& v) const;

    // Geodesic exponential: integrates x'' = −Γ(x', x') with a classical
    // 4th-order one-step method; step count scales with |v|·t. Throws
    // ChartExit with the exit time when the geodesic leaves the chart.
    Vec exp_map(const Vec& x, const Vec& v, double t, double step = 1e-3) const;
    // Same integration, also reporting the final velocity.
    void exp_map_with_velocity(const Vec& x, const Vec& v, double t, double step,
                               Vec& pos_out, Vec& vel_out) const;

    double norm(const Vec& x, const Vec& v) const; // |v|_g at x
    double fd_step() const { return fd_step_; }

private:
    ManifoldId id_;
    DomainFn domain_;
    MetricFn metric_;
    MetricDerivFn metric_derivs_;
    ChristoffelFn christoffel_;
    double fd_step_ = 1e-5;
};

using ManifoldPtr = std::shared_ptr<const RiemannianManifold>;

// Built-in zoo. FlatTorus2 is the identity metric on an unbounded periodic
// chart; maps into it handle wrapping in their forward functions.
ManifoldPtr make_euclidean(int dim);
ManifoldPtr make_sphere2();
ManifoldPtr make_half_plane();
ManifoldPtr make_flat_torus2();
// Lookup by zoo name ("euclidean" takes a dim parameter).
ManifoldPtr make_manifold(const std::string& name, int dim = 2);

// Coordinate realization of a smooth map φ: M → S with optional exact
// derivatives; finite differences fill in anything missing.
class SmoothMap {
public:
    using ForwardFn = std::function<Vec(const Vec&)>;
    using JacobianFn = std::function<Mat(const Vec&)>;            // J(a, i) = ∂φ^a/∂x^i
    using HessianFn = std::function<std::vector<Mat>(const Vec&)>; // H[a](i, j) = ∂_i∂_j φ^a

    SmoothMap(std::string name, ManifoldPtr domain, ManifoldPtr codomain, ForwardFn fwd);

    const std::string& name() const { return name_; }
    const ManifoldPtr& domain() const { return domain_; }
    const ManifoldPtr& codomain() const { return codomain_; }

    void set_jacobian(JacobianFn f) { jacobian_ = std::move(f); }
    void set_hessian(HessianFn f) { hessian_ = std::move(f); }
    bool has_exact_jacobian() const { return static_cast<bool>(jacobian_); }

    Vec operator()(const Vec& x) const;
    Mat jacobian(const Vec& x) const;
    std::vector<Mat> hessian(const Vec& x) const;

    static SmoothMap identity(const ManifoldPtr& m);

private:
    std::string name_;
    ManifoldPtr domain_;
    ManifoldPtr codomain_;
    ForwardFn forward_;
    JacobianFn jacobian_;
    HessianFn hessian_;
};

// Central-difference helpers shared across modules (first derivatives default
// to step 1e−5, second derivatives to 1e−4).
Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-5);
Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double h = 1e-5);
Mat fd_hessian(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-4);

} // namespace bundletc
