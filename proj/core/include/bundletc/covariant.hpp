#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "bundletc/bundle_types.hpp"
#include "bundletc/manifolds.hpp"
#include "bundletc/tensor.hpp"

namespace bundletc {

using MapPtr = std::shared_ptr<const SmoothMap>;

// Stable key for a chart point, used in axis-tag space symbols so that fibers
// over different base points never pair.
std::string point_key(const Vec& x);

// One factor of a section's fiber word: lives over the domain manifold (TM or
// T*M at x) or over the target manifold along the map (TS or T*S at φ(x)).
enum class FactorBase { Domain, Target };

struct Factor {
    FactorBase base;
    Variance variance;
};

Factor domain_vector();
Factor domain_covector();
Factor target_vector();
Factor target_covector();

// Tensor field over a single manifold: a word of TM/T*M factors and a
// component evaluator in chart coordinates. Components are plain row-major
// arrays internally; tags are attached only at the public eval boundary.
class TensorField {
public:
    using RawFn = std::function<std::vector<double>(const Vec&)>;

    TensorField(ManifoldPtr m, std::vector<Variance> word, RawFn raw);

    const ManifoldPtr& manifold() const { return manifold_; }
    const std::vector<Variance>& word() const { return word_; }
    int rank() const { return static_cast<int>(word_.size()); }
    const BundleType::Ptr& btype() const { return btype_; } // normalized by construction

    std::vector<double> raw(const Vec& x) const { return raw_(x); }
    TypedTensor eval(const Vec& x) const;

private:
    ManifoldPtr manifold_;
    std::vector<Variance> word_;
    RawFn raw_;
    BundleType::Ptr btype_;
};

TensorField scalar_field(ManifoldPtr m, std::function<double(const Vec&)> f);
TensorField metric_field(ManifoldPtr m);

// Section along a map φ: M→S whose fiber word mixes TS/T*S factors (at φ(x))
// with TM/T*M factors (at x).
class SectionAlongMap {
public:
    using RawFn = std::function<std::vector<double>(const Vec&)>;

    SectionAlongMap(MapPtr phi, std::vector<Factor> word, RawFn raw);

    const MapPtr& map() const { return phi_; }
    const std::vector<Factor>& word() const { return word_; }
    int rank() const { return static_cast<int>(word_.size()); }

    std::vector<double> raw(const Vec& x) const { return raw_(x); }
    TypedTensor eval(const Vec& x) const;

private:
    MapPtr phi_;
    std::vector<Factor> word_;
    RawFn raw_;
};

// ∇∘φ as a section of φ*TS ⊗ T*M; component (a, i) is ∂φ^a/∂x^i.
using TwoPointField = SectionAlongMap;
TwoPointField tangent_map(MapPtr phi);

// φ*e for e ∈ Γ(E) over S: same fiber word, every factor reseated along φ.
SectionAlongMap pullback_section(MapPtr phi, const TensorField& e);

// Total covariant derivative of a field over M (Levi-Civita corrections, one
// per factor, sign by variance); appends one T*M factor.
TensorField covariant_derivative(const TensorField& x, double h = 1e-5);

// Pullback covariant derivative of a section along φ; target factors get
// Γ_S(φ(x))·∂φ corrections, domain factors get Γ_M(x) corrections. Appends
// one domain T*M factor.
SectionAlongMap pullback_covariant_derivative(const SectionAlongMap& s, double h = 1e-5);

// ∇²φ ∈ Γ(φ*TS ⊗ T*M ⊗ T*M), assembled from the map's Hessian and both
// Christoffel fields; (2 3)-symmetric.
SectionAlongMap covariant_hessian(MapPtr phi);

// Δ_g φ = tr_g ∇²φ, a section of φ*TS.
SectionAlongMap tension_field(MapPtr phi);

// tr over (trailing Tangent factor, derivative covector) of ∇T.
TensorField divergence(const TensorField& t);
SectionAlongMap divergence(const SectionAlongMap& s);

// Curvature operator R(X,Y)σ = ∇²σ : (X⊗Y − Y⊗X). With the iterated-
// derivative convention used by this this equals −R_std(X,Y)σ for the
// standard Levi-Civita tensor stored by curvature_at.
TypedTensor curvature_operator(const TensorField& t, const Vec& x, const Vec& xdir,
                               const Vec& ydir, double outer_h = 2e-4);
TypedTensor curvature_operator(const SectionAlongMap& s, const Vec& x, const Vec& xdir,
                               const Vec& ydir, double outer_h = 2e-4);

// Max-abs error of R^{φ*TS}(X,Y)σ = φ*R^{TS}:(∇∘φ ⊠ ∇∘φ) applied to (X,Y,σ)
// at x, both sides computed independently.
double pullback_curvature_identity_error(const MapPtr& phi, const SectionAlongMap& sigma,
                                         const Vec& x, const Vec& xdir, const Vec& ydir);

// Connection map of E = TS⊗T*M: converts a curve derivative in E into the
// covariant fiber derivative (Christoffel corrections from ∇^TS and ∇^T*M).
struct ConnectionMap {
    ManifoldPtr domain; // M
    ManifoldPtr target; // S

    // (∇A)^a_i = Ȧ^a_i + Γ_S^a_{bc}(s) ṡ^c A^b_i − Γ_M^m_{ki}(x) ẋ^k A^a_m
    Mat apply(const Vec& x, const Vec& s, const Mat& a, const Vec& xdot, const Vec& sdot,
              const Mat& adot) const;
};

// Partial covariant derivatives of a function L on E = TS⊗T*M at (x, s, A):
// fiber component via plain fiber differences, spatial/material components
// via one parallel-transport step per direction with central differencing.
struct LagrangianPartials {
    Vec sigma; // L_,σ ∈ T*_s S
    Vec mu;    // L_,μ ∈ T*_x M
    Mat v;     // L_,v ∈ E*, component (a, i) = ∂L/∂A^a_i
};

using TotalSpaceFn = std::function<double(const Vec& x, const Vec& s, const Mat& a)>;

LagrangianPartials partial_covariant_derivatives(const TotalSpaceFn& lagrangian,
                                                 const RiemannianManifold& domain,
                                                 const RiemannianManifold& target, const Vec& x,
                                                 const Vec& s, const Mat& a,
                                                 double transport_eps = 1e-4,
                                                 double fiber_eps = 1e-5);

// Mixed partial covariant derivatives of a one-parameter family Φ: M×I → S,
// evaluated at (x, 0): returns (ψ_{,MI}, ψ_{,IM}) as (dim S × dim M) arrays.
// Their equality is the (2 3)-symmetry of the mixed partials.
struct MixedPartials {
    Mat mi; // derivative of ψ_{,M} along I
    Mat im; // derivative of ψ_{,I} along M
};

using FamilyFn = std::function<Vec(const Vec& x, double i)>;

MixedPartials mixed_partials(const FamilyFn& family, const RiemannianManifold& domain,
                             const RiemannianManifold& target, const Vec& x, double h = 1e-4);

} // namespace bundletc
