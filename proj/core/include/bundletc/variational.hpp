#pragma once

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "bundletc/covariant.hpp"
#include "bundletc/manifolds.hpp"

namespace bundletc {

struct IntervalDomain {
    double a = 0.0, b = 1.0;
    int n = 9; // grid points
};

struct RectangleDomain {
    double ax = 0.0, bx = 1.0;
    int nx = 9;
    double ay = 0.0, by = 1.0;
    int ny = 9;
};

using DomainSpec = std::variant<IntervalDomain, RectangleDomain>;

// Uniform grid over an interval or a chart rectangle with trapezoid
// quadrature weights and O(h²) derivative stencils (central interior,
// one-sided at the boundary).
class Grid {
public:
    static Grid interval(double a, double b, int n);
    static Grid rectangle(double ax, double bx, int nx, double ay, double by, int ny);
    static Grid from_spec(const DomainSpec& d);

    int ndim = 1;
    int count = 0;
    int nx = 0, ny = 0; // ny = 0 for intervals
    double hx = 0.0, hy = 0.0;
    std::vector<Vec> points;
    std::vector<double> quad_w;
    std::vector<bool> boundary;
    bool is_interval() const { return ndim == 1; }

    int index(int ix, int iy = 0) const { return is_interval() ? ix : ix * ny + iy; }

    // Per-node first derivatives of a node-indexed field: out(c, dir).
    Mat jacobian_at(const std::vector<Vec>& f, int k) const;
    // Same, but the stencil never reads boundary nodes (for fields whose
    // boundary values come from a different stencil family).
    Mat jacobian_interior_at(const std::vector<Vec>& f, int k) const;
    // Second derivatives at an interior node: one ndim×ndim matrix per component.
    std::vector<Mat> second_derivs_at(const std::vector<Vec>& f, int k) const;

    // Boundary quadrature: sums integrand(k, outward_axis, sign) over boundary
    // nodes with the induced edge weights (counting measure on interval ends).
    double boundary_integral(
        const std::function<double(int node, int axis, double sign)>& integrand) const;
};

// Exact second covariant partials of a Lagrangian at a point of E, flattened
// with fiber index (a, i) → a·dimM + i.
struct SecondPartials {
    Mat sigma_sigma; // (ds × ds)
    Mat sigma_v;     // (ds × ds·dm)
    Mat v_sigma;     // (ds·dm × ds)
    Mat v_v;         // (ds·dm × ds·dm)
};

// First-order Lagrangian L: E = TS⊗T*M → ℝ in chart coordinates, with
// optional exact covariant partials. `partial_covariant_derivatives` fills in
// anything missing numerically.
struct Lagrangian {
    std::string name;
    TotalSpaceFn value;
    std::function<Vec(const Vec&, const Vec&, const Mat&)> sigma_exact;
    std::function<Vec(const Vec&, const Vec&, const Mat&)> mu_exact;
    std::function<Mat(const Vec&, const Vec&, const Mat&)> v_exact;
    std::function<SecondPartials(const Vec&, const Vec&, const Mat&)> second_exact;

    bool has_exact_partials() const { return static_cast<bool>(v_exact); }
    bool has_second_partials() const { return static_cast<bool>(second_exact); }
};

// Shipped Lagrangians (closed-form partials).
Lagrangian kinetic_lagrangian(ManifoldPtr domain, ManifoldPtr target);
// L = ½|A|²_k − V(s); V supplies exact gradient/Hessian in S-coordinates.
Lagrangian kinetic_potential_lagrangian(ManifoldPtr domain, ManifoldPtr target,
                                        std::function<double(const Vec&)> potential,
                                        std::function<Vec(const Vec&)> potential_grad,
                                        std::function<Mat(const Vec&)> potential_hess);
// L = ½ h_{ab} A^a_i A^b_j D^{ij} with constant diagonal weights D; the
// closed-form partials assume a flat constant-metric domain.
Lagrangian anisotropic_quadratic_lagrangian(ManifoldPtr domain, ManifoldPtr target, Vec weights);

enum class BoundaryMode { Fixed, Free };

struct EnergyProblem {
    ManifoldPtr domain_manifold; // M
    ManifoldPtr target;          // S
    Lagrangian lagrangian;
    Grid grid;
    BoundaryMode boundary = BoundaryMode::Fixed;
};

// Grid of target-chart coordinates, one per grid node.
struct FieldConfiguration {
    std::vector<Vec> values;
};

FieldConfiguration sample_map(const Grid& grid, const SmoothMap& phi);

// Grid of tangent vectors at φ(x) (target-chart components).
struct VariationField {
    std::vector<Vec> values;
};

double energy(const EnergyProblem& p, const FieldConfiguration& phi);

struct FirstVariationResult {
    double formula = 0.0;  // interior + boundary terms
    double fd = 0.0;       // central difference of energy along exp(i·A)
    double interior_term = 0.0;
    double boundary_term = 0.0;
};

FirstVariationResult first_variation(const EnergyProblem& p, const FieldConfiguration& phi,
                                     const VariationField& a, double fd_eps = 1e-4);

struct ELResidual {
    std::vector<Vec> interior;  // covector per node; zero rows on the boundary
    std::vector<Vec> boundary;  // φ*L_,v·ν per boundary node (empty rows inside)
    double sup_interior = 0.0;
};

ELResidual euler_lagrange_residual(const EnergyProblem& p, const FieldConfiguration& phi);

// Discrete tension field (stencil second derivatives + Christoffel terms) at
// every interior node; boundary rows zero.
std::vector<Vec> discrete_tension(const EnergyProblem& p, const FieldConfiguration& phi);

struct GeodesicCurve {
    std::vector<double> t;
    std::vector<Vec> x;
    std::vector<Vec> v;
};

GeodesicCurve solve_geodesic(const ManifoldPtr& s, const Vec& x0, const Vec& v0, double total_time,
                             double step = 1e-3);

// Conserved quantity H = (∇∘φ)*L_,v : ∇∘φ − (∇∘φ)*L per grid node. Interval
// domains only; requires L_,μ ≈ 0 (checked at sample nodes).
std::vector<double> hamiltonian(const EnergyProblem& p, const FieldConfiguration& phi,
                                double mu_tol = 1e-6);

struct FlowResult {
    FieldConfiguration config;
    std::vector<double> tension_history; // sup-norm of discrete tension per step
    int steps_taken = 0;
};

// Forward-Euler harmonic-map flow φ ← exp_S(dt·Δφ) at interior nodes with
// fixed boundary. Aborts with FlowDiverged if the tension norm grows 10×.
FlowResult gradient_flow_harmonic(const EnergyProblem& p, const FieldConfiguration& phi0,
                                  int steps, double dt, double stop_tension = 0.0);

struct SecondVariationResult {
    double formula = 0.0;
    double fd = 0.0;
};

// Second variation at a critical point (sup EL residual < crit_tol, else
// NotCritical). Assembles the five-term integrand with exact second partials;
// fd is the mixed central second difference of the energy along exp(iA+jB).
SecondVariationResult second_variation(const EnergyProblem& p, const FieldConfiguration& phi,
                                       const VariationField& a, const VariationField& b,
                                       bool with_fd = true, double fd_eps = 1e-3,
                                       double crit_tol = 1e-5);

// Eigenvalues (ascending) of the k×k index-form Gram matrix over the basis
// sin(mπ·t̂/ℓ)·N(t), N a unit normal field along the geodesic.
Vec index_form_spectrum(const EnergyProblem& p, const FieldConfiguration& geodesic, int k);

// Unit normal field along an interval-domain configuration (2D targets).
std::vector<Vec> unit_normal_field(const EnergyProblem& p, const FieldConfiguration& phi);

} // namespace bundletc
