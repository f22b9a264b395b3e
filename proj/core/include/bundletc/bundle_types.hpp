#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bundletc/errors.hpp"

namespace bundletc {

struct ManifoldId {
    std::string name;
    int dim = 0;
    bool operator==(const ManifoldId& o) const { return name == o.name && dim == o.dim; }
};

struct MapId {
    std::string name;
    ManifoldId domain;
    ManifoldId codomain;
    bool identity = false; // declared identity map (domain == codomain)
    bool operator==(const MapId& o) const { return name == o.name; }
};

// Registry of declared manifolds, maps and composition facts. The normalizer
// only rewrites ψ*φ*F → (φ∘ψ)*F when the composition φ∘ψ has been declared;
// it never invents compositions.
class TypeEnv {
public:
    const ManifoldId& declare_manifold(const std::string& name, int dim);
    const MapId& declare_map(const std::string& name, const std::string& domain,
                             const std::string& codomain, bool identity = false);
    // Registers the fact `name = outer ∘ inner`; `name` must already be a
    // declared map with domain(inner) → codomain(outer).
    void declare_composition(const std::string& name, const std::string& outer,
                             const std::string& inner);

    const ManifoldId* find_manifold(const std::string& name) const;
    const MapId* find_map(const std::string& name) const;
    // The declared composite of outer∘inner, if any.
    const MapId* find_composition(const std::string& outer, const std::string& inner) const;

    const ManifoldId& manifold(const std::string& name) const; // throws UnknownSymbol
    const MapId& map(const std::string& name) const;           // throws UnknownSymbol

private:
    // Deques keep references stable across later declarations.
    std::deque<ManifoldId> manifolds_;
    std::deque<MapId> maps_;
    struct CompositionFact { std::string outer, inner, composite; };
    std::vector<CompositionFact> compositions_;
};

enum class TypeNodeKind {
    Tangent,      // TM
    Cotangent,    // T*M
    Line,         // trivial ℝ bundle over M
    Pullback,     // f*F
    TensorShared, // F ⊗_M G     (equal bases)
    TensorFull,   // F ⊗_{M×N} G (bases kept separate)
    SumShared,    // F ⊕_M G
    SumFull,      // F ⊕_{M×N} G
    Dual,         // F*
};

// Immutable algebraic bundle-type expression. Construct through the factory
// functions below; constructors enforce well-formedness (shared constructors
// reject unequal bases, pullbacks reject codomain mismatches).
class BundleType {
public:
    using Ptr = std::shared_ptr<const BundleType>;

    static Ptr tangent(const ManifoldId& m);
    static Ptr cotangent(const ManifoldId& m);
    static Ptr line(const ManifoldId& m);
    static Ptr pullback(const MapId& f, Ptr base);
    static Ptr tensor_shared(Ptr l, Ptr r);
    static Ptr tensor_full(Ptr l, Ptr r);
    static Ptr sum_shared(Ptr l, Ptr r);
    static Ptr sum_full(Ptr l, Ptr r);
    static Ptr dual(Ptr f);

    TypeNodeKind kind;
    ManifoldId manifold;  // leaves
    MapId map;            // Pullback
    Ptr left, right;      // products/sums; `left` is the child of Pullback/Dual

    int rank() const;
    // Base manifold(s): a single entry for shared-base types, the ordered
    // factor list for Full constructors.
    std::vector<ManifoldId> base_space() const;
    bool has_product_base() const { return base_space().size() > 1; }

    std::string render(int telescope = 2) const; // 0 = terse, 1 = mid, 2 = full

    BundleType() = default; // use the factory functions; direct construction
                            // skips well-formedness checks
};

bool equal(const BundleType::Ptr& a, const BundleType::Ptr& b);

// Records the rewrites normalize() applied, in order. Optional; pass one to
// observe which canonical identifications fired.
struct NormalizeTrace {
    std::vector<std::string> rewrites;
};

// Canonical form under the confluent rewrite system:
//   Dual(Dual F) → F;  Dual(Tangent) ↔ Cotangent;  Dual(Line) → Line;
//   Dual over ⊗/⊕;  Dual(f*F) → f*(Dual F);
//   id* F → F;  ψ*(φ*F) → (φ∘ψ)*F for declared compositions;
//   f*(F ⊗_M G) → f*F ⊗ f*G;  f*(Line N) → Line M;  Line ⊗ F → F.
// Idempotent and rank-preserving.
BundleType::Ptr normalize(const BundleType::Ptr& t, const TypeEnv& env,
                          NormalizeTrace* trace = nullptr);

// Structural well-formedness walk; throws TypeCheckError with the path to the
// offending node.
void validate(const BundleType::Ptr& t);

// Flattened tensor-factor word of a normalized type (tensor nodes expanded,
// everything else atomic, left-to-right order preserved). Line factors carry
// no contraction slots and are omitted; a standalone Line type is a scalar
// with an empty word.
std::vector<BundleType::Ptr> factor_word(const BundleType::Ptr& t);

// Type of the n-fold contraction left ·ⁿ right. Both sides are normalized
// first. The trailing n factors of `left` must be duals of the leading n
// factors of `right`; the result concatenates the remaining factors (Line
// bundle when everything is consumed). Throws TypeCheckError with kind
// Valence / Space / Base.
BundleType::Ptr contract_type(const BundleType::Ptr& left, const BundleType::Ptr& right,
                              int n, const TypeEnv& env);

} // namespace bundletc
