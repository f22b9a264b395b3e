#include "doctest.h"

#include "bundletc/bundle_types.hpp"

using namespace bundletc;

namespace {

struct Setup {
    TypeEnv env;
    ManifoldId m, s, l;
    MapId phi, psi, chi, idm;
    Setup() {
        env.declare_manifold("M", 2);
        env.declare_manifold("S", 2);
        env.declare_manifold("L", 3);
        env.declare_map("phi", "M", "S");
        env.declare_map("psi", "L", "M");
        env.declare_map("idm", "M", "M", true);
        env.declare_composition("chi", "phi", "psi");
        m = env.manifold("M");
        s = env.manifold("S");
        l = env.manifold("L");
        phi = env.map("phi");
        psi = env.map("psi");
        chi = env.map("chi");
        idm = env.map("idm");
    }
};

} // namespace

TEST_CASE("base space of tangent, pullback and full product") {
    Setup t;
    auto tm = BundleType::tangent(t.m);
    CHECK(tm->base_space().size() == 1);
    CHECK(tm->base_space()[0] == t.m);

    auto pb = BundleType::pullback(t.phi, BundleType::tangent(t.s));
    CHECK(pb->base_space().size() == 1);
    CHECK(pb->base_space()[0] == t.m);

    auto e = BundleType::tensor_full(BundleType::tangent(t.s), BundleType::cotangent(t.m));
    auto bases = e->base_space();
    REQUIRE(bases.size() == 2);
    CHECK(bases[0] == t.s);
    CHECK(bases[1] == t.m);
}

TEST_CASE("ranks of the constructors") {
    Setup t;
    CHECK(BundleType::tangent(t.l)->rank() == 3);
    CHECK(BundleType::line(t.m)->rank() == 1);
    auto prod = BundleType::tensor_shared(BundleType::tangent(t.m), BundleType::cotangent(t.m));
    CHECK(prod->rank() == 4);
    auto sum = BundleType::sum_shared(BundleType::tangent(t.m), BundleType::cotangent(t.m));
    CHECK(sum->rank() == 4);
    CHECK(BundleType::pullback(t.phi, BundleType::tangent(t.s))->rank() == 2);
}

TEST_CASE("normalize removes identity pullbacks and composes chains") {
    Setup t;
    auto f = BundleType::tangent(t.m);
    CHECK(equal(normalize(BundleType::pullback(t.idm, f), t.env), f));

    auto nested = BundleType::pullback(t.psi, BundleType::pullback(t.phi, BundleType::tangent(t.s)));
    auto direct = BundleType::pullback(t.chi, BundleType::tangent(t.s));
    CHECK(equal(normalize(nested, t.env), normalize(direct, t.env)));

    // No registered composition: the chain stays.
    TypeEnv env2;
    env2.declare_manifold("A", 2);
    env2.declare_manifold("B", 2);
    env2.declare_manifold("C", 2);
    env2.declare_map("f", "B", "C");
    env2.declare_map("g", "A", "B");
    auto chain = BundleType::pullback(env2.map("g"),
                                      BundleType::pullback(env2.map("f"),
                                                           BundleType::tangent(env2.manifold("C"))));
    auto norm = normalize(chain, env2);
    CHECK(norm->kind == TypeNodeKind::Pullback);
    CHECK(norm->left->kind == TypeNodeKind::Pullback);
}

TEST_CASE("double duals cancel and duals exchange tangent with cotangent") {
    Setup t;
    auto dd = BundleType::dual(BundleType::dual(BundleType::cotangent(t.m)));
    CHECK(equal(normalize(dd, t.env), BundleType::cotangent(t.m)));
    CHECK(equal(normalize(BundleType::dual(BundleType::tangent(t.m)), t.env),
                BundleType::cotangent(t.m)));
    CHECK(equal(normalize(BundleType::dual(BundleType::line(t.m)), t.env), BundleType::line(t.m)));
}

TEST_CASE("dual distributes over products and sums without reordering") {
    Setup t;
    auto prod = BundleType::tensor_shared(BundleType::tangent(t.m), BundleType::cotangent(t.m));
    auto want = BundleType::tensor_shared(BundleType::cotangent(t.m), BundleType::tangent(t.m));
    CHECK(equal(normalize(BundleType::dual(prod), t.env), want));

    auto sum = BundleType::sum_shared(BundleType::tangent(t.m), BundleType::line(t.m));
    auto want_sum = BundleType::sum_shared(BundleType::cotangent(t.m), BundleType::line(t.m));
    CHECK(equal(normalize(BundleType::dual(sum), t.env), want_sum));
}

TEST_CASE("pullback distributes over shared tensor products") {
    Setup t;
    auto prod = BundleType::tensor_shared(BundleType::tangent(t.s), BundleType::cotangent(t.s));
    auto norm = normalize(BundleType::pullback(t.phi, prod), t.env);
    auto want = BundleType::tensor_shared(BundleType::pullback(t.phi, BundleType::tangent(t.s)),
                                          BundleType::pullback(t.phi, BundleType::cotangent(t.s)));
    CHECK(equal(norm, want));
    // Trivial line bundles pull back to trivial line bundles.
    CHECK(equal(normalize(BundleType::pullback(t.phi, BundleType::line(t.s)), t.env),
                BundleType::line(t.m)));
}

TEST_CASE("line-bundle factors are absorbed by normalization") {
    Setup t;
    auto padded = BundleType::tensor_shared(BundleType::line(t.m), BundleType::tangent(t.m));
    CHECK(equal(normalize(padded, t.env), BundleType::tangent(t.m)));
    CHECK(padded->rank() == normalize(padded, t.env)->rank());
}

TEST_CASE("normalize records the rewrites it applies") {
    Setup t;
    NormalizeTrace trace;
    auto nested =
        BundleType::pullback(t.psi, BundleType::pullback(t.phi, BundleType::tangent(t.s)));
    normalize(nested, t.env, &trace);
    REQUIRE(!trace.rewrites.empty());
    CHECK(trace.rewrites[0].find("φ∘ψ") != std::string::npos);
}

TEST_CASE("shared constructors reject unequal bases") {
    Setup t;
    CHECK_THROWS_AS(BundleType::tensor_shared(BundleType::tangent(t.m), BundleType::tangent(t.s)),
                    TypeCheckError);
    CHECK_THROWS_AS(
        BundleType::sum_shared(
            BundleType::tensor_full(BundleType::tangent(t.m), BundleType::tangent(t.s)),
            BundleType::tensor_full(BundleType::tangent(t.m), BundleType::tangent(t.s))),
        TypeCheckError); // Full nested under Shared is ill-formed
}

TEST_CASE("pullback requires the codomain to match the base") {
    Setup t;
    CHECK_THROWS_AS(BundleType::pullback(t.phi, BundleType::tangent(t.m)), TypeCheckError);
}

TEST_CASE("contract_type composes Hom types and classifies failures") {
    TypeEnv lin;
    const ManifoldId& u = lin.declare_manifold("U", 2);
    const ManifoldId& v = lin.declare_manifold("V", 3);
    const ManifoldId& w = lin.declare_manifold("W", 2);
    auto hom_uv = BundleType::tensor_full(BundleType::tangent(v), BundleType::cotangent(u));
    auto hom_vw = BundleType::tensor_full(BundleType::tangent(w), BundleType::cotangent(v));

    auto comp = contract_type(hom_vw, hom_uv, 1, lin);
    CHECK(equal(comp, BundleType::tensor_full(BundleType::tangent(w), BundleType::cotangent(u))));

    try {
        contract_type(hom_uv, hom_vw, 1, lin);
        FAIL("expected SpaceMismatch");
    } catch (const TypeCheckError& e) {
        CHECK(e.kind == TypeErrorKind::Space);
        REQUIRE(e.expected_levels.size() == 3);
        CHECK(e.expected_levels[2] == "T(U)");
        CHECK(e.found_levels[2] == "T(W)");
    }

    // Wrong variance over the right space.
    auto gvv = BundleType::tensor_shared(BundleType::cotangent(v), BundleType::cotangent(v));
    try {
        contract_type(gvv, BundleType::cotangent(v), 1, lin);
        FAIL("expected ValenceError");
    } catch (const TypeCheckError& e) {
        CHECK(e.kind == TypeErrorKind::Valence);
    }

    // Natural pairing yields a scalar field.
    auto scalar = contract_type(BundleType::cotangent(v), BundleType::tangent(v), 1, lin);
    CHECK(scalar->kind == TypeNodeKind::Line);
    CHECK(scalar->manifold == v);
}

TEST_CASE("reversed composition succeeds exactly when the endpoints coincide") {
    TypeEnv lin;
    const ManifoldId& u = lin.declare_manifold("U", 2);
    const ManifoldId& v = lin.declare_manifold("V", 3);
    // A : U→V and B : V→U. Both composition orders are well-typed since the
    // reversed order's endpoint condition U = W holds.
    auto hom_uv = BundleType::tensor_full(BundleType::tangent(v), BundleType::cotangent(u));
    auto hom_vu = BundleType::tensor_full(BundleType::tangent(u), BundleType::cotangent(v));
    auto ba = contract_type(hom_vu, hom_uv, 1, lin);
    auto ab = contract_type(hom_uv, hom_vu, 1, lin);
    // Coinciding bases are joined in the result (End(U) lives over U).
    CHECK(equal(ba, BundleType::tensor_shared(BundleType::tangent(u), BundleType::cotangent(u))));
    CHECK(equal(ab, BundleType::tensor_shared(BundleType::tangent(v), BundleType::cotangent(v))));
}

TEST_CASE("same fiber space over different bases is a BaseMismatch") {
    Setup t;
    // φ*T*S against TS: the underlying space agrees, the bases do not.
    auto left = BundleType::pullback(t.phi, BundleType::cotangent(t.s));
    try {
        contract_type(left, BundleType::tangent(t.s), 1, t.env);
        FAIL("expected BaseMismatch");
    } catch (const TypeCheckError& e) {
        CHECK(e.kind == TypeErrorKind::Base);
    }
}

TEST_CASE("two-point Hom contraction over the shared base") {
    Setup t;
    // (φ*TS ⊗ T*M) · TM → φ*TS
    auto hom = BundleType::tensor_shared(BundleType::pullback(t.phi, BundleType::tangent(t.s)),
                                         BundleType::cotangent(t.m));
    auto r = contract_type(hom, BundleType::tangent(t.m), 1, t.env);
    CHECK(equal(r, BundleType::pullback(t.phi, BundleType::tangent(t.s))));
}

TEST_CASE("insufficient factor counts are a ValenceError") {
    Setup t;
    CHECK_THROWS_AS(contract_type(BundleType::cotangent(t.m), BundleType::tangent(t.m), 2, t.env),
                    TypeCheckError);
    // Scalars carry no contraction slots.
    CHECK_THROWS_AS(contract_type(BundleType::line(t.m), BundleType::line(t.m), 1, t.env),
                    TypeCheckError);
}

TEST_CASE("validate reports a path to the offending node") {
    Setup t;
    auto node = std::make_shared<BundleType>();
    node->kind = TypeNodeKind::Tangent;
    node->manifold = ManifoldId{"bad", 0};
    auto wrapped = BundleType::dual(node);
    try {
        validate(wrapped);
        FAIL("expected StructuralError");
    } catch (const TypeCheckError& e) {
        CHECK(e.kind == TypeErrorKind::Structural);
        CHECK(e.node_path.find("/Dual") != std::string::npos);
    }
}

TEST_CASE("environment rejects duplicate and malformed declarations") {
    TypeEnv env;
    env.declare_manifold("M", 2);
    CHECK_THROWS_AS(env.declare_manifold("M", 3), TypeCheckError);
    CHECK_THROWS_AS(env.declare_manifold("Z", 0), TypeCheckError);
    CHECK_THROWS_AS(env.declare_map("f", "M", "Nope"), TypeCheckError);
    env.declare_manifold("N", 2);
    CHECK_THROWS_AS(env.declare_map("i", "M", "N", true), TypeCheckError);
    CHECK_THROWS_AS(env.manifold("missing"), TypeCheckError);
}

TEST_CASE("render telescopes through three levels") {
    Setup t;
    auto pb = BundleType::tensor_shared(BundleType::pullback(t.phi, BundleType::tangent(t.s)),
                                        BundleType::cotangent(t.m));
    CHECK(pb->render(2) == "(phi*T(S) ⊗_M T*(M))");
    CHECK(pb->render(1) == "(phi*T(S) ⊗ T*(M))");
    CHECK(pb->render(0) == "(T ⊗ T*)");
}
