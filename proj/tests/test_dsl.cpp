#include "doctest.h"

#include <cmath>

#include "bundletc/dsl.hpp"
#include "bundletc/verify.hpp"

using namespace bundletc;
using namespace bundletc::dsl;

TEST_CASE("parser builds prefix-call trees with spans") {
    auto forms = parse("pair(dmap(phi), X, 1)");
    REQUIRE(forms.size() == 1);
    const Expr& e = forms[0];
    CHECK(e.kind == Expr::Kind::Call);
    CHECK(e.text == "pair");
    REQUIRE(e.args.size() == 3);
    CHECK(e.args[0].kind == Expr::Kind::Call);
    CHECK(e.args[0].text == "dmap");
    CHECK(e.args[0].args[0].text == "phi");
    CHECK(e.args[1].kind == Expr::Kind::Ident);
    CHECK(e.args[1].text == "X");
    CHECK(e.args[2].kind == Expr::Kind::Int);
    CHECK(e.args[2].value == 1);
    CHECK(e.span.line == 1);
    CHECK(e.span.col == 1);
    CHECK(e.args[1].span.col == 17);
}

TEST_CASE("permutation literals parse in cycle notation") {
    auto forms = parse("permute(A, (2 3))");
    REQUIRE(forms.size() == 1);
    const Expr& perm = forms[0].args[1];
    CHECK(perm.kind == Expr::Kind::Perm);
    REQUIRE(perm.cycles.size() == 1);
    CHECK(perm.cycles[0] == std::vector<int>{2, 3});

    auto multi = parse("permute(A, (1 2)(3 4))");
    CHECK(multi[0].args[1].cycles.size() == 2);
}

TEST_CASE("unbalanced input reports the expected tokens") {
    try {
        parse("pair(A");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("expected ',' or ')'") != std::string::npos);
        CHECK(e.span.line == 1);
        CHECK(e.span.col == 7);
    }
}

TEST_CASE("render and parse are mutually inverse") {
    const std::string src = "pair(permute(A, (2 3)), otimes(v, trace(B)), 2)";
    auto forms = parse(src);
    CHECK(render(forms[0]) == src);
    auto again = parse(render(forms[0]));
    CHECK(ast_equal(again[0], forms[0]));
}

namespace {

Environment section1_env() {
    Environment env;
    for (const auto& form : parse(R"(
manifold(U, 2) manifold(V, 3) manifold(W, 2)
field(A, otimes(tangent(V), dual(tangent(U))))
field(B, otimes(tangent(W), dual(tangent(V))))
metric(g, V)
field(alpha, cotangent(V))
)"))
        apply_declaration(form, env);
    return env;
}

} // namespace

TEST_CASE("composition typechecks in one order and fails in the other") {
    Environment env = section1_env();
    TypedExpr good = typecheck(parse("pair(B, A, 1)")[0], env);
    auto word = factor_word(good.type);
    REQUIRE(word.size() == 2);
    CHECK(word[0]->manifold.name == "W");
    CHECK(word[1]->manifold.name == "U");

    try {
        typecheck(parse("pair(A, B, 1)")[0], env);
        FAIL("expected SpaceMismatch");
    } catch (const TypeError& e) {
        CHECK(e.kind == TypeErrorKind::Space);
        CHECK(e.span.line == 1);
    }
}

TEST_CASE("metric against covector is a valence error") {
    Environment env = section1_env();
    try {
        typecheck(parse("pair(g, alpha, 1)")[0], env);
        FAIL("expected ValenceError");
    } catch (const TypeError& e) {
        CHECK(e.kind == TypeErrorKind::Valence);
        // Error verbosity telescopes.
        CHECK(e.render(2).find("T(V)") != std::string::npos);
        CHECK(e.render(0).find("(V)") == std::string::npos);
    }
}

TEST_CASE("unknown symbols are reported with their span") {
    Environment env = section1_env();
    try {
        typecheck(parse("pair(B, nosuch, 1)")[0], env);
        FAIL("expected UnknownSymbol");
    } catch (const TypeError& e) {
        CHECK(e.kind == TypeErrorKind::UnknownSymbol);
        CHECK(e.span.col == 9);
    }
}

TEST_CASE("evaluation of the linear-algebra fragment") {
    Environment env;
    for (const auto& form : parse(R"(
manifold(V, 3)
field(idv, otimes(tangent(V), dual(tangent(V))))
field(alpha, cotangent(V))
field(v, tangent(V))
)"))
        apply_declaration(form, env);
    EvalContext ctx;
    ctx.env = &env;
    ctx.bind_constant("idv", {1, 0, 0, 0, 1, 0, 0, 0, 1});
    ctx.bind_constant("alpha", {1, 0, 0});
    ctx.bind_constant("v", {0, 1, 0});
    PointMap at{{"V", Vec::Zero(3)}};

    CHECK(evaluate(typecheck(parse("trace(idv)")[0], env), ctx, at).value() ==
          doctest::Approx(3.0));
    CHECK(evaluate(typecheck(parse("pair(alpha, v, 1)")[0], env), ctx, at).value() ==
          doctest::Approx(0.0));
}

TEST_CASE("Frobenius norm through the induced inner product") {
    Environment env;
    for (const auto& form : parse(R"(
manifold(U, 2) manifold(W, 2)
field(A, otimes(tangent(W), dual(tangent(U))))
field(k, otimes(otimes(dual(tangent(W)), tangent(U)), otimes(dual(tangent(W)), tangent(U))))
)"))
        apply_declaration(form, env);
    EvalContext ctx;
    ctx.env = &env;
    ctx.bind_constant("A", {1, 2, 3, 4});
    // k = Id⊠Id for identity metrics, as a flat 16-entry array (W*,U,W*,U).
    std::vector<double> k(16, 0.0);
    for (int a = 0; a < 2; ++a)
        for (int i = 0; i < 2; ++i)
            k[((a * 2 + i) * 2 + a) * 2 + i] = 1.0;
    ctx.bind_constant("k", k);
    PointMap at{{"U", Vec::Zero(2)}, {"W", Vec::Zero(2)}};

    TypedExpr expr = typecheck(parse("pair(pair(A, k, 2), A, 2)")[0], env);
    CHECK(evaluate(expr, ctx, at).value() == doctest::Approx(30.0)); // Σ A²ᵢⱼ
}

TEST_CASE("mistagged bindings raise TagMismatch") {
    Environment env;
    for (const auto& form : parse("manifold(V, 3) field(v, tangent(V))"))
        apply_declaration(form, env);
    EvalContext ctx;
    ctx.env = &env;
    // Wrong arity for the declared type.
    ctx.bindings["v"] = [](const EvalContext&, const PointMap&) {
        return TypedTensor({vector_axis("V@(0,0,0)", 2)}, {1, 0});
    };
    PointMap at{{"V", Vec::Zero(3)}};
    CHECK_THROWS_AS(evaluate(typecheck(parse("v")[0], env), ctx, at), TagMismatch);
}

TEST_CASE("dmap, pullback and cov evaluate through the geometry") {
    Environment env;
    for (const auto& form : parse(R"(
manifold(M, 2) manifold(S, 2)
map(phi, M, S)
field(e, tangent(S))
metric(h, S)
)"))
        apply_declaration(form, env);

    auto half = make_half_plane();
    auto sphere = make_sphere2();
    // Rename implementations to match the declared manifold names.
    auto m_impl = std::make_shared<RiemannianManifold>(
        "M", 2, [](const Vec& x) { return x[1] > 1e-8; },
        [half](const Vec& x) { return half->metric_at(x); });
    auto s_impl = std::make_shared<RiemannianManifold>(
        "S", 2, [](const Vec& x) { return x[0] > 0.01 && x[0] < M_PI - 0.01; },
        [sphere](const Vec& x) { return sphere->metric_at(x); });

    auto phi = std::make_shared<SmoothMap>("phi", m_impl, s_impl, [](const Vec& x) {
        Vec y(2);
        y << 1.0 + 0.2 * std::sin(x[0]), 0.8 + 0.3 * x[1];
        return y;
    });

    EvalContext ctx;
    ctx.env = &env;
    ctx.register_manifold(m_impl);
    ctx.register_manifold(s_impl);
    ctx.register_map("phi", phi);
    TensorField e_field(s_impl, {Variance::Vector}, [](const Vec& s) {
        return std::vector<double>{std::sin(s[0]), s[1] * 0.5};
    });
    ctx.bind_field("e", e_field);
    ctx.bind_metric("h");

    Vec x(2);
    x << 0.4, 1.3;
    PointMap at{{"M", x}};

    // dmap(phi) evaluates to the Jacobian with two-point tags.
    TypedTensor dm = evaluate(typecheck(parse("dmap(phi)")[0], env), ctx, at);
    const Mat j = phi->jacobian(x);
    CHECK(dm.at({0, 0}) == doctest::Approx(j(0, 0)).epsilon(1e-9));
    CHECK(dm.at({1, 1}) == doctest::Approx(j(1, 1)).epsilon(1e-9));

    // pullback(phi, e) is e at φ(x); ρ is silent on the fiber data.
    TypedTensor pb = evaluate(typecheck(parse("pullback(phi, e)")[0], env), ctx, at);
    const Vec y = (*phi)(x);
    CHECK(pb.at({0}) == doctest::Approx(std::sin(y[0])));

    // pair(dmap(phi), X, 1) pushes a tangent field on M forward.
    for (const auto& form : parse("field(X, tangent(M))")) apply_declaration(form, env);
    ctx.bind_field("X", TensorField(m_impl, {Variance::Vector}, [](const Vec& p) {
                       return std::vector<double>{p[1], -p[0]};
                   }));
    TypedTensor pushed = evaluate(typecheck(parse("pair(dmap(phi), X, 1)")[0], env), ctx, at);
    Vec xv(2);
    xv << x[1], -x[0];
    const Vec want = j * xv;
    CHECK(pushed.at({0}) == doctest::Approx(want[0]).epsilon(1e-9));

    // cov of the pulled-back section agrees with the library operator.
    TypedTensor covv = evaluate(typecheck(parse("cov(pullback(phi, e))")[0], env), ctx, at);
    SectionAlongMap pulled = pullback_section(phi, e_field);
    const std::vector<double> want_raw = pullback_covariant_derivative(pulled).raw(x);
    for (int i = 0; i < 4; ++i)
        CHECK(covv.data()[i] == doctest::Approx(want_raw[i]).epsilon(1e-8));

    // cov of the metric field vanishes.
    TypedTensor covh =
        evaluate(typecheck(parse("cov(h)")[0], env), ctx, PointMap{{"S", (*phi)(x)}});
    CHECK(covh.max_abs() < 1e-8);
}

TEST_CASE("pullback through a map with the wrong codomain is a BaseMismatch") {
    Environment env;
    for (const auto& form : parse(R"(
manifold(M, 2) manifold(S, 2) manifold(T, 2)
map(phi, M, S)
field(e, tangent(T))
)"))
        apply_declaration(form, env);
    try {
        typecheck(parse("pullback(phi, e)")[0], env);
        FAIL("expected BaseMismatch");
    } catch (const TypeError& e) {
        CHECK(e.kind == TypeErrorKind::Base);
    }
}

TEST_CASE("cov appends a cotangent factor of the base") {
    Environment env;
    for (const auto& form : parse("manifold(M, 3) field(X, tangent(M))"))
        apply_declaration(form, env);
    TypedExpr d = typecheck(parse("cov(X)")[0], env);
    auto word = factor_word(d.type);
    REQUIRE(word.size() == 2);
    CHECK(word[0]->kind == TypeNodeKind::Tangent);
    CHECK(word[1]->kind == TypeNodeKind::Cotangent);
    CHECK(word[1]->manifold.name == "M");
}

TEST_CASE("check_source reports one diagnostic per bad form and keeps going") {
    const std::string src = R"(manifold(V, 2)
field(v, tangent(V))
trace(v)
pair(v, v, 1)
)";
    auto res = check_source(src);
    CHECK(res.forms == 4);
    CHECK(res.expressions == 2);
    REQUIRE(res.diagnostics.size() == 2);
    CHECK(res.diagnostics[0].span.line == 3);
    CHECK(res.diagnostics[1].span.line == 4);
}

TEST_CASE("type soundness holds over generated expressions") {
    CHECK(verify::dsl_soundness_failures(2024, 300) == 0);
}
