#include "bundletc/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "bundletc/analytic.hpp"
#include "bundletc/bundle_types.hpp"
#include "bundletc/covariant.hpp"
#include "bundletc/dsl.hpp"
#include "bundletc/manifolds.hpp"
#include "bundletc/tensor.hpp"
#include "bundletc/variational.hpp"

namespace bundletc::verify {

namespace {

struct Collector {
    std::vector<CheckResult> results;

    void bound(const std::string& name, double err, double tol) {
        std::ostringstream os;
        os << "err " << err << " tol " << tol;
        results.push_back({name, err <= tol, os.str()});
    }
    void truth(const std::string& name, bool pass, const std::string& detail = "") {
        results.push_back({name, pass, detail});
    }
};

double urand(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int irand(std::mt19937_64& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

TypedTensor random_tensor(std::mt19937_64& rng, const std::vector<AxisTag>& tags) {
    TypedTensor t = TypedTensor::zeros(tags);
    for (double& v : t.data()) v = urand(rng, -1.0, 1.0);
    return t;
}

Mat random_spd(std::mt19937_64& rng, int n) {
    Mat a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = urand(rng, -1.0, 1.0);
    return a * a.transpose() + 0.5 * static_cast<double>(n) * Mat::Identity(n, n);
}

// ---------------------------------------------------------------- tensor ---

void suite_tensor(Collector& c, std::mt19937_64& rng) {
    const AxisTag v2 = vector_axis("V", 2), v3 = vector_axis("V3", 3);

    { // contraction bilinearity and identity action
        TypedTensor a = random_tensor(rng, {v3, v3.dual()});
        TypedTensor b = random_tensor(rng, {v3, v3.dual()});
        TypedTensor x = random_tensor(rng, {v3});
        const double alpha = urand(rng, -2, 2);
        TypedTensor lhs = contract(a * alpha + b, x, 1);
        TypedTensor rhs = contract(a, x, 1) * alpha + contract(b, x, 1);
        c.bound("contract is linear in the left operand", (lhs - rhs).max_abs(), 1e-12);
        TypedTensor id = TypedTensor::identity(v3);
        c.bound("identity contraction acts trivially", (contract(id, x, 1) - x).max_abs(), 0.0);
    }
    { // permutation right-action composition over S4
        std::vector<AxisTag> tags = {vector_axis("A", 2), vector_axis("B", 3),
                                     vector_axis("C", 2), vector_axis("D", 3)};
        TypedTensor a = random_tensor(rng, tags);
        std::vector<int> s = identity_permutation(4), t = identity_permutation(4);
        std::shuffle(s.begin(), s.end(), rng);
        std::shuffle(t.begin(), t.end(), rng);
        TypedTensor lhs = permute(permute(a, s), t);
        TypedTensor rhs = permute(a, compose_permutations(s, t));
        c.bound("(A^σ)^τ = A^{στ}", (lhs - rhs).max_abs(), 0.0);
        TypedTensor via = contract(a, permutation_tensor(s, tags), 4);
        c.bound("permutation as 2n-tensor right action", (permute(a, s) - via).max_abs(), 1e-12);
    }
    { // trace cyclicity
        TypedTensor a = random_tensor(rng, {v3, v3.dual()});
        TypedTensor b = random_tensor(rng, {v3, v3.dual()});
        const double lhs = trace(contract(a, b, 1));
        const double rhs = trace(contract(b, a, 1));
        c.bound("tr(AB) = tr(BA)", std::abs(lhs - rhs), 1e-12);
    }
    { // parallel product: associativity and the factored action
        const AxisTag u = vector_axis("U", 2), w = vector_axis("W", 2), y = vector_axis("Y", 2);
        TypedTensor a = random_tensor(rng, {u, v2});
        TypedTensor b = random_tensor(rng, {w, y});
        TypedTensor cc = random_tensor(rng, {vector_axis("P", 2), vector_axis("Q", 2)});
        TypedTensor lhs = parallel_product(parallel_product(a, b), cc, 2, 1);
        TypedTensor rhs = parallel_product(a, parallel_product(b, cc), 1, 2);
        c.bound("(A⊠B)⊠C = A⊠(B⊠C)", (lhs - rhs).max_abs(), 1e-15);

        // A ∈ U⊗V and B ∈ W⊗X act in parallel on α⊗β ∈ V*⊗X*.
        TypedTensor alpha = random_tensor(rng, {v2.dual()});
        TypedTensor beta = random_tensor(rng, {y.dual()});
        TypedTensor left = contract(parallel_product(a, b), tensor_product(alpha, beta), 2);
        TypedTensor right = tensor_product(contract(a, alpha, 1), contract(b, beta, 1));
        c.bound("(A⊠B)·(α⊗β) = (A·α)⊗(B·β)", (left - right).max_abs(), 1e-12);
    }
    { // induced inner product k = h⊠g⁻¹ against the trace formula
        const int dw = 3, dv = 2;
        const AxisTag wv = vector_axis("W", dw), vv = vector_axis("V", dv);
        const Mat h = random_spd(rng, dw), g = random_spd(rng, dv);
        TypedTensor ht = TypedTensor::from_matrix(h, wv.dual(), wv.dual());
        TypedTensor git = TypedTensor::from_matrix(g.inverse(), vv, vv);
        TypedTensor k = induced_inner_product(ht, git);
        TypedTensor a = random_tensor(rng, {wv, vv.dual()});
        TypedTensor b = random_tensor(rng, {wv, vv.dual()});
        const double via_k = contract(contract(a, k, 2), b, 2).value();
        const double via_tr =
            (g.inverse() * a.as_matrix().transpose() * h * b.as_matrix()).trace();
        c.bound("A:k:B = tr(g⁻¹A*hB)", std::abs(via_k - via_tr), 1e-12);
        const double sym = std::abs(via_k - contract(contract(b, k, 2), a, 2).value());
        c.bound("A:k:B = B:k:A", sym, 1e-12);
        TypedTensor kflip = permute(k, permutation_from_cycles({{1, 3}, {2, 4}}, 4));
        c.bound("k is (1 3)(2 4)-block-symmetric", (k - kflip).max_abs(), 1e-12);
    }
    { // inversion derivative against the matrix oracle and finite differences
        double worst_exact = 0.0, worst_fd = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            Mat a = random_spd(rng, 3);
            Mat b(3, 3);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) b(i, j) = urand(rng, -1, 1);
            const AxisTag ax = vector_axis("V3", 3);
            TypedTensor at = TypedTensor::from_matrix(a, ax, ax.dual());
            TypedTensor bt = TypedTensor::from_matrix(b, ax, ax.dual());
            TypedTensor di = inversion_derivative(at);
            const Mat got = contract(di, bt, 2).as_matrix();
            const Mat want = -a.inverse() * b * a.inverse();
            worst_exact = std::max(worst_exact, (got - want).cwiseAbs().maxCoeff());
            const double eps = 1e-6;
            const Mat fd = ((a + eps * b).inverse() - a.inverse()) / eps;
            worst_fd = std::max(worst_fd, (got - fd).cwiseAbs().maxCoeff());
        }
        c.bound("Di(A)·B = −A⁻¹BA⁻¹", worst_exact, 1e-10);
        c.bound("Di(A)·B matches one-sided fd, O(ε)", worst_fd, 1e-5);
    }
}

// ----------------------------------------------------------------- types ---

BundleType::Ptr random_type(std::mt19937_64& rng, const TypeEnv& env,
                            const std::vector<ManifoldId>& ms,
                            const std::vector<MapId>& maps, int depth) {
    const ManifoldId& m = ms[irand(rng, 0, static_cast<int>(ms.size()) - 1)];
    if (depth == 0) {
        switch (irand(rng, 0, 2)) {
            case 0: return BundleType::tangent(m);
            case 1: return BundleType::cotangent(m);
            default: return BundleType::line(m);
        }
    }
    switch (irand(rng, 0, 3)) {
        case 0: return BundleType::dual(random_type(rng, env, {m}, maps, depth - 1));
        case 1: {
            // pullback by a map whose domain matches the required base
            std::vector<MapId> usable;
            for (const MapId& f : maps)
                if (f.domain == m) usable.push_back(f);
            if (usable.empty()) return random_type(rng, env, {m}, maps, 0);
            const MapId& f = usable[irand(rng, 0, static_cast<int>(usable.size()) - 1)];
            auto inner = random_type(rng, env, {f.codomain}, maps, 0);
            return BundleType::pullback(f, inner);
        }
        case 2: {
            auto l = random_type(rng, env, {m}, maps, depth - 1);
            auto r = random_type(rng, env, {m}, maps, depth - 1);
            return BundleType::tensor_shared(l, r);
        }
        default: {
            auto l = random_type(rng, env, {m}, maps, depth - 1);
            auto r = random_type(rng, env, {m}, maps, depth - 1);
            return BundleType::sum_shared(l, r);
        }
    }
}

void suite_types(Collector& c, std::mt19937_64& rng) {
    TypeEnv env;
    const ManifoldId& l = env.declare_manifold("L", 2);
    const ManifoldId& m = env.declare_manifold("M", 3);
    const ManifoldId& n = env.declare_manifold("N", 2);
    const MapId& phi = env.declare_map("phi", "M", "N");
    const MapId& psi = env.declare_map("psi", "L", "M");
    env.declare_map("idm", "M", "M", true);
    env.declare_composition("chi", "phi", "psi");
    const MapId& idm = env.map("idm");

    { // normalize: idempotence, rank preservation, randomized
        bool idem = true, rank_ok = true;
        std::vector<ManifoldId> ms = {l, m, n};
        std::vector<MapId> maps = {phi, psi, idm};
        for (int i = 0; i < 200; ++i) {
            auto t = random_type(rng, env, ms, maps, irand(rng, 0, 3));
            auto n1 = normalize(t, env);
            auto n2 = normalize(n1, env);
            idem = idem && equal(n1, n2);
            rank_ok = rank_ok && (t->rank() == n1->rank());
        }
        c.truth("normalize is idempotent on random trees", idem);
        c.truth("rank preserved by normalize", rank_ok);
    }
    { // pullback functoriality through the registered composition
        auto f = BundleType::tensor_shared(BundleType::tangent(n), BundleType::cotangent(n));
        auto nested = BundleType::pullback(psi, BundleType::pullback(phi, f));
        auto direct = BundleType::pullback(env.map("chi"), f);
        c.truth("ψ*(φ*F) = (φ∘ψ)*F",
                equal(normalize(nested, env), normalize(direct, env)));
        auto ident = BundleType::pullback(idm, BundleType::tangent(m));
        c.truth("Id* F = F", equal(normalize(ident, env), BundleType::tangent(m)));
        auto dd = BundleType::dual(BundleType::dual(BundleType::cotangent(m)));
        c.truth("Dual(Dual(T*M)) = T*M", equal(normalize(dd, env), BundleType::cotangent(m)));
    }
    { // base spaces
        auto pb = BundleType::pullback(phi, BundleType::tangent(n));
        c.truth("base of φ*TN is M", pb->base_space().size() == 1 && pb->base_space()[0] == m);
        auto full = BundleType::tensor_full(BundleType::tangent(n), BundleType::cotangent(m));
        c.truth("base of TN ⊗_{N×M} T*M is N×M", full->base_space().size() == 2);
        bool rejected = false;
        try {
            BundleType::tensor_shared(BundleType::tangent(m), BundleType::tangent(n));
        } catch (const TypeCheckError& e) {
            rejected = e.kind == TypeErrorKind::Base;
        }
        c.truth("shared constructor rejects unequal bases", rejected);
    }
    { // §1 composability: B∘A typechecks, A∘B reports SpaceMismatch when U≠W
        TypeEnv lin;
        const ManifoldId& u = lin.declare_manifold("U", 2);
        const ManifoldId& v = lin.declare_manifold("V", 3);
        const ManifoldId& w = lin.declare_manifold("W", 2);
        auto hom_uv = BundleType::tensor_full(BundleType::tangent(v), BundleType::cotangent(u));
        auto hom_vw = BundleType::tensor_full(BundleType::tangent(w), BundleType::cotangent(v));
        auto comp = contract_type(hom_vw, hom_uv, 1, lin);
        auto want = BundleType::tensor_full(BundleType::tangent(w), BundleType::cotangent(u));
        c.truth("pair(B,A,1) : Hom(U,W)", equal(comp, normalize(want, lin)));
        bool space = false;
        try {
            contract_type(hom_uv, hom_vw, 1, lin);
        } catch (const TypeCheckError& e) {
            space = e.kind == TypeErrorKind::Space;
        }
        c.truth("pair(A,B,1) is a SpaceMismatch", space);
        // n-fold valence shortfall
        bool valence = false;
        try {
            contract_type(BundleType::cotangent(v), BundleType::tangent(v), 2, lin);
        } catch (const TypeCheckError& e) {
            valence = e.kind == TypeErrorKind::Valence;
        }
        c.truth("insufficient factor count is a ValenceError", valence);
        auto scalar = contract_type(BundleType::cotangent(v), BundleType::tangent(v), 1, lin);
        c.truth("full contraction yields the line bundle", scalar->kind == TypeNodeKind::Line);
    }
}

// ------------------------------------------------------------------- dsl ---

struct GenSetup {
    dsl::Environment env;
    dsl::EvalContext ctx;
    dsl::PointMap points;
    std::vector<std::string> fields;
};

GenSetup make_gen_setup(std::mt19937_64& rng) {
    GenSetup g;
    const char* names[3] = {"U", "V", "W"};
    std::vector<int> dims;
    for (const char* nm : names) {
        const int d = irand(rng, 2, 3);
        dims.push_back(d);
        g.env.types.declare_manifold(nm, d);
        g.points[nm] = Vec::Zero(d);
    }
    g.ctx.env = &g.env;

    auto declare = [&](const std::string& name, BundleType::Ptr type) {
        g.env.fields[name] = normalize(type, g.env.types);
        const int sz = [&] {
            int s = 1;
            for (const auto& f : factor_word(g.env.fields[name])) s *= f->rank();
            return s;
        }();
        std::vector<double> data(sz);
        for (double& v : data) v = urand(rng, -1.0, 1.0);
        g.ctx.bind_constant(name, std::move(data));
        g.fields.push_back(name);
    };

    for (int i = 0; i < 3; ++i) {
        const ManifoldId& m = g.env.types.manifold(names[i]);
        declare(std::string("v_") + names[i], BundleType::tangent(m));
        declare(std::string("a_") + names[i], BundleType::cotangent(m));
    }
    const ManifoldId& u = g.env.types.manifold("U");
    const ManifoldId& v = g.env.types.manifold("V");
    const ManifoldId& w = g.env.types.manifold("W");
    declare("hom_uv", BundleType::tensor_full(BundleType::tangent(v), BundleType::cotangent(u)));
    declare("hom_vw", BundleType::tensor_full(BundleType::tangent(w), BundleType::cotangent(v)));
    declare("g_v", BundleType::tensor_shared(BundleType::cotangent(v), BundleType::cotangent(v)));
    declare("t_u", BundleType::tensor_shared(BundleType::tangent(u), BundleType::cotangent(u)));
    return g;
}

std::vector<std::vector<int>> cycles_of(const std::vector<int>& sigma) {
    std::vector<std::vector<int>> cycles;
    std::vector<bool> seen(sigma.size(), false);
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        if (seen[i]) continue;
        std::vector<int> cyc;
        std::size_t j = i;
        while (!seen[j]) {
            seen[j] = true;
            cyc.push_back(static_cast<int>(j) + 1);
            j = static_cast<std::size_t>(sigma[j]);
        }
        if (cyc.size() > 1) cycles.push_back(cyc);
    }
    if (cycles.empty()) cycles.push_back({1});
    return cycles;
}

dsl::Expr make_call(const std::string& head, std::vector<dsl::Expr> args) {
    dsl::Expr e;
    e.kind = dsl::Expr::Kind::Call;
    e.text = head;
    e.args = std::move(args);
    return e;
}

dsl::Expr make_ident(const std::string& name) {
    dsl::Expr e;
    e.kind = dsl::Expr::Kind::Ident;
    e.text = name;
    return e;
}

dsl::Expr make_int(long v) {
    dsl::Expr e;
    e.kind = dsl::Expr::Kind::Int;
    e.value = v;
    return e;
}

dsl::Expr make_perm(std::vector<std::vector<int>> cycles) {
    dsl::Expr e;
    e.kind = dsl::Expr::Kind::Perm;
    e.cycles = std::move(cycles);
    return e;
}

// Random well-typed expression: children are generated first, then candidate
// operators are tried until one typechecks (otimes with a rank cap as the
// fallback keeps this total).
dsl::Expr gen_expr(std::mt19937_64& rng, const GenSetup& g, int depth) {
    if (depth <= 0) return make_ident(g.fields[irand(rng, 0, (int)g.fields.size() - 1)]);
    dsl::Expr e1 = gen_expr(rng, g, depth - 1);
    dsl::TypedExpr t1 = dsl::typecheck(e1, g.env);
    const int r1 = static_cast<int>(factor_word(t1.type).size());

    std::vector<int> ops = {0, 1, 2, 3, 4};
    std::shuffle(ops.begin(), ops.end(), rng);
    for (int op : ops) {
        try {
            switch (op) {
                case 0: { // pair
                    dsl::Expr e2 = gen_expr(rng, g, depth - 1);
                    dsl::TypedExpr t2 = dsl::typecheck(e2, g.env);
                    const int r2 = static_cast<int>(factor_word(t2.type).size());
                    for (int n = 1; n <= std::min(r1, r2); ++n) {
                        dsl::Expr cand = make_call("pair", {e1, e2, make_int(n)});
                        try {
                            dsl::typecheck(cand, g.env);
                            return cand;
                        } catch (const dsl::TypeError&) {
                        }
                        dsl::Expr flip = make_call("pair", {e2, e1, make_int(n)});
                        try {
                            dsl::typecheck(flip, g.env);
                            return flip;
                        } catch (const dsl::TypeError&) {
                        }
                    }
                    break;
                }
                case 1: { // permute
                    if (r1 < 2) break;
                    std::vector<int> sigma = identity_permutation(r1);
                    std::shuffle(sigma.begin(), sigma.end(), rng);
                    dsl::Expr cand = make_call("permute", {e1, make_perm(cycles_of(sigma))});
                    dsl::typecheck(cand, g.env);
                    return cand;
                }
                case 2: { // trace
                    dsl::Expr cand = make_call("trace", {e1});
                    dsl::typecheck(cand, g.env);
                    return cand;
                }
                case 3: { // dual (adjoint)
                    dsl::Expr cand = make_call("dual", {e1});
                    dsl::typecheck(cand, g.env);
                    return cand;
                }
                case 4: { // boxtimes
                    dsl::Expr e2 = gen_expr(rng, g, depth - 1);
                    dsl::Expr cand = make_call("boxtimes", {e1, e2});
                    dsl::typecheck(cand, g.env);
                    return cand;
                }
            }
        } catch (const dsl::TypeError&) {
        }
    }
    // fallback: tensor product under a rank cap, else the child itself
    dsl::Expr e2 = make_ident(g.fields[irand(rng, 0, (int)g.fields.size() - 1)]);
    dsl::TypedExpr t2 = dsl::typecheck(e2, g.env);
    if (r1 + static_cast<int>(factor_word(t2.type).size()) <= 5)
        return make_call("otimes", {e1, e2});
    return e1;
}

int dsl_soundness_failures_impl(std::uint64_t seed, int count) {
    std::mt19937_64 rng(seed);
    GenSetup g = make_gen_setup(rng);
    int failures = 0;
    for (int i = 0; i < count; ++i) {
        dsl::Expr e = gen_expr(rng, g, irand(rng, 1, 3));
        try {
            const std::string text = dsl::render(e);
            std::vector<dsl::Expr> parsed = dsl::parse(text);
            if (parsed.size() != 1 || !dsl::ast_equal(parsed[0], e)) {
                ++failures;
                continue;
            }
            dsl::TypedExpr typed = dsl::typecheck(parsed[0], g.env);
            dsl::evaluate(typed, g.ctx, g.points);
        } catch (const Error&) {
            ++failures;
        }
    }
    return failures;
}

void suite_dsl(Collector& c, std::mt19937_64& rng) {
    { // §1 composition example, via source text
        const char* src = R"(
manifold(U, 2) manifold(V, 3) manifold(W, 2)
field(A, otimes(tangent(V), dual(tangent(U))))
field(B, otimes(tangent(W), dual(tangent(V))))
pair(B, A, 1)
)";
        auto res = dsl::check_source(src);
        c.truth("pair(B,A,1) typechecks", res.ok());
        auto bad = dsl::check_source(std::string(src) + "pair(A, B, 1)\n");
        c.truth("pair(A,B,1) rejected as SpaceMismatch",
                bad.diagnostics.size() == 1 && bad.diagnostics[0].kind == "SpaceMismatch");
        auto valence = dsl::check_source(std::string(src) +
                                         "metric(g, V) field(alpha, cotangent(V))\n"
                                         "pair(g, alpha, 1)\n");
        c.truth("pair(g,α,1) rejected as ValenceError",
                valence.diagnostics.size() == 1 && valence.diagnostics[0].kind == "ValenceError");
    }
    { // parse errors carry location and expectations
        bool ok = false;
        try {
            dsl::parse("pair(A");
        } catch (const dsl::ParseError& pe) {
            ok = std::string(pe.what()).find("expected ',' or ')'") != std::string::npos;
        }
        c.truth("unbalanced input reports expected ',' or ')'", ok);
    }
    { // parse∘render = identity on random ASTs
        GenSetup g = make_gen_setup(rng);
        bool ok = true;
        for (int i = 0; i < 50 && ok; ++i) {
            dsl::Expr e = gen_expr(rng, g, 2);
            auto parsed = dsl::parse(dsl::render(e));
            ok = parsed.size() == 1 && dsl::ast_equal(parsed[0], e);
        }
        c.truth("parse∘render is the identity on ASTs", ok);
    }
    {
        const int failures = dsl_soundness_failures_impl(rng(), 200);
        c.truth("random well-typed expressions evaluate cleanly",
                failures == 0, failures ? std::to_string(failures) + " failures" : "");
    }
    { // spans of type errors lie inside the source
        const std::string src = "manifold(V, 2)\nfield(v, tangent(V))\ntrace(v)\n";
        auto res = dsl::check_source(src);
        bool ok = res.diagnostics.size() == 1;
        if (ok) {
            const auto& d = res.diagnostics[0];
            ok = d.span.line >= 1 && d.span.line <= 3 && d.span.col >= 1;
        }
        c.truth("type errors carry spans inside the input", ok);
    }
}

// ------------------------------------------------------------- manifolds ---

void suite_manifolds(Collector& c, std::mt19937_64& rng) {
    auto sphere = make_sphere2();
    auto half = make_half_plane();
    auto torus = make_flat_torus2();

    auto random_point = [&](const RiemannianManifold& m) {
        Vec x(2);
        if (m.name() == "Sphere2") {
            x[0] = urand(rng, 0.4, M_PI - 0.4);
            x[1] = urand(rng, 0.0, 2.0);
        } else if (m.name() == "HalfPlane") {
            x[0] = urand(rng, -1.0, 1.0);
            x[1] = urand(rng, 0.5, 2.0);
        } else {
            x[0] = urand(rng, -2.0, 2.0);
            x[1] = urand(rng, -2.0, 2.0);
        }
        return x;
    };

    { // metric is symmetric positive-definite at sampled chart points
        bool spd = true;
        for (const auto& m : {sphere, half, torus}) {
            for (int i = 0; i < 8 && spd; ++i) {
                const Mat g = m->metric_at(random_point(*m));
                spd = (g - g.transpose()).cwiseAbs().maxCoeff() < 1e-12 &&
                      Eigen::LLT<Mat>(g).info() == Eigen::Success;
            }
        }
        c.truth("metric SPD at sampled points", spd);
    }
    { // exact Christoffels against finite differences of the metric
        double worst = 0.0;
        for (const auto& m : {sphere, half}) {
            for (int i = 0; i < 5; ++i) {
                const Vec x = random_point(*m);
                const Christoffel exact = m->christoffel_at(x);
                RiemannianManifold numeric("tmp", 2, [](const Vec&) { return true; },
                                           [&m](const Vec& p) { return m->metric_at(p); });
                const Christoffel fd = numeric.christoffel_at(x);
                for (int k = 0; k < 2; ++k)
                    worst = std::max(worst,
                                     (exact.gamma[k] - fd.gamma[k]).cwiseAbs().maxCoeff());
            }
        }
        c.bound("exact Γ matches finite-difference Γ", worst, 1e-6);
    }
    { // metric compatibility ∇g = 0
        double worst = 0.0;
        for (const auto& m : {sphere, half, torus}) {
            for (int t = 0; t < 5; ++t) {
                const Vec x = random_point(*m);
                const std::vector<Mat> dg = m->metric_derivs_at(x);
                const Christoffel gm = m->christoffel_at(x);
                const Mat g = m->metric_at(x);
                for (int k = 0; k < 2; ++k)
                    for (int i = 0; i < 2; ++i)
                        for (int j = 0; j < 2; ++j) {
                            double v = dg[k](i, j);
                            for (int l = 0; l < 2; ++l)
                                v -= gm(l, k, i) * g(l, j) + gm(l, k, j) * g(i, l);
                            worst = std::max(worst, std::abs(v));
                        }
            }
        }
        c.bound("∇g = 0", worst, 1e-6);
    }
    { // curvature: sectional values and first Bianchi identity
        double worst_s = 0.0, worst_h = 0.0, worst_b = 0.0, worst_e = 0.0;
        Vec u(2), v(2);
        u << 1, 0;
        v << 0, 1;
        for (int t = 0; t < 5; ++t) {
            worst_s = std::max(worst_s,
                               std::abs(sphere->sectional_curvature(random_point(*sphere), u, v) -
                                        1.0));
            worst_h = std::max(
                worst_h, std::abs(half->sectional_curvature(random_point(*half), u, v) + 1.0));
            const Vec x = random_point(*sphere);
            const CurvatureTensor r = sphere->curvature_at(x);
            for (int l = 0; l < 2; ++l)
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j)
                        for (int k = 0; k < 2; ++k)
                            worst_b = std::max(worst_b,
                                               std::abs(r.low(l, i, j, k) + r.low(l, j, k, i) +
                                                        r.low(l, k, i, j)));
            auto eu = make_euclidean(2);
            const CurvatureTensor re = eu->curvature_at(random_point(*torus));
            for (double val : re.up_data) worst_e = std::max(worst_e, std::abs(val));
        }
        c.bound("sphere sectional curvature = 1", worst_s, 1e-8);
        c.bound("half-plane sectional curvature = −1", worst_h, 1e-8);
        c.bound("first Bianchi identity", worst_b, 1e-8);
        c.bound("flat space has zero curvature", worst_e, 1e-12);
    }
    { // exponential map
        auto eu = make_euclidean(2);
        Vec x(2), v(2);
        x << 0.3, -0.2;
        v << 0.7, 0.4;
        const Vec y = eu->exp_map(x, v, 0.5);
        c.bound("Euclidean exp is affine", (y - (x + 0.5 * v)).norm(), 1e-12);

        Vec p(2), w(2);
        p << M_PI / 2, 0.0;
        w << 1.0, 0.0;
        const Vec q = sphere->exp_map(p, w, M_PI / 4);
        Vec want(2);
        want << 3 * M_PI / 4, 0.0;
        c.bound("meridian geodesic reaches 3π/4", (q - want).norm(), 1e-8);

        Vec pos, vel;
        sphere->exp_map_with_velocity(p, w, 1.1, 1e-3, pos, vel);
        c.bound("|exp'| is conserved", std::abs(sphere->norm(pos, vel) - sphere->norm(p, w)),
                1e-8);
        bool exited = false;
        try {
            sphere->exp_map(p, w, 3.0);
        } catch (const ChartExit& e) {
            exited = e.exit_time > 0.0;
        }
        c.truth("chart exit reports the exit time", exited);
    }
    { // closed-form zoo values
        Vec x(2);
        x << M_PI / 4, 0.7;
        const Christoffel ch = sphere->christoffel_at(x);
        c.bound("Γ^θ_{φφ}(π/4) = −1/2", std::abs(ch(0, 1, 1) + 0.5), 1e-12);
        c.bound("Γ^φ_{θφ}(π/4) = 1", std::abs(ch(1, 0, 1) - 1.0), 1e-12);
        Vec y(2);
        y << 0.0, 2.0;
        c.bound("half-plane density at y=2", std::abs(half->volume_density_at(y) - 0.25), 1e-12);
    }
}

// ------------------------------------------------------------- covariant ---

MapPtr random_sphere_map(std::mt19937_64& rng, ManifoldPtr dom, ManifoldPtr cod,
                         const Vec& center) {
    Vec spread(2);
    spread << 0.5, 0.5;
    auto data = AnalyticMapData::random(rng, dom->dim(), center, spread);
    return std::make_shared<SmoothMap>(data.as_smooth_map("phi", dom, cod));
}

void suite_covariant(Collector& c, std::mt19937_64& rng) {
    auto sphere = make_sphere2();
    auto half = make_half_plane();
    auto torus = make_flat_torus2();
    Vec center(2);
    center << 1.3, 1.1;

    auto random_base_point = [&](std::mt19937_64& r) {
        Vec x(2);
        x[0] = urand(r, 0.8, 1.6);
        x[1] = urand(r, 0.6, 1.4);
        return x;
    };

    { // product rule for functions
        AnalyticScalar f = AnalyticScalar::random(rng, 2), g = AnalyticScalar::random(rng, 2);
        TensorField ff = scalar_field(half, [f](const Vec& x) { return f(x); });
        TensorField gf = scalar_field(half, [g](const Vec& x) { return g(x); });
        TensorField fg = scalar_field(half, [f, g](const Vec& x) { return f(x) * g(x); });
        const Vec x = random_base_point(rng);
        auto dfg = covariant_derivative(fg).raw(x);
        auto df = covariant_derivative(ff).raw(x);
        auto dg = covariant_derivative(gf).raw(x);
        double worst = 0.0;
        for (int i = 0; i < 2; ++i)
            worst = std::max(worst, std::abs(dfg[i] - (g(x) * df[i] + f(x) * dg[i])));
        c.bound("∇(fg) = g∇f + f∇g", worst, 1e-6);
    }
    { // the metric is parallel
        TensorField gf = metric_field(sphere);
        const Vec x = random_base_point(rng);
        auto dg = covariant_derivative(gf).raw(x);
        double worst = 0.0;
        for (double v : dg) worst = std::max(worst, std::abs(v));
        c.bound("∇g = 0 as a field", worst, 1e-6);
    }
    { // permutation fields are parallel: ∇(X^σ) = (∇X)^σ
        AnalyticField f = AnalyticField::random(rng, 2, 8);
        std::vector<Variance> word = {Variance::Vector, Variance::Covector, Variance::Vector};
        TensorField x3(sphere, word, [f](const Vec& x) {
            const Vec v = f(x);
            return std::vector<double>(v.data(), v.data() + v.size());
        });
        std::vector<int> sigma = identity_permutation(3);
        std::shuffle(sigma.begin(), sigma.end(), rng);
        std::vector<Variance> pword(3);
        for (int i = 0; i < 3; ++i) pword[sigma[i]] = word[i];
        TensorField xp(sphere, pword, [x3, sigma](const Vec& p) {
            TypedTensor t = x3.eval(p);
            return permute(t, sigma).data();
        });
        const Vec x = random_base_point(rng);
        TypedTensor lhs = covariant_derivative(xp).eval(x);
        std::vector<int> sigma4 = sigma;
        sigma4.push_back(3); // derivative slot stays last
        TypedTensor rhs = permute(covariant_derivative(x3).eval(x), sigma4);
        c.bound("∇(X^σ) = (∇X)^σ", (lhs - rhs).max_abs(), 1e-6);
    }
    { // tangent-map chain rule through a composition
        auto l2 = make_euclidean(2);
        Vec c1(2);
        c1 << 1.2, 1.0;
        auto psi = random_sphere_map(rng, l2, half, c1);
        auto phi = random_sphere_map(rng, half, sphere, center);
        auto comp = std::make_shared<SmoothMap>(
            "comp", l2, sphere, [psi, phi](const Vec& x) { return (*phi)((*psi)(x)); });
        Vec x(2);
        x << 0.1, -0.2;
        const Mat direct = comp->jacobian(x);
        const Mat chain = phi->jacobian((*psi)(x)) * psi->jacobian(x);
        c.bound("chain rule for tangent maps", (direct - chain).cwiseAbs().maxCoeff(), 1e-6);

        auto tm = tangent_map(phi);
        const Vec y = random_base_point(rng);
        TypedTensor cot = permute(tm.eval(y), {1, 0});
        const Mat jy = phi->jacobian(y);
        double worst_cot = std::abs(cot.at({0, 1}) - jy(1, 0)) +
                           std::abs(cot.at({1, 0}) - jy(0, 1));
        c.truth("cotangent map is the (1 2) permutation",
                cot.tags()[0].variance == Variance::Covector &&
                    cot.tags()[1].variance == Variance::Vector && worst_cot < 1e-9);
    }
    { // pullback covariant derivative chain rule on Sphere2 and HalfPlane
        double worst = 0.0;
        for (int trial = 0; trial < 6; ++trial) {
            ManifoldPtr cod = trial % 2 ? sphere : half;
            Vec ctr = center;
            auto phi = random_sphere_map(rng, half, cod, ctr);
            AnalyticField ef = AnalyticField::random(rng, 2, 2);
            TensorField e(cod, {Variance::Vector}, [ef](const Vec& s) {
                const Vec v = ef(s);
                return std::vector<double>{v[0], v[1]};
            });
            SectionAlongMap pulled = pullback_section(phi, e);
            const Vec x = random_base_point(rng);
            const std::vector<double> lhs = pullback_covariant_derivative(pulled).raw(x);

            // φ*(∇e) · ∇∘φ computed independently.
            TensorField de = covariant_derivative(e);
            const std::vector<double> des = de.raw((*phi)(x)); // (a, c) over S
            const Mat j = phi->jacobian(x);
            double local = 0.0;
            for (int a = 0; a < 2; ++a)
                for (int i = 0; i < 2; ++i) {
                    double rhs = 0.0;
                    for (int cc = 0; cc < 2; ++cc) rhs += des[a * 2 + cc] * j(cc, i);
                    local = std::max(local, std::abs(lhs[a * 2 + i] - rhs));
                }
            worst = std::max(worst, local);
        }
        c.bound("pullback chain rule ∇(φ*e) = φ*(∇e)·∇∘φ", worst, 1e-6);
    }
    { // covariant Hessian symmetries
        auto phi = random_sphere_map(rng, sphere, sphere, center);
        SectionAlongMap hess = covariant_hessian(phi);
        Vec x(2);
        x << 1.2, 0.9;
        const std::vector<double> h = hess.raw(x);
        double worst = 0.0;
        for (int a = 0; a < 2; ++a)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    worst = std::max(worst,
                                     std::abs(h[(a * 2 + i) * 2 + j] - h[(a * 2 + j) * 2 + i]));
        c.bound("∇²φ is (2 3)-symmetric", worst, 1e-6);

        AnalyticScalar f = AnalyticScalar::random(rng, 2);
        TensorField sf = scalar_field(half, [f](const Vec& p) { return f(p); });
        TensorField d2 = covariant_derivative(covariant_derivative(sf), 2e-4);
        const Vec y = random_base_point(rng);
        const std::vector<double> hh = d2.raw(y);
        c.bound("∇²f is symmetric", std::abs(hh[1] - hh[2]), 1e-6);

        auto id = std::make_shared<SmoothMap>(SmoothMap::identity(make_euclidean(2)));
        const std::vector<double> zero = covariant_hessian(id).raw(y);
        double wz = 0.0;
        for (double v : zero) wz = std::max(wz, std::abs(v));
        c.bound("∇²(id) = 0 on Euclidean space", wz, 1e-12);
    }
    { // mixed partials of a family are (2 3)-symmetric
        auto phi = random_sphere_map(rng, half, sphere, center);
        AnalyticField dir = AnalyticField::random(rng, 2, 2);
        FamilyFn family = [phi, dir, sphere](const Vec& x, double i) {
            Vec base = (*phi)(x);
            if (i == 0.0) return base;
            return sphere->exp_map(base, dir(x), i);
        };
        const Vec x = random_base_point(rng);
        MixedPartials mp = mixed_partials(family, *half, *sphere, x);
        c.bound("ψ_{,MI} = (ψ_{,IM})^(2 3)", (mp.mi - mp.im).cwiseAbs().maxCoeff(), 1e-5);
    }
    { // chain rule for the covariant Hessian of pulled-back sections
        auto phi = random_sphere_map(rng, half, sphere, center);
        AnalyticField ef = AnalyticField::random(rng, 2, 2);
        TensorField e(sphere, {Variance::Vector}, [ef](const Vec& s) {
            const Vec v = ef(s);
            return std::vector<double>{v[0], v[1]};
        });
        const Vec x = random_base_point(rng);
        SectionAlongMap pulled = pullback_section(phi, e);
        const std::vector<double> lhs =
            pullback_covariant_derivative(pullback_covariant_derivative(pulled), 2e-4).raw(x);

        const std::vector<double> d2e =
            covariant_derivative(covariant_derivative(e), 2e-4).raw((*phi)(x)); // (a, c, d)
        const std::vector<double> de = covariant_derivative(e).raw((*phi)(x));  // (a, c)
        const std::vector<double> hess = covariant_hessian(phi).raw(x);         // (c, i, j)
        const Mat j = phi->jacobian(x);
        double worst = 0.0;
        for (int a = 0; a < 2; ++a)
            for (int i = 0; i < 2; ++i)
                for (int jj = 0; jj < 2; ++jj) {
                    double rhs = 0.0;
                    for (int cc = 0; cc < 2; ++cc) {
                        for (int dd = 0; dd < 2; ++dd)
                            rhs += d2e[(a * 2 + cc) * 2 + dd] * j(cc, i) * j(dd, jj);
                        rhs += de[a * 2 + cc] * hess[(cc * 2 + i) * 2 + jj];
                    }
                    worst = std::max(worst, std::abs(lhs[(a * 2 + i) * 2 + jj] - rhs));
                }
        c.bound("∇²(φ*e) = φ*∇²e:(∇∘φ⊠∇∘φ) + φ*∇e·∇∇∘φ", worst, 1e-5);
    }
    { // evaluation at j = 0 commutes with the M-derivative
        // Family over M×I realized as a flat product chart; the M-components
        // of the full derivative at j = 0 equal the derivative of the slice.
        auto strip = make_euclidean(2); // coordinates (x, j)
        auto line = make_euclidean(1);
        AnalyticMapData base = AnalyticMapData::random(rng, 2, center, 0.5 * Vec::Ones(2));
        auto family_map =
            std::make_shared<SmoothMap>(base.as_smooth_map("Phi", strip, sphere));
        AnalyticField comps = AnalyticField::random(rng, 2, 2);
        SectionAlongMap full(family_map, {target_vector()}, [comps](const Vec& xj) {
            const Vec v = comps(xj);
            return std::vector<double>{v[0], v[1]};
        });
        auto slice_map = std::make_shared<SmoothMap>(
            "phi0", line, sphere, [family_map](const Vec& x) {
                Vec xj(2);
                xj << x[0], 0.0;
                return (*family_map)(xj);
            });
        SectionAlongMap slice(slice_map, {target_vector()}, [comps](const Vec& x) {
            Vec xj(2);
            xj << x[0], 0.0;
            const Vec v = comps(xj);
            return std::vector<double>{v[0], v[1]};
        });
        Vec x1(1);
        x1[0] = urand(rng, -0.5, 0.5);
        Vec xj(2);
        xj << x1[0], 0.0;
        const std::vector<double> dfull = pullback_covariant_derivative(full).raw(xj);
        const std::vector<double> dslice = pullback_covariant_derivative(slice).raw(x1);
        double worst = 0.0;
        for (int a = 0; a < 2; ++a)
            worst = std::max(worst, std::abs(dfull[a * 2 + 0] - dslice[a]));
        c.bound("z*(σ_{,M}) = (z*σ)_{,M}", worst, 1e-6);
    }
    { // curvature operators
        AnalyticScalar f = AnalyticScalar::random(rng, 2);
        TensorField sf = scalar_field(sphere, [f](const Vec& p) { return f(p); });
        Vec xd(2), yd(2);
        xd << 1.0, 0.3;
        yd << -0.2, 1.1;
        const Vec x = random_base_point(rng);
        const double rf = curvature_operator(sf, x, xd, yd).value();
        c.bound("R(X,Y)f = 0", std::abs(rf), 1e-6);

        AnalyticField vf = AnalyticField::random(rng, 2, 2);
        TensorField v(sphere, {Variance::Vector}, [vf](const Vec& p) {
            const Vec w = vf(p);
            return std::vector<double>{w[0], w[1]};
        });
        TypedTensor lhs = curvature_operator(v, x, xd, yd);
        const CurvatureTensor r = sphere->curvature_at(x);
        Vec vv(2);
        const std::vector<double> vraw = v.raw(x);
        vv << vraw[0], vraw[1];
        const Vec rhs = -r.apply(xd, yd, vv); // operator sign vs. stored tensor
        double worst = 0.0;
        for (int a = 0; a < 2; ++a) worst = std::max(worst, std::abs(lhs.data()[a] - rhs[a]));
        c.bound("R(X,Y)V matches the curvature-tensor contraction", worst, 1e-6);

        auto phi = random_sphere_map(rng, half, sphere, center);
        AnalyticField sfv = AnalyticField::random(rng, 2, 2);
        SectionAlongMap sigma(phi, {target_vector()}, [sfv](const Vec& p) {
            const Vec w = sfv(p);
            return std::vector<double>{w[0], w[1]};
        });
        const double err = pullback_curvature_identity_error(phi, sigma, x, xd, yd);
        c.bound("pullback curvature endomorphism identity", err, 1e-5);
    }
    { // connection map is a left inverse of the vertical lift
        ConnectionMap v{half, sphere};
        const Vec x = random_base_point(rng);
        Vec s(2);
        s << 1.4, 0.8;
        Mat a = Mat::Random(2, 2), adot = Mat::Random(2, 2);
        const Mat out = v.apply(x, s, a, Vec::Zero(2), Vec::Zero(2), adot);
        c.bound("v ∘ vertical-lift = id on fibers", (out - adot).cwiseAbs().maxCoeff(), 1e-12);
    }
    { // partial covariant derivatives of the kinetic Lagrangian
        auto m = half;
        auto s = sphere;
        TotalSpaceFn kin = [m, s](const Vec& x, const Vec& sc, const Mat& a) {
            return 0.5 * (a.transpose() * s->metric_at(sc) * a * m->inverse_metric_at(x)).trace();
        };
        const Vec x = random_base_point(rng);
        Vec sc(2);
        sc << 1.5, 0.7;
        Mat a = Mat::Random(2, 2);
        LagrangianPartials pd = partial_covariant_derivatives(kin, *m, *s, x, sc, a);
        const Mat want = s->metric_at(sc) * a * m->inverse_metric_at(x);
        c.bound("kinetic L_,v = A:k", (pd.v - want).cwiseAbs().maxCoeff(), 1e-6);
        c.bound("kinetic L_,σ = 0", pd.sigma.lpNorm<Eigen::Infinity>(), 1e-5);
        c.bound("kinetic L_,μ = 0", pd.mu.lpNorm<Eigen::Infinity>(), 1e-5);

        TotalSpaceFn base_only = [](const Vec& x2, const Vec&, const Mat&) {
            return std::sin(x2[0]) + x2[1];
        };
        LagrangianPartials pb = partial_covariant_derivatives(base_only, *m, *s, x, sc, a);
        c.bound("base-only L has L_,v = 0", pb.v.cwiseAbs().maxCoeff(), 1e-12);

        // Reconstruction along a random curve in E.
        AnalyticField xc = AnalyticField::random(rng, 1, 2), scv = AnalyticField::random(rng, 1, 2);
        AnalyticField av = AnalyticField::random(rng, 1, 4);
        auto curve = [&](double tau) {
            Vec tt(1);
            tt[0] = tau;
            Vec xx = x + 0.2 * xc(tt);
            Vec ss = sc + 0.2 * scv(tt);
            Vec aa = av(tt);
            Mat am(2, 2);
            am << aa[0], aa[1], aa[2], aa[3];
            return std::make_tuple(xx, ss, am);
        };
        const double h = 1e-5;
        auto [x0, s0, a0] = curve(0.0);
        auto [xp, sp, ap] = curve(h);
        auto [xm, sm, am2] = curve(-h);
        const double dl = (kin(xp, sp, ap) - kin(xm, sm, am2)) / (2 * h);
        const Vec xdot = (xp - xm) / (2 * h), sdot = (sp - sm) / (2 * h);
        const Mat adot = (ap - am2) / (2 * h);
        ConnectionMap cm{m, s};
        const Mat nabla_a = cm.apply(x0, s0, a0, xdot, sdot, adot);
        LagrangianPartials pd0 = partial_covariant_derivatives(kin, *m, *s, x0, s0, a0);
        const double recon = pd0.sigma.dot(sdot) + pd0.mu.dot(xdot) +
                             (pd0.v.array() * nabla_a.array()).sum();
        c.bound("∇L·ė = L_,σ·ṡ + L_,μ·ẋ + L_,v·v(ė)", std::abs(dl - recon), 1e-5);
    }
    { // divergence: radial field, product rule, divergence theorem
        auto eu = make_euclidean(2);
        TensorField radial(eu, {Variance::Vector}, [](const Vec& x) {
            return std::vector<double>{x[0], x[1]};
        });
        Vec x(2);
        x << 0.4, -0.3;
        c.bound("div(x,y) = 2", std::abs(divergence(radial).raw(x)[0] - 2.0), 1e-7);

        AnalyticScalar f = AnalyticScalar::random(rng, 2);
        AnalyticField xf = AnalyticField::random(rng, 2, 2);
        TensorField vf(sphere, {Variance::Vector}, [xf](const Vec& p) {
            const Vec v = xf(p);
            return std::vector<double>{v[0], v[1]};
        });
        TensorField fvf(sphere, {Variance::Vector}, [xf, f](const Vec& p) {
            const Vec v = f(p) * xf(p);
            return std::vector<double>{v[0], v[1]};
        });
        const Vec y = random_base_point(rng);
        const double lhs = divergence(fvf).raw(y)[0];
        const Vec grad = f.gradient(y);
        const Vec vx = xf(y);
        const double rhs = grad.dot(vx) + f(y) * divergence(vf).raw(y)[0];
        c.bound("div(fX) = ∇f·X + f·divX", std::abs(lhs - rhs), 1e-6);

        // Divergence theorem on a rectangle in the half-plane.
        Grid grid = Grid::rectangle(-0.5, 0.5, 101, 0.8, 1.6, 101);
        TensorField hx_field(half, {Variance::Vector}, [xf](const Vec& q) {
            const Vec v = xf(q);
            return std::vector<double>{v[0], v[1]};
        });
        TensorField div_field = divergence(hx_field);
        double interior = 0.0;
        for (int k = 0; k < grid.count; ++k) {
            const Vec& p = grid.points[k];
            interior += grid.quad_w[k] * half->volume_density_at(p) * div_field.raw(p)[0];
        }
        const double boundary = grid.boundary_integral([&](int node, int axis, double sign) {
            const Vec& p = grid.points[node];
            const Vec v = xf(p);
            return sign * std::sqrt(half->metric_at(p).determinant()) * v[axis];
        });
        c.bound("∫ divX dV = ∮ X·ν dV̄", std::abs(interior - boundary), 1e-4);
    }
    { // degenerate map: stopped curve with rotating vector
        auto line = make_euclidean(1);
        // θ stops on [0.4, 0.6] via a smooth plateau in its parameter.
        auto plateau = [](double t) {
            if (t < 0.4) return t;
            if (t > 0.6) return t - 0.2;
            return 0.4;
        };
        auto theta = std::make_shared<SmoothMap>(
            "theta", line, sphere, [plateau](const Vec& t) {
                Vec p(2);
                p << 1.2 + 0.3 * plateau(t[0]), 0.9 + 0.2 * plateau(t[0]);
                return p;
            });
        SectionAlongMap big_theta(theta, {target_vector()}, [](const Vec& t) {
            return std::vector<double>{std::cos(3 * t[0]), std::sin(3 * t[0])};
        });
        SectionAlongMap grad = pullback_covariant_derivative(big_theta);
        Vec mid(1);
        mid[0] = 0.5;
        const std::vector<double> d = grad.raw(mid);
        const double mag = std::hypot(d[0], d[1]);
        // On the plateau the base motion vanishes, so ∇Θ is the plain fiber
        // derivative (nonzero because the vector keeps rotating).
        Vec fiber_dot(2);
        fiber_dot << -3 * std::sin(1.5), 3 * std::cos(1.5);
        c.truth("stopped curve keeps a nonzero pullback derivative", mag > 0.5);
        c.bound("base-motion term vanishes on the stopped interval",
                std::abs(d[0] - fiber_dot[0]) + std::abs(d[1] - fiber_dot[1]), 1e-6);
    }
}

// ------------------------------------------------------------ variational ---

void suite_variational(Collector& c, std::mt19937_64& rng) {
    auto line = make_euclidean(1);
    auto sphere = make_sphere2();

    // Equator geodesic problem on the sphere.
    auto equator_problem = [&](double len, int n) {
        EnergyProblem p{line, sphere, kinetic_lagrangian(line, sphere),
                        Grid::interval(0.0, len, n), BoundaryMode::Fixed};
        FieldConfiguration phi;
        phi.values.resize(p.grid.count);
        for (int k = 0; k < p.grid.count; ++k) {
            Vec s(2);
            s << M_PI / 2, p.grid.points[k][0];
            phi.values[k] = s;
        }
        return std::make_pair(std::move(p), std::move(phi));
    };

    { // energy of a straight Euclidean line
        auto eu = make_euclidean(2);
        EnergyProblem p{line, eu, kinetic_lagrangian(line, eu), Grid::interval(0, 1, 65),
                        BoundaryMode::Fixed};
        FieldConfiguration phi;
        phi.values.resize(p.grid.count);
        Vec dir(2);
        dir << 2.0, 1.0;
        for (int k = 0; k < p.grid.count; ++k) phi.values[k] = p.grid.points[k][0] * dir;
        c.bound("straight-line energy = ½c²", std::abs(energy(p, phi) - 0.5 * dir.squaredNorm()),
                1e-12);
    }
    { // trapezoid refinement order
        auto eu = make_euclidean(2);
        auto energy_at = [&](int n) {
            EnergyProblem p{line, eu, kinetic_lagrangian(line, eu), Grid::interval(0, 1, n),
                            BoundaryMode::Fixed};
            FieldConfiguration phi;
            phi.values.resize(p.grid.count);
            for (int k = 0; k < p.grid.count; ++k) {
                const double t = p.grid.points[k][0];
                Vec s(2);
                s << std::sin(t), std::cos(2 * t);
                phi.values[k] = s;
            }
            return energy(p, phi);
        };
        const double d1 = std::abs(energy_at(33) - energy_at(65));
        const double d2 = std::abs(energy_at(65) - energy_at(129));
        c.truth("|E(n) − E(2n)| decays at order h²", d1 / d2 > 3.0 && d1 / d2 < 5.0,
                "ratio " + std::to_string(d1 / d2));
    }
    { // discrete integration by parts and first-variation linearity
        auto [p, phi] = equator_problem(1.3, 1025);
        VariationField a, b;
        a.values.resize(p.grid.count);
        b.values.resize(p.grid.count);
        for (int k = 0; k < p.grid.count; ++k) {
            const double t = p.grid.points[k][0] / 1.3;
            Vec av(2), bv(2);
            av << std::sin(M_PI * t), std::sin(2 * M_PI * t);
            bv << std::sin(2 * M_PI * t) * 0.3, -std::sin(M_PI * t);
            if (p.grid.boundary[k]) av.setZero(), bv.setZero();
            a.values[k] = av;
            b.values[k] = bv;
        }
        FirstVariationResult fa = first_variation(p, phi, a);
        FirstVariationResult fb = first_variation(p, phi, b);
        VariationField ab;
        ab.values.resize(p.grid.count);
        for (int k = 0; k < p.grid.count; ++k)
            ab.values[k] = 2.0 * a.values[k] - 0.5 * b.values[k];
        FirstVariationResult fab = first_variation(p, phi, ab);
        c.bound("first variation is linear in A",
                std::abs(fab.formula - (2.0 * fa.formula - 0.5 * fb.formula)), 1e-8);

        // ∫(L_,σ·A + L_,v·∇A) against the integrated-by-parts form: the
        // left-hand side is the fd derivative of the energy.
        c.bound("discrete integration by parts", std::abs(fa.formula - fa.fd), 1e-4);
    }
    { // δ commutes with the material derivative
        auto [p, phi] = equator_problem(1.3, 257);
        std::mt19937_64 r2(rng());
        AnalyticField af = AnalyticField::random(r2, 1, 2);
        const double eps = 1e-4;
        auto varied = [&](double i) {
            FieldConfiguration out = phi;
            for (int k = 0; k < p.grid.count; ++k) {
                Vec t(1);
                t[0] = p.grid.points[k][0];
                out.values[k] = sphere->exp_map(phi.values[k], af(t), i);
            }
            return out;
        };
        FieldConfiguration plus = varied(eps), minus = varied(-eps);
        double worst = 0.0;
        for (int k = 2; k < p.grid.count - 2; ++k) {
            // v-component of δ_i Φ_{,M}: covariant i-derivative of the stencil
            // Jacobian, with the Γ_S(Φ)·δΦ correction.
            const Mat jp = p.grid.jacobian_at(plus.values, k);
            const Mat jm = p.grid.jacobian_at(minus.values, k);
            Mat dj = (jp - jm) / (2 * eps);
            Vec t(1);
            t[0] = p.grid.points[k][0];
            const Vec a = af(t);
            const Christoffel gs = sphere->christoffel_at(phi.values[k]);
            const Mat j0 = p.grid.jacobian_at(phi.values, k);
            for (int aa = 0; aa < 2; ++aa)
                for (int bb = 0; bb < 2; ++bb)
                    for (int cc = 0; cc < 2; ++cc)
                        dj(aa, 0) += gs(aa, bb, cc) * j0(bb, 0) * a[cc];

            // ∇^{φ*TS} δΦ of the variation field A itself.
            std::vector<Vec> avals(p.grid.count);
            for (int kk = 0; kk < p.grid.count; ++kk) {
                Vec tt(1);
                tt[0] = p.grid.points[kk][0];
                avals[kk] = af(tt);
            }
            Mat na = p.grid.jacobian_at(avals, k);
            for (int aa = 0; aa < 2; ++aa)
                for (int bb = 0; bb < 2; ++bb)
                    for (int cc = 0; cc < 2; ++cc)
                        na(aa, 0) += gs(aa, bb, cc) * avals[k][bb] * j0(cc, 0);
            worst = std::max(worst, (dj - na).cwiseAbs().maxCoeff());
        }
        c.bound("δ commutes with the material derivative", worst, 1e-5);
    }
    { // Hamiltonian on a geodesic; drift on a bent curve
        auto [p, phi] = equator_problem(M_PI, 513);
        std::vector<double> h = hamiltonian(p, phi);
        double drift = 0.0;
        for (double v : h) drift = std::max(drift, std::abs(v - h[0]));
        c.bound("H constant on a geodesic", drift / std::abs(h[0]), 1e-8);
        c.bound("H = ½|φ'|² for kinetic L", std::abs(h[0] - 0.5), 1e-6);

        FieldConfiguration bent = phi;
        for (int k = 0; k < p.grid.count; ++k)
            bent.values[k][0] += 0.15 * std::sin(p.grid.points[k][0]);
        std::vector<double> hb = hamiltonian(p, bent);
        double bdrift = 0.0;
        for (double v : hb) bdrift = std::max(bdrift, std::abs(v - hb[0]));
        c.truth("bent curve shows visible H drift", bdrift > 1e-3,
                "drift " + std::to_string(bdrift));
    }
    { // EL residual equals minus the lowered tension for the kinetic case
        auto [p, phi] = equator_problem(1.2, 1025);
        // Perturb smoothly so the tension is nonzero.
        for (int k = 0; k < p.grid.count; ++k)
            phi.values[k][0] += 0.2 * std::sin(M_PI * p.grid.points[k][0] / 1.2);
        ELResidual res = euler_lagrange_residual(p, phi);
        std::vector<Vec> tens = discrete_tension(p, phi);
        double worst = 0.0;
        for (int k = 0; k < p.grid.count; ++k) {
            if (p.grid.boundary[k]) continue;
            const Mat h = sphere->metric_at(phi.values[k]);
            const Vec lowered = h * tens[k];
            worst = std::max(worst, (res.interior[k] + lowered).lpNorm<Eigen::Infinity>());
        }
        c.bound("EL residual = −(lowered tension)", worst, 1e-5);
    }
    { // second variation symmetry for the kinetic Lagrangian
        auto [p, phi] = equator_problem(2.0, 513);
        std::vector<Vec> normal = unit_normal_field(p, phi);
        VariationField a, b;
        a.values.resize(p.grid.count);
        b.values.resize(p.grid.count);
        for (int k = 0; k < p.grid.count; ++k) {
            const double t = p.grid.points[k][0] / 2.0;
            a.values[k] = std::sin(M_PI * t) * normal[k];
            b.values[k] = std::sin(2 * M_PI * t) * normal[k];
            if (p.grid.boundary[k]) {
                a.values[k].setZero();
                b.values[k].setZero();
            }
        }
        SecondVariationResult ab = second_variation(p, phi, a, b, false);
        SecondVariationResult ba = second_variation(p, phi, b, a, false);
        c.bound("second variation is symmetric (kinetic)", std::abs(ab.formula - ba.formula),
                1e-6);
    }
}

} // namespace

int dsl_soundness_failures(std::uint64_t seed, int count) {
    return dsl_soundness_failures_impl(seed, count);
}

std::vector<std::string> suite_names() {
    return {"types", "dsl", "tensor", "manifolds", "covariant", "variational"};
}

std::vector<CheckResult> run_suite(const std::string& suite, std::uint64_t seed) {
    Collector c;
    std::mt19937_64 rng(seed);
    if (suite == "types") suite_types(c, rng);
    else if (suite == "dsl") suite_dsl(c, rng);
    else if (suite == "tensor") suite_tensor(c, rng);
    else if (suite == "manifolds") suite_manifolds(c, rng);
    else if (suite == "covariant") suite_covariant(c, rng);
    else if (suite == "variational") suite_variational(c, rng);
    else if (suite == "all") {
        for (const auto& name : suite_names()) {
            auto sub = run_suite(name, seed);
            for (auto& r : sub) {
                r.name = name + ": " + r.name;
                c.results.push_back(std::move(r));
            }
        }
    } else {
        throw UsageError("unknown verify suite '" + suite + "'");
    }
    return c.results;
}

bool all_passed(const std::vector<CheckResult>& results) {
    for (const auto& r : results)
        if (!r.pass) return false;
    return !results.empty();
}

} // namespace bundletc::verify
