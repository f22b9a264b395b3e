#include "doctest.h"

#include <cmath>

#include "bundletc/analytic.hpp"
#include "bundletc/manifolds.hpp"

using namespace bundletc;

TEST_CASE("metric values of the zoo") {
    auto eu = make_euclidean(2);
    Vec any(2);
    any << 3.7, -1.2;
    CHECK((eu->metric_at(any) - Mat::Identity(2, 2)).norm() == 0.0);
    CHECK(eu->volume_density_at(any) == doctest::Approx(1.0));

    auto sphere = make_sphere2();
    Vec eq(2);
    eq << M_PI / 2, 0.0;
    CHECK((sphere->metric_at(eq) - Mat::Identity(2, 2)).norm() < 1e-14);
    CHECK(sphere->volume_density_at(eq) == doctest::Approx(1.0));

    auto half = make_half_plane();
    Vec p(2);
    p << 0.0, 2.0;
    CHECK(half->metric_at(p)(0, 0) == doctest::Approx(0.25));
    CHECK(half->metric_at(p)(1, 1) == doctest::Approx(0.25));
    CHECK(half->volume_density_at(p) == doctest::Approx(0.25));
    CHECK((half->inverse_metric_at(p) - 4.0 * Mat::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("points outside the chart are rejected") {
    auto half = make_half_plane();
    Vec bad(2);
    bad << 0.0, -1.0;
    CHECK_THROWS_AS(half->metric_at(bad), OutOfChart);
    Vec wrong_dim(3);
    wrong_dim << 1, 1, 1;
    CHECK_THROWS_AS(half->metric_at(wrong_dim), OutOfChart);
}

TEST_CASE("Christoffel symbols of the zoo") {
    auto eu = make_euclidean(3);
    Vec x3(3);
    x3 << 1, 2, 3;
    Christoffel ce = eu->christoffel_at(x3);
    for (int k = 0; k < 3; ++k) CHECK(ce.gamma[k].norm() == 0.0);

    auto sphere = make_sphere2();
    Vec q(2);
    q << M_PI / 4, 1.0;
    Christoffel cs = sphere->christoffel_at(q);
    CHECK(cs(0, 1, 1) == doctest::Approx(-0.5));
    CHECK(cs(1, 0, 1) == doctest::Approx(1.0));
    CHECK(cs(1, 1, 0) == doctest::Approx(1.0));
    CHECK(cs(0, 0, 0) == doctest::Approx(0.0));

    auto half = make_half_plane();
    Vec p(2);
    p << 0.3, 1.0;
    Christoffel ch = half->christoffel_at(p);
    CHECK(ch(0, 0, 1) == doctest::Approx(-1.0));
    CHECK(ch(1, 0, 0) == doctest::Approx(1.0));
    CHECK(ch(1, 1, 1) == doctest::Approx(-1.0));
}

TEST_CASE("finite-difference Christoffels agree with the exact ones") {
    auto sphere = make_sphere2();
    RiemannianManifold numeric("numeric", 2, [](const Vec&) { return true; },
                               [sphere](const Vec& x) { return sphere->metric_at(x); });
    Vec q(2);
    q << 1.1, 0.4;
    Christoffel exact = sphere->christoffel_at(q);
    Christoffel fd = numeric.christoffel_at(q);
    for (int k = 0; k < 2; ++k)
        CHECK((exact.gamma[k] - fd.gamma[k]).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("curvature of the zoo") {
    auto sphere = make_sphere2();
    auto half = make_half_plane();
    Vec u(2), v(2);
    u << 1, 0;
    v << 0, 1;
    Vec q(2);
    q << 0.9, 2.0;
    CHECK(sphere->sectional_curvature(q, u, v) == doctest::Approx(1.0).epsilon(1e-8));
    Vec p(2);
    p << -0.4, 0.7;
    CHECK(half->sectional_curvature(p, u, v) == doctest::Approx(-1.0).epsilon(1e-8));

    // Lowered tensor antisymmetric in the last index pair.
    CurvatureTensor r = sphere->curvature_at(q);
    for (int l = 0; l < 2; ++l)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k)
                    CHECK(std::abs(r.low(l, i, j, k) + r.low(l, i, k, j)) < 1e-8);

    auto torus = make_flat_torus2();
    CurvatureTensor rt = torus->curvature_at(p);
    for (double val : rt.up_data) CHECK(val == doctest::Approx(0.0));
}

TEST_CASE("exponential map on flat space is affine") {
    auto eu = make_euclidean(2);
    Vec x(2), v(2);
    x << 0.5, -0.25;
    v << 1.5, 2.0;
    CHECK((eu->exp_map(x, v, 0.75) - (x + 0.75 * v)).norm() < 1e-12);
    CHECK((eu->exp_map(x, v, 0.0) - x).norm() == 0.0);
}

TEST_CASE("meridians are unit-speed geodesics on the sphere") {
    auto sphere = make_sphere2();
    Vec p(2), v(2);
    p << M_PI / 2, 0.0;
    v << 1.0, 0.0;
    Vec q = sphere->exp_map(p, v, M_PI / 4);
    CHECK(q[0] == doctest::Approx(3 * M_PI / 4).epsilon(1e-9));
    CHECK(std::abs(q[1]) < 1e-12);

    // Speed is conserved along the flow.
    Vec pos, vel;
    sphere->exp_map_with_velocity(p, v, 1.2, 1e-3, pos, vel);
    CHECK(sphere->norm(pos, vel) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("leaving the chart raises ChartExit with the exit time") {
    auto sphere = make_sphere2();
    Vec p(2), v(2);
    p << M_PI / 2, 0.0;
    v << 1.0, 0.0;
    try {
        sphere->exp_map(p, v, 2.0);
        FAIL("expected ChartExit");
    } catch (const ChartExit& e) {
        // Exits near θ = π − 0.01, i.e. t ≈ π/2 − 0.01.
        CHECK(e.exit_time == doctest::Approx(M_PI / 2 - 0.01).epsilon(1e-2));
    }
}

TEST_CASE("smooth maps fall back to finite differences") {
    auto eu2 = make_euclidean(2);
    SmoothMap f("f", eu2, eu2, [](const Vec& x) {
        Vec y(2);
        y << std::sin(x[0]) * x[1], x[0] * x[0];
        return y;
    });
    Vec x(2);
    x << 0.7, 1.3;
    Mat j = f.jacobian(x);
    CHECK(j(0, 0) == doctest::Approx(std::cos(0.7) * 1.3).epsilon(1e-8));
    CHECK(j(0, 1) == doctest::Approx(std::sin(0.7)).epsilon(1e-8));
    CHECK(j(1, 0) == doctest::Approx(1.4).epsilon(1e-8));
    auto h = f.hessian(x);
    CHECK(h[1](0, 0) == doctest::Approx(2.0).epsilon(1e-5));
    CHECK(h[0](0, 1) == doctest::Approx(std::cos(0.7)).epsilon(1e-5));
}

TEST_CASE("analytic helpers expose exact derivatives") {
    std::mt19937_64 rng(99);
    AnalyticScalar f = AnalyticScalar::random(rng, 2);
    Vec x(2);
    x << 0.3, -0.8;
    const Vec g = f.gradient(x);
    const Vec g_fd = fd_gradient([&f](const Vec& p) { return f(p); }, x);
    CHECK((g - g_fd).norm() < 1e-8);
    const Mat h = f.hessian(x);
    const Mat h_fd = fd_hessian([&f](const Vec& p) { return f(p); }, x);
    CHECK((h - h_fd).cwiseAbs().maxCoeff() < 1e-6);

    Vec center(2), spread(2);
    center << 1.2, 1.0;
    spread << 0.4, 0.4;
    AnalyticMapData m = AnalyticMapData::random(rng, 2, center, spread);
    const Mat j = m.jacobian(x);
    const Mat j_fd = fd_jacobian([&m](const Vec& p) { return m(p); }, x);
    CHECK((j - j_fd).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("manifold lookup by name") {
    CHECK(make_manifold("euclidean", 3)->dim() == 3);
    CHECK(make_manifold("sphere2")->name() == "Sphere2");
    CHECK(make_manifold("halfplane")->name() == "HalfPlane");
    CHECK(make_manifold("flattorus2")->name() == "FlatTorus2");
    CHECK_THROWS_AS(make_manifold("nope"), UsageError);
}
