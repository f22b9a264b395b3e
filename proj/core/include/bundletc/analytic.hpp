#pragma once

#include <random>
#include <vector>

#include "bundletc/manifolds.hpp"

namespace bundletc {

// Trigonometric-polynomial scalar function on a chart with closed-form first
// and second derivatives: sum of terms  a · w(k·x + c)  with w ∈ {sin, cos}
// plus an affine part. Randomized instances drive the property suites.
class AnalyticScalar {
public:
    struct Term {
        double amp;
        Vec freq;   // k
        double phase;
        bool use_sin;
    };

    AnalyticScalar() = default;
    AnalyticScalar(std::vector<Term> terms, Vec linear, double constant);

    static AnalyticScalar random(std::mt19937_64& rng, int dim, double amplitude = 0.5,
                                 double max_freq = 2.0);

    double operator()(const Vec& x) const;
    Vec gradient(const Vec& x) const;
    Mat hessian(const Vec& x) const;
    int dim() const { return static_cast<int>(linear_.size()); }

private:
    std::vector<Term> terms_;
    Vec linear_;
    double constant_ = 0.0;
};

// Component-wise analytic map between charts, built so the image stays inside
// a given box: x ↦ center + spread·F(x) with |F| ≤ 1 componentwise.
class AnalyticMapData {
public:
    static AnalyticMapData random(std::mt19937_64& rng, int dim_in, const Vec& center,
                                  const Vec& spread);

    Vec operator()(const Vec& x) const;
    Mat jacobian(const Vec& x) const;            // (a, i)
    std::vector<Mat> hessian(const Vec& x) const; // [a](i, j)
    int dim_out() const { return static_cast<int>(components_.size()); }

    // Wraps this data as a SmoothMap with exact derivatives.
    SmoothMap as_smooth_map(const std::string& name, ManifoldPtr domain,
                            ManifoldPtr codomain) const;

private:
    std::vector<AnalyticScalar> components_;
    Vec center_, spread_;
    std::vector<double> norms_; // per-component bound used for squashing
};

// Analytic vector/covector-valued function on a chart (one AnalyticScalar per
// component), with exact component derivatives.
class AnalyticField {
public:
    static AnalyticField random(std::mt19937_64& rng, int dim_in, int components,
                                double amplitude = 0.7);
    Vec operator()(const Vec& x) const;
    Mat jacobian(const Vec& x) const; // (component, direction)
    int components() const { return static_cast<int>(comps_.size()); }
    const AnalyticScalar& component(int i) const { return comps_[i]; }

private:
    std::vector<AnalyticScalar> comps_;
};

} // namespace bundletc
