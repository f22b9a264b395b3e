#include "bundletc/analytic.hpp"

#include <cmath>

namespace bundletc {

AnalyticScalar::AnalyticScalar(std::vector<Term> terms, Vec linear, double constant)
    : terms_(std::move(terms)), linear_(std::move(linear)), constant_(constant) {}

AnalyticScalar AnalyticScalar::random(std::mt19937_64& rng, int dim, double amplitude,
                                      double max_freq) {
    std::uniform_real_distribution<double> amp(-amplitude, amplitude);
    std::uniform_real_distribution<double> freq(-max_freq, max_freq);
    std::uniform_real_distribution<double> phase(0.0, 2 * M_PI);
    std::bernoulli_distribution coin;
    std::vector<Term> terms;
    for (int t = 0; t < 3; ++t) {
        Term term;
        term.amp = amp(rng);
        term.freq = Vec::Zero(dim);
        for (int i = 0; i < dim; ++i) term.freq[i] = freq(rng);
        term.phase = phase(rng);
        term.use_sin = coin(rng);
        terms.push_back(term);
    }
    Vec lin = Vec::Zero(dim);
    for (int i = 0; i < dim; ++i) lin[i] = 0.3 * amp(rng);
    return AnalyticScalar(std::move(terms), std::move(lin), 0.2 * amp(rng));
}

double AnalyticScalar::operator()(const Vec& x) const {
    double s = constant_ + linear_.dot(x);
    for (const auto& t : terms_) {
        const double u = t.freq.dot(x) + t.phase;
        s += t.amp * (t.use_sin ? std::sin(u) : std::cos(u));
    }
    return s;
}

Vec AnalyticScalar::gradient(const Vec& x) const {
    Vec g = linear_;
    for (const auto& t : terms_) {
        const double u = t.freq.dot(x) + t.phase;
        const double d = t.amp * (t.use_sin ? std::cos(u) : -std::sin(u));
        g += d * t.freq;
    }
    return g;
}

Mat AnalyticScalar::hessian(const Vec& x) const {
    Mat h = Mat::Zero(dim(), dim());
    for (const auto& t : terms_) {
        const double u = t.freq.dot(x) + t.phase;
        const double dd = t.amp * (t.use_sin ? -std::sin(u) : -std::cos(u));
        h += dd * (t.freq * t.freq.transpose());
    }
    return h;
}

AnalyticMapData AnalyticMapData::random(std::mt19937_64& rng, int dim_in, const Vec& center,
                                        const Vec& spread) {
    AnalyticMapData m;
    m.center_ = center;
    m.spread_ = spread;
    for (int a = 0; a < center.size(); ++a) {
        AnalyticScalar f = AnalyticScalar::random(rng, dim_in, 0.4, 1.5);
        m.components_.push_back(f);
        // Loose componentwise bound: |terms| ≤ Σ|amp|; affine part bounded on
        // the chart boxes we use (coordinates stay within |x| ≤ 8).
        m.norms_.push_back(1.6);
    }
    return m;
}

Vec AnalyticMapData::operator()(const Vec& x) const {
    Vec y = center_;
    for (std::size_t a = 0; a < components_.size(); ++a)
        y[static_cast<int>(a)] += spread_[static_cast<int>(a)] *
                                  std::tanh(components_[a](x) / norms_[a]);
    return y;
}

Mat AnalyticMapData::jacobian(const Vec& x) const {
    Mat j = Mat::Zero(dim_out(), x.size());
    for (int a = 0; a < dim_out(); ++a) {
        const double u = components_[a](x) / norms_[a];
        const double sech2 = 1.0 - std::tanh(u) * std::tanh(u);
        j.row(a) = (spread_[a] * sech2 / norms_[a]) * components_[a].gradient(x).transpose();
    }
    return j;
}

std::vector<Mat> AnalyticMapData::hessian(const Vec& x) const {
    std::vector<Mat> h(dim_out());
    for (int a = 0; a < dim_out(); ++a) {
        const double u = components_[a](x) / norms_[a];
        const double th = std::tanh(u);
        const double sech2 = 1.0 - th * th;
        const Vec g = components_[a].gradient(x);
        const Mat hs = components_[a].hessian(x);
        // d²/dx² [spread·tanh(f/n)] = spread·(sech²·f''/n − 2 tanh sech² f'f'ᵀ/n²)
        h[a] = spread_[a] * (sech2 / norms_[a] * hs -
                             2.0 * th * sech2 / (norms_[a] * norms_[a]) * (g * g.transpose()));
    }
    return h;
}

SmoothMap AnalyticMapData::as_smooth_map(const std::string& name, ManifoldPtr domain,
                                         ManifoldPtr codomain) const {
    AnalyticMapData copy = *this;
    SmoothMap m(name, std::move(domain), std::move(codomain),
                [copy](const Vec& x) { return copy(x); });
    m.set_jacobian([copy](const Vec& x) { return copy.jacobian(x); });
    m.set_hessian([copy](const Vec& x) { return copy.hessian(x); });
    return m;
}

AnalyticField AnalyticField::random(std::mt19937_64& rng, int dim_in, int components,
                                    double amplitude) {
    AnalyticField f;
    for (int i = 0; i < components; ++i)
        f.comps_.push_back(AnalyticScalar::random(rng, dim_in, amplitude));
    return f;
}

Vec AnalyticField::operator()(const Vec& x) const {
    Vec v = Vec::Zero(components());
    for (int i = 0; i < components(); ++i) v[i] = comps_[i](x);
    return v;
}

Mat AnalyticField::jacobian(const Vec& x) const {
    Mat j = Mat::Zero(components(), x.size());
    for (int i = 0; i < components(); ++i) j.row(i) = comps_[i].gradient(x).transpose();
    return j;
}

} // namespace bundletc
