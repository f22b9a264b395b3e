#include "bundletc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace bundletc {

std::string AxisTag::to_string() const {
    std::ostringstream os;
    os << (variance == Variance::Vector ? "" : "*") << space << "[" << dim << "]";
    return os.str();
}

AxisTag vector_axis(std::string space, int dim) {
    return {std::move(space), dim, Variance::Vector};
}

AxisTag covector_axis(std::string space, int dim) {
    return {std::move(space), dim, Variance::Covector};
}

TypedTensor::TypedTensor(std::vector<AxisTag> tags, std::vector<double> data)
    : tags_(std::move(tags)), data_(std::move(data)) {
    std::size_t expect = 1;
    for (const auto& t : tags_) {
        if (t.dim <= 0) throw UsageError("axis dimension must be positive");
        expect *= static_cast<std::size_t>(t.dim);
    }
    if (expect != data_.size())
        throw UsageError("data length " + std::to_string(data_.size()) +
                         " inconsistent with axis dims (want " + std::to_string(expect) + ")");
    compute_strides();
}

void TypedTensor::compute_strides() {
    strides_.assign(tags_.size(), 1);
    for (int i = static_cast<int>(tags_.size()) - 2; i >= 0; --i)
        strides_[i] = strides_[i + 1] * static_cast<std::size_t>(tags_[i + 1].dim);
}

TypedTensor TypedTensor::zeros(std::vector<AxisTag> tags) {
    std::size_t n = 1;
    for (const auto& t : tags) n *= static_cast<std::size_t>(t.dim);
    return TypedTensor(std::move(tags), std::vector<double>(n, 0.0));
}

TypedTensor TypedTensor::scalar(double v) {
    return TypedTensor({}, {v});
}

TypedTensor TypedTensor::identity(const AxisTag& vec) {
    TypedTensor t = zeros({vec, vec.dual()});
    for (int i = 0; i < vec.dim; ++i) t.at({i, i}) = 1.0;
    return t;
}

TypedTensor TypedTensor::from_matrix(const Mat& m, AxisTag row, AxisTag col) {
    if (row.dim != m.rows() || col.dim != m.cols())
        throw UsageError("matrix shape does not match axis dims");
    TypedTensor t = zeros({std::move(row), std::move(col)});
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j)
            t.at({i, j}) = m(i, j);
    return t;
}

double TypedTensor::value() const {
    if (rank() != 0) throw UsageError("value() on tensor of rank " + std::to_string(rank()));
    return data_[0];
}

std::size_t TypedTensor::offset(const std::vector<int>& idx) const {
    std::size_t off = 0;
    for (std::size_t k = 0; k < idx.size(); ++k)
        off += strides_[k] * static_cast<std::size_t>(idx[k]);
    return off;
}

double& TypedTensor::at(std::initializer_list<int> idx) {
    return at(std::vector<int>(idx));
}
double TypedTensor::at(std::initializer_list<int> idx) const {
    return at(std::vector<int>(idx));
}
double& TypedTensor::at(const std::vector<int>& idx) {
    return data_[offset(idx)];
}
double TypedTensor::at(const std::vector<int>& idx) const {
    return data_[offset(idx)];
}

Mat TypedTensor::as_matrix() const {
    if (rank() != 2) throw UsageError("as_matrix() on tensor of rank " + std::to_string(rank()));
    Mat m(tags_[0].dim, tags_[1].dim);
    for (int i = 0; i < tags_[0].dim; ++i)
        for (int j = 0; j < tags_[1].dim; ++j)
            m(i, j) = at({i, j});
    return m;
}

static void require_same_tags(const TypedTensor& a, const TypedTensor& b, const char* op) {
    if (a.tags() != b.tags())
        throw TagMismatch(std::string(op) + ": operand axis tags differ (" +
                          a.shape_string() + " vs " + b.shape_string() + ")");
}

TypedTensor TypedTensor::operator+(const TypedTensor& o) const {
    require_same_tags(*this, o, "add");
    TypedTensor r = *this;
    for (std::size_t i = 0; i < data_.size(); ++i) r.data_[i] += o.data_[i];
    return r;
}

TypedTensor TypedTensor::operator-(const TypedTensor& o) const {
    require_same_tags(*this, o, "sub");
    TypedTensor r = *this;
    for (std::size_t i = 0; i < data_.size(); ++i) r.data_[i] -= o.data_[i];
    return r;
}

TypedTensor TypedTensor::operator*(double s) const {
    TypedTensor r = *this;
    for (auto& v : r.data_) v *= s;
    return r;
}

double TypedTensor::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

std::string TypedTensor::shape_string() const {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < tags_.size(); ++i) {
        if (i) os << " ⊗ ";
        os << tags_[i].to_string();
    }
    os << ")";
    return os.str();
}

TypedTensor contract(const TypedTensor& a, const TypedTensor& b, int n) {
    if (n < 0 || n > a.rank() || n > b.rank())
        throw TagMismatch("contract: need " + std::to_string(n) + " axes, have ranks " +
                          std::to_string(a.rank()) + " and " + std::to_string(b.rank()));
    const int ra = a.rank(), rb = b.rank();
    for (int k = 0; k < n; ++k) {
        const AxisTag& ta = a.tags()[ra - n + k];
        const AxisTag& tb = b.tags()[k];
        if (!ta.dual_matches(tb))
            throw TagMismatch("contract: axis " + std::to_string(ra - n + k) + " of left (" +
                              ta.to_string() + ") does not dual-match axis " +
                              std::to_string(k) + " of right (" + tb.to_string() + ")");
    }

    std::vector<AxisTag> out_tags;
    out_tags.insert(out_tags.end(), a.tags().begin(), a.tags().end() - n);
    out_tags.insert(out_tags.end(), b.tags().begin() + n, b.tags().end());

    std::size_t a_outer = 1, mid = 1, b_outer = 1;
    for (int i = 0; i < ra - n; ++i) a_outer *= static_cast<std::size_t>(a.tags()[i].dim);
    for (int k = 0; k < n; ++k) mid *= static_cast<std::size_t>(b.tags()[k].dim);
    for (int j = n; j < rb; ++j) b_outer *= static_cast<std::size_t>(b.tags()[j].dim);

    // Row-major layout makes both operands (outer, mid) and (mid, outer) flat.
    TypedTensor r = TypedTensor::zeros(out_tags);
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* pr = r.data().data();
    for (std::size_t i = 0; i < a_outer; ++i)
        for (std::size_t k = 0; k < mid; ++k) {
            const double av = pa[i * mid + k];
            if (av == 0.0) continue;
            const double* brow = pb + k * b_outer;
            double* rrow = pr + i * b_outer;
            for (std::size_t j = 0; j < b_outer; ++j) rrow[j] += av * brow[j];
        }
    return r;
}

double trace(const TypedTensor& a) {
    if (a.rank() != 2) throw TagMismatch("trace: rank-2 tensor required");
    if (!a.tags()[0].dual_matches(a.tags()[1]))
        throw TagMismatch("trace: axes " + a.tags()[0].to_string() + " and " +
                          a.tags()[1].to_string() + " are not dual");
    double s = 0.0;
    for (int i = 0; i < a.tags()[0].dim; ++i) s += a.at({i, i});
    return s;
}

TypedTensor permute(const TypedTensor& a, const std::vector<int>& sigma) {
    const int n = a.rank();
    if (static_cast<int>(sigma.size()) != n)
        throw UsageError("permute: permutation length " + std::to_string(sigma.size()) +
                         " does not match rank " + std::to_string(n));
    std::vector<bool> seen(n, false);
    for (int v : sigma) {
        if (v < 0 || v >= n || seen[v]) throw UsageError("permute: not a permutation");
        seen[v] = true;
    }

    std::vector<AxisTag> out_tags(n);
    for (int i = 0; i < n; ++i) out_tags[sigma[i]] = a.tags()[i];
    TypedTensor r = TypedTensor::zeros(out_tags);

    std::vector<int> idx(n, 0), ridx(n, 0);
    const auto& dims = a.tags();
    for (;;) {
        for (int i = 0; i < n; ++i) ridx[sigma[i]] = idx[i];
        r.at(ridx) = a.at(idx);
        int k = n - 1;
        for (; k >= 0; --k) {
            if (++idx[k] < dims[k].dim) break;
            idx[k] = 0;
        }
        if (k < 0) break;
    }
    return r;
}

std::vector<int> compose_permutations(const std::vector<int>& s, const std::vector<int>& t) {
    if (s.size() != t.size()) throw UsageError("compose_permutations: size mismatch");
    std::vector<int> r(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) r[i] = t[s[i]];
    return r;
}

TypedTensor permutation_tensor(const std::vector<int>& sigma, const std::vector<AxisTag>& tags) {
    const int n = static_cast<int>(sigma.size());
    if (static_cast<int>(tags.size()) != n)
        throw UsageError("permutation_tensor: tags/permutation size mismatch");
    std::vector<AxisTag> out_tags;
    for (int i = 0; i < n; ++i) out_tags.push_back(tags[i].dual());
    std::vector<AxisTag> moved(n);
    for (int i = 0; i < n; ++i) moved[sigma[i]] = tags[i];
    out_tags.insert(out_tags.end(), moved.begin(), moved.end());

    TypedTensor r = TypedTensor::zeros(out_tags);
    std::vector<int> idx(2 * n, 0);
    std::vector<int> full(n, 0);
    for (;;) {
        for (int i = 0; i < n; ++i) idx[i] = full[i];
        for (int i = 0; i < n; ++i) idx[n + sigma[i]] = full[i];
        r.at(idx) = 1.0;
        int k = n - 1;
        for (; k >= 0; --k) {
            if (++full[k] < tags[k].dim) break;
            full[k] = 0;
        }
        if (k < 0) break;
    }
    return r;
}

TypedTensor tensor_product(const TypedTensor& a, const TypedTensor& b) {
    std::vector<AxisTag> out_tags = a.tags();
    out_tags.insert(out_tags.end(), b.tags().begin(), b.tags().end());
    TypedTensor r = TypedTensor::zeros(out_tags);
    const std::size_t nb = b.data().size();
    for (std::size_t i = 0; i < a.data().size(); ++i)
        for (std::size_t j = 0; j < nb; ++j)
            r.data()[i * nb + j] = a.data()[i] * b.data()[j];
    return r;
}

TypedTensor parallel_product(const TypedTensor& a, const TypedTensor& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw UsageError("parallel_product: operands of rank " + std::to_string(a.rank()) +
                         " and " + std::to_string(b.rank()) + " need a declared split");
    return parallel_product(a, b, 1, 1);
}

TypedTensor parallel_product(const TypedTensor& a, const TypedTensor& b,
                             int a_out, int b_out) {
    if (a_out < 0 || a_out > a.rank() || b_out < 0 || b_out > b.rank())
        throw UsageError("parallel_product: split out of range");
    // Interleave as [A_out, B_out, A_in, B_in]; for rank-2 operands this is
    // the (2 3) transposition of A⊗B.
    const int a_in = a.rank() - a_out;
    const int n = a.rank() + b.rank();
    std::vector<int> sigma(n);
    int pos = 0;
    for (int i = 0; i < a_out; ++i) sigma[i] = pos++;
    for (int i = 0; i < b_out; ++i) sigma[a.rank() + i] = pos++;
    for (int i = 0; i < a_in; ++i) sigma[a_out + i] = pos++;
    for (int i = 0; i < b.rank() - b_out; ++i) sigma[a.rank() + b_out + i] = pos++;
    return permute(tensor_product(a, b), sigma);
}

TypedTensor adjoint(const TypedTensor& a) {
    if (a.rank() != 2) throw UsageError("adjoint: rank-2 tensor required");
    return permute(a, {1, 0});
}

static bool is_symmetric_rank2(const TypedTensor& t, double tol = 1e-12) {
    if (t.rank() != 2 || t.tags()[0] != t.tags()[1]) return false;
    for (int i = 0; i < t.tags()[0].dim; ++i)
        for (int j = i + 1; j < t.tags()[1].dim; ++j)
            if (std::abs(t.at({i, j}) - t.at({j, i})) > tol) return false;
    return true;
}

TypedTensor induced_inner_product(const TypedTensor& h, const TypedTensor& g_inv) {
    if (!is_symmetric_rank2(h)) throw UsageError("induced_inner_product: h is not symmetric");
    if (!is_symmetric_rank2(g_inv)) throw UsageError("induced_inner_product: g_inv is not symmetric");
    return parallel_product(h, g_inv);
}

TypedTensor inversion_derivative(const TypedTensor& a, double max_condition) {
    if (a.rank() != 2) throw UsageError("inversion_derivative: rank-2 tensor required");
    if (a.tags()[0].dim != a.tags()[1].dim)
        throw UsageError("inversion_derivative: square tensor required");
    Mat m = a.as_matrix();
    Eigen::JacobiSVD<Mat> svd(m);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (smin <= 0.0 || smax / smin > max_condition)
        throw SingularMatrix("inversion_derivative: condition number " +
                             std::to_string(smin > 0 ? smax / smin : 0.0) +
                             " exceeds bound");
    Mat inv = m.inverse();
    // A ∈ V⊗V*, A⁻¹ carries the same axis types.
    TypedTensor ti = TypedTensor::from_matrix(inv, a.tags()[0], a.tags()[1]);
    std::vector<int> cycle = permutation_from_cycles({{2, 3, 4}}, 4);
    return permute(tensor_product(ti, ti), cycle) * -1.0;
}

std::vector<int> permutation_from_cycles(const std::vector<std::vector<int>>& cycles, int n) {
    std::vector<int> sigma = identity_permutation(n);
    for (const auto& cyc : cycles) {
        std::vector<int> step = identity_permutation(n);
        for (std::size_t i = 0; i < cyc.size(); ++i) {
            int from = cyc[i] - 1;
            int to = cyc[(i + 1) % cyc.size()] - 1;
            if (from < 0 || from >= n || to < 0 || to >= n)
                throw UsageError("cycle entry out of range for rank " + std::to_string(n));
            step[from] = to;
        }
        sigma = compose_permutations(sigma, step); // cycles read left-to-right
    }
    return sigma;
}

std::vector<int> identity_permutation(int n) {
    std::vector<int> r(n);
    std::iota(r.begin(), r.end(), 0);
    return r;
}

const char* type_error_kind_name(TypeErrorKind k) {
    switch (k) {
        case TypeErrorKind::Valence: return "ValenceError";
        case TypeErrorKind::Space: return "SpaceMismatch";
        case TypeErrorKind::Base: return "BaseMismatch";
        case TypeErrorKind::UnknownSymbol: return "UnknownSymbol";
        case TypeErrorKind::Structural: return "StructuralError";
    }
    return "TypeError";
}

} // namespace bundletc
