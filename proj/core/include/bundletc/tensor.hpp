#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bundletc/errors.hpp"

namespace bundletc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class Variance { Vector, Covector };

// One tensor axis: fiber space identity, dimension and variance. The space
// symbol carries everything needed to distinguish fibers, including the base
// point for bundle fibers ("T[S]@(1.5708,0)"), so pairing tensors from
// different fibers fails as a TagMismatch.
struct AxisTag {
    std::string space;
    int dim = 0;
    Variance variance = Variance::Vector;

    bool operator==(const AxisTag& o) const {
        return space == o.space && dim == o.dim && variance == o.variance;
    }
    bool dual_matches(const AxisTag& o) const {
        return space == o.space && dim == o.dim && variance != o.variance;
    }
    AxisTag dual() const {
        return {space, dim,
                variance == Variance::Vector ? Variance::Covector : Variance::Vector};
    }
    std::string to_string() const;
};

AxisTag vector_axis(std::string space, int dim);
AxisTag covector_axis(std::string space, int dim);

// Dense multi-axis array with one AxisTag per axis, row-major. Axis order is
// significant: no operation transposes silently.
class TypedTensor {
public:
    TypedTensor() = default;
    TypedTensor(std::vector<AxisTag> tags, std::vector<double> data);

    // Zero tensor with the given tags.
    static TypedTensor zeros(std::vector<AxisTag> tags);
    // Scalar (rank 0).
    static TypedTensor scalar(double v);
    // Identity on the space described by `vec`: tags (vec, vec.dual()).
    static TypedTensor identity(const AxisTag& vec);
    // Rank-2 tensor from an Eigen matrix; row index = tags[0], col = tags[1].
    static TypedTensor from_matrix(const Mat& m, AxisTag row, AxisTag col);

    int rank() const { return static_cast<int>(tags_.size()); }
    const std::vector<AxisTag>& tags() const { return tags_; }
    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }
    std::size_t size() const { return data_.size(); }

    double value() const; // rank-0 access
    double& at(std::initializer_list<int> idx);
    double at(std::initializer_list<int> idx) const;
    double& at(const std::vector<int>& idx);
    double at(const std::vector<int>& idx) const;

    Mat as_matrix() const; // rank-2 view

    TypedTensor operator+(const TypedTensor& o) const;
    TypedTensor operator-(const TypedTensor& o) const;
    TypedTensor operator*(double s) const;

    double max_abs() const;
    std::string shape_string() const;

private:
    std::vector<AxisTag> tags_;
    std::vector<double> data_;
    std::vector<std::size_t> strides_;
    void compute_strides();
    std::size_t offset(const std::vector<int>& idx) const;
    friend TypedTensor contract(const TypedTensor&, const TypedTensor&, int);
    friend TypedTensor tensor_product(const TypedTensor&, const TypedTensor&);
    friend TypedTensor permute(const TypedTensor&, const std::vector<int>&);
};

// n-fold tensor contraction A·ⁿB: the last n axes of A pair with the first n
// axes of B (slot-wise, dual-matched). Result axes: A's leading (rank−n)
// followed by B's trailing (rank−n). Throws TagMismatch naming the first
// offending axis pair.
TypedTensor contract(const TypedTensor& a, const TypedTensor& b, int n);

// Natural trace of a rank-2 dual-matched tensor.
double trace(const TypedTensor& a);

// Right action of a permutation: factor i of `a` moves to position sigma[i]
// (0-based one-line form). Tags move with their factors.
TypedTensor permute(const TypedTensor& a, const std::vector<int>& sigma);

// Composition "apply s then t" under the right action: (A^s)^t = A^{compose}.
std::vector<int> compose_permutations(const std::vector<int>& s, const std::vector<int>& t);

// A permutation as a 2n-tensor sigma in V1*⊗…⊗Vn*⊗V_{s^-1(1)}⊗…, so that
// contract(a, permutation_tensor(s, a.tags()), n) == permute(a, s).
TypedTensor permutation_tensor(const std::vector<int>& sigma, const std::vector<AxisTag>& tags);

TypedTensor tensor_product(const TypedTensor& a, const TypedTensor& b);

// Parallel tensor product A⊠B. For rank-2 operands this is (A⊗B)^(2 3).
// Higher even ranks need the declared output/input split of each operand;
// odd ranks without a split are a UsageError.
TypedTensor parallel_product(const TypedTensor& a, const TypedTensor& b);
TypedTensor parallel_product(const TypedTensor& a, const TypedTensor& b,
                             int a_out, int b_out);

// Adjoint of a rank-2 tensor: permute by (1 2); the matrix transposes.
TypedTensor adjoint(const TypedTensor& a);

// Induced inner product k = h⊠g⁻¹ on W⊗V*, given a metric h on W and an
// inverse metric g⁻¹ on V (both symmetric). A:k:B = tr(g⁻¹·A*·h·B).
TypedTensor induced_inner_product(const TypedTensor& h, const TypedTensor& g_inv);

// Derivative of matrix inversion at A: Di(A) = −(A⁻¹⊗A⁻¹)^(2 3 4), a rank-4
// tensor with contract(Di(A), B, 2) = −A⁻¹·B·A⁻¹. Throws SingularMatrix when
// the condition number exceeds `max_condition`.
TypedTensor inversion_derivative(const TypedTensor& a, double max_condition = 1e12);

// Cycle-notation helpers ("(2 3 4)" is 1-based in text, converted to the
// 0-based one-line form used everywhere else).
std::vector<int> permutation_from_cycles(const std::vector<std::vector<int>>& cycles, int n);
std::vector<int> identity_permutation(int n);

} // namespace bundletc
