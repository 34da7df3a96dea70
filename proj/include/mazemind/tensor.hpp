#pragma once
// Dense row-major arrays over a real scalar type, plus the GEMM kernel
// everything else is built on. Shapes are small vectors of positive ints;
// an array of shape (d0, ..., dk) is treated as a (d0*...*d(k-1), dk)
// matrix wherever 2-D semantics are needed.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mazemind {

using Shape = std::vector<int>;

inline long shape_numel(const Shape& s) {
    long n = 1;
    for (int d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ")";
    return os.str();
}

template <typename Real>
struct ArrayT {
    Shape shape;
    std::vector<Real> data;

    ArrayT() = default;
    explicit ArrayT(Shape s) : shape(std::move(s)) {
        for (int d : shape)
            if (d <= 0) throw std::invalid_argument("ArrayT: nonpositive dim in " + shape_str(shape));
        data.assign(static_cast<size_t>(shape_numel(shape)), Real(0));
    }
    ArrayT(Shape s, Real fill) : ArrayT(std::move(s)) {
        std::fill(data.begin(), data.end(), fill);
    }
    ArrayT(Shape s, std::vector<Real> d) : shape(std::move(s)), data(std::move(d)) {
        if (static_cast<long>(data.size()) != shape_numel(shape))
            throw std::invalid_argument("ArrayT: data size does not match shape " + shape_str(shape));
    }

    static ArrayT scalar(Real v) { return ArrayT({1}, std::vector<Real>{v}); }

    long size() const { return static_cast<long>(data.size()); }
    // Matrix view: all leading dims folded into rows, last dim = cols.
    int rows() const { return shape.empty() ? 0 : static_cast<int>(size() / shape.back()); }
    int cols() const { return shape.empty() ? 0 : shape.back(); }

    Real& operator[](long i) { return data[static_cast<size_t>(i)]; }
    Real operator[](long i) const { return data[static_cast<size_t>(i)]; }

    bool same_shape(const ArrayT& o) const { return shape == o.shape; }

    void fill(Real v) { std::fill(data.begin(), data.end(), v); }
    void zero() { fill(Real(0)); }

    bool all_finite() const {
        for (Real v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    template <typename Other>
    ArrayT<Other> cast() const {
        ArrayT<Other> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<Other>(data[i]);
        return out;
    }
};

// C (m,n) (+)= A (m,k) * B (k,n), with optional transposes on the logical
// operands (A is then stored (k,m), B stored (n,k)). accumulate=false
// overwrites C.
template <typename Real>
void gemm(bool trans_a, bool trans_b, int m, int n, int k,
          const Real* a, const Real* b, Real* c, bool accumulate) {
    using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using CMap = Eigen::Map<Mat>;
    using Map = Eigen::Map<const Mat>;
    CMap C(c, m, n);
    auto run = [&](const auto& A, const auto& B) {
        if (accumulate)
            C.noalias() += A * B;
        else
            C.noalias() = A * B;
    };
    if (!trans_a && !trans_b)
        run(Map(a, m, k), Map(b, k, n));
    else if (trans_a && !trans_b)
        run(Map(a, k, m).transpose(), Map(b, k, n));
    else if (!trans_a && trans_b)
        run(Map(a, m, k), Map(b, n, k).transpose());
    else
        run(Map(a, k, m).transpose(), Map(b, n, k).transpose());
}

}  // namespace mazemind
