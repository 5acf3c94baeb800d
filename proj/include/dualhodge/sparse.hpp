#pragma once

#include <algorithm>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dualhodge/types.hpp"

namespace dualhodge {

/// Compressed sparse row matrix. Column indices are strictly increasing inside
/// each row and no explicit zeros are stored once a matrix leaves a builder.
template <typename T>
struct CsrMatrix {
    Index rows = 0;
    Index cols = 0;
    std::vector<std::int64_t> row_offsets{0};
    std::vector<Index> col_indices;
    std::vector<T> values;

    std::int64_t nnz() const { return static_cast<std::int64_t>(values.size()); }

    std::span<const Index> row_cols(Index r) const
    {
        return {col_indices.data() + row_offsets[r],
                static_cast<std::size_t>(row_offsets[r + 1] - row_offsets[r])};
    }
    std::span<const T> row_values(Index r) const
    {
        return {values.data() + row_offsets[r],
                static_cast<std::size_t>(row_offsets[r + 1] - row_offsets[r])};
    }

    /// Value at (r, c), zero when the entry is not stored.
    T at(Index r, Index c) const
    {
        auto cs = row_cols(r);
        auto it = std::lower_bound(cs.begin(), cs.end(), c);
        if (it == cs.end() || *it != c)
            return T{0};
        return values[row_offsets[r] + (it - cs.begin())];
    }
};

using SparseMatrix = CsrMatrix<double>;
using IncidenceMatrix = CsrMatrix<int>;

/// Builds a CSR matrix from unordered (row, col, value) entries. Duplicates are
/// summed in insertion order; entries that sum to exactly zero are dropped.
template <typename T>
class TripletBuilder {
public:
    TripletBuilder(Index rows, Index cols) : rows_(rows), cols_(cols) {}

    void add(Index r, Index c, T v)
    {
        if (r < 0 || r >= rows_ || c < 0 || c >= cols_)
            throw Error(ErrorCode::InvalidArgument, "triplet index out of bounds");
        entries_.push_back({r, c, v});
    }

    CsrMatrix<T> build() const
    {
        std::vector<Entry> sorted = entries_;
        std::stable_sort(sorted.begin(), sorted.end(), [](const Entry& a, const Entry& b) {
            return a.r != b.r ? a.r < b.r : a.c < b.c;
        });
        CsrMatrix<T> m;
        m.rows = rows_;
        m.cols = cols_;
        m.row_offsets.assign(static_cast<std::size_t>(rows_) + 1, 0);
        std::size_t i = 0;
        while (i < sorted.size()) {
            std::size_t j = i;
            T sum{0};
            while (j < sorted.size() && sorted[j].r == sorted[i].r && sorted[j].c == sorted[i].c)
                sum += sorted[j++].v;
            if (sum != T{0}) {
                m.col_indices.push_back(sorted[i].c);
                m.values.push_back(sum);
                ++m.row_offsets[sorted[i].r + 1];
            }
            i = j;
        }
        for (Index r = 0; r < rows_; ++r)
            m.row_offsets[r + 1] += m.row_offsets[r];
        return m;
    }

private:
    struct Entry {
        Index r, c;
        T v;
    };
    Index rows_, cols_;
    std::vector<Entry> entries_;
};

template <typename T>
CsrMatrix<T> transpose(const CsrMatrix<T>& a)
{
    CsrMatrix<T> t;
    t.rows = a.cols;
    t.cols = a.rows;
    t.row_offsets.assign(static_cast<std::size_t>(a.cols) + 1, 0);
    for (Index c : a.col_indices)
        ++t.row_offsets[c + 1];
    for (Index r = 0; r < t.rows; ++r)
        t.row_offsets[r + 1] += t.row_offsets[r];
    t.col_indices.resize(a.col_indices.size());
    t.values.resize(a.values.size());
    std::vector<std::int64_t> next(t.row_offsets.begin(), t.row_offsets.end() - 1);
    for (Index r = 0; r < a.rows; ++r) {
        for (auto k = a.row_offsets[r]; k < a.row_offsets[r + 1]; ++k) {
            auto dst = next[a.col_indices[k]]++;
            t.col_indices[dst] = r;
            t.values[dst] = a.values[k];
        }
    }
    return t;
}

/// Exact sparse product a * b (row-by-row accumulation with a dense marker).
template <typename T>
CsrMatrix<T> multiply(const CsrMatrix<T>& a, const CsrMatrix<T>& b)
{
    if (a.cols != b.rows)
        throw Error(ErrorCode::InvalidArgument, "multiply: dimension mismatch");
    CsrMatrix<T> c;
    c.rows = a.rows;
    c.cols = b.cols;
    c.row_offsets.assign(static_cast<std::size_t>(a.rows) + 1, 0);
    std::vector<std::int64_t> marker(static_cast<std::size_t>(b.cols), -1);
    std::vector<T> acc(static_cast<std::size_t>(b.cols), T{0});
    std::vector<Index> touched;
    for (Index r = 0; r < a.rows; ++r) {
        touched.clear();
        for (auto ka = a.row_offsets[r]; ka < a.row_offsets[r + 1]; ++ka) {
            Index k = a.col_indices[ka];
            T av = a.values[ka];
            for (auto kb = b.row_offsets[k]; kb < b.row_offsets[k + 1]; ++kb) {
                Index col = b.col_indices[kb];
                if (marker[col] != r) {
                    marker[col] = r;
                    acc[col] = T{0};
                    touched.push_back(col);
                }
                acc[col] += av * b.values[kb];
            }
        }
        std::sort(touched.begin(), touched.end());
        for (Index col : touched) {
            if (acc[col] != T{0}) {
                c.col_indices.push_back(col);
                c.values.push_back(acc[col]);
            }
        }
        c.row_offsets[r + 1] = static_cast<std::int64_t>(c.values.size());
    }
    return c;
}

/// a * m * b. Symmetric whenever a == transpose(b) and m is symmetric, up to
/// roundoff in the accumulation order.
template <typename T>
CsrMatrix<T> triple_product(const CsrMatrix<T>& a, const CsrMatrix<T>& m, const CsrMatrix<T>& b)
{
    return multiply(multiply(a, m), b);
}

/// y = a * x.
void matvec(const SparseMatrix& a, std::span<const double> x, std::span<double> y);
std::vector<double> matvec(const SparseMatrix& a, std::span<const double> x);
std::vector<double> matvec(const IncidenceMatrix& a, std::span<const double> x);
/// y = transpose(a) * x without forming the transpose.
std::vector<double> matvec_transposed(const IncidenceMatrix& a, std::span<const double> x);

/// Converts an integer incidence matrix to a real one.
SparseMatrix to_real(const IncidenceMatrix& a);

template <typename T>
CsrMatrix<T> identity_matrix(Index n)
{
    CsrMatrix<T> m;
    m.rows = m.cols = n;
    m.row_offsets.resize(static_cast<std::size_t>(n) + 1);
    for (Index i = 0; i <= n; ++i)
        m.row_offsets[i] = i;
    m.col_indices.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i)
        m.col_indices[i] = i;
    m.values.assign(static_cast<std::size_t>(n), T{1});
    return m;
}

template <typename T>
Eigen::MatrixXd to_dense(const CsrMatrix<T>& a)
{
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(a.rows, a.cols);
    for (Index r = 0; r < a.rows; ++r)
        for (auto k = a.row_offsets[r]; k < a.row_offsets[r + 1]; ++k)
            d(r, a.col_indices[k]) = static_cast<double>(a.values[k]);
    return d;
}

/// Coordinate text export, one "i j value" line per stored entry, 1-based.
void write_coordinate(const SparseMatrix& m, std::ostream& out);
void write_coordinate(const SparseMatrix& m, const std::string& path);

} // namespace dualhodge
