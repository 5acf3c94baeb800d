#include "dualhodge/sparse.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>

namespace dualhodge {

namespace {

void check_size(std::size_t n, Index expected)
{
    if (n != static_cast<std::size_t>(expected))
        throw Error(ErrorCode::InvalidArgument, "matvec: dimension mismatch");
}

} // namespace

void matvec(const SparseMatrix& a, std::span<const double> x, std::span<double> y)
{
    check_size(x.size(), a.cols);
    check_size(y.size(), a.rows);
    const auto* off = a.row_offsets.data();
    const auto* col = a.col_indices.data();
    const auto* val = a.values.data();
    for (Index r = 0; r < a.rows; ++r) {
        double s = 0.0;
        for (auto k = off[r]; k < off[r + 1]; ++k)
            s += val[k] * x[col[k]];
        y[r] = s;
    }
}

std::vector<double> matvec(const SparseMatrix& a, std::span<const double> x)
{
    std::vector<double> y(static_cast<std::size_t>(a.rows));
    matvec(a, x, y);
    return y;
}

std::vector<double> matvec(const IncidenceMatrix& a, std::span<const double> x)
{
    check_size(x.size(), a.cols);
    std::vector<double> y(static_cast<std::size_t>(a.rows), 0.0);
    for (Index r = 0; r < a.rows; ++r) {
        double s = 0.0;
        for (auto k = a.row_offsets[r]; k < a.row_offsets[r + 1]; ++k)
            s += a.values[k] * x[a.col_indices[k]];
        y[r] = s;
    }
    return y;
}

std::vector<double> matvec_transposed(const IncidenceMatrix& a, std::span<const double> x)
{
    check_size(x.size(), a.rows);
    std::vector<double> y(static_cast<std::size_t>(a.cols), 0.0);
    for (Index r = 0; r < a.rows; ++r)
        for (auto k = a.row_offsets[r]; k < a.row_offsets[r + 1]; ++k)
            y[a.col_indices[k]] += a.values[k] * x[r];
    return y;
}

SparseMatrix to_real(const IncidenceMatrix& a)
{
    SparseMatrix m;
    m.rows = a.rows;
    m.cols = a.cols;
    m.row_offsets = a.row_offsets;
    m.col_indices = a.col_indices;
    m.values.assign(a.values.begin(), a.values.end());
    return m;
}

void write_coordinate(const SparseMatrix& m, std::ostream& out)
{
    out << std::setprecision(17);
    for (Index r = 0; r < m.rows; ++r)
        for (auto k = m.row_offsets[r]; k < m.row_offsets[r + 1]; ++k)
            out << r + 1 << ' ' << m.col_indices[k] + 1 << ' ' << m.values[k] << '\n';
}

void write_coordinate(const SparseMatrix& m, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
    write_coordinate(m, out);
    if (!out)
        throw Error(ErrorCode::Io, "write to '" + path + "' failed");
}

} // namespace dualhodge
