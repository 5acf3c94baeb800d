#include <cmath>
#include <numeric>

#include "dualhodge/solver.hpp"

namespace dualhodge {

namespace {

double dot(std::span<const double> a, std::span<const double> b)
{
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

} // namespace

CgResult conjugate_gradient(const SparseMatrix& A, std::span<const double> b, std::span<double> x,
                            double tol, int max_iter)
{
    const auto n = static_cast<std::size_t>(A.rows);
    if (A.rows != A.cols || b.size() != n || x.size() != n)
        throw Error(ErrorCode::InvalidArgument, "conjugate_gradient: dimension mismatch");
    CgResult res;
    const double bnorm = std::sqrt(dot(b, b));
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return res;
    }

    std::vector<double> inv_diag(n);
    for (Index i = 0; i < A.rows; ++i) {
        double d = A.at(i, i);
        if (!(d > 0))
            throw Error(ErrorCode::NotPositiveDefinite,
                        "nonpositive diagonal entry in row " + std::to_string(i));
        inv_diag[i] = 1.0 / d;
    }

    std::vector<double> r(n), z(n), p(n), q(n);
    auto true_residual = [&] {
        matvec(A, x, q);
        for (std::size_t i = 0; i < n; ++i)
            r[i] = b[i] - q[i];
        return std::sqrt(dot(r, r));
    };

    double rnorm = true_residual();
    double restart_norm = rnorm;
    while (true) {
        // (Re)start from the true residual.
        for (std::size_t i = 0; i < n; ++i)
            z[i] = inv_diag[i] * r[i];
        p = z;
        double rz = dot(r, z);
        while (rnorm > tol * bnorm) {
            if (res.iterations >= max_iter)
                throw Error(ErrorCode::NotConverged,
                            "conjugate gradients did not reach relative residual " +
                                std::to_string(tol) + " in " + std::to_string(max_iter) +
                                " iterations (reached " + std::to_string(rnorm / bnorm) + ")");
            matvec(A, p, q);
            const double pq = dot(p, q);
            if (!(pq > 0))
                throw Error(ErrorCode::NotPositiveDefinite, "system matrix is not positive definite");
            const double alpha = rz / pq;
            for (std::size_t i = 0; i < n; ++i) {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            for (std::size_t i = 0; i < n; ++i)
                z[i] = inv_diag[i] * r[i];
            const double rz_next = dot(r, z);
            const double beta = rz_next / rz;
            rz = rz_next;
            for (std::size_t i = 0; i < n; ++i)
                p[i] = z[i] + beta * p[i];
            rnorm = std::sqrt(dot(r, r));
            ++res.iterations;
        }
        // The recurrence can drift below the attainable accuracy: accept the
        // true residual if it meets the target, restart while it still improves.
        const double before = restart_norm;
        rnorm = true_residual();
        if (rnorm <= tol * bnorm || rnorm > 0.5 * before)
            break;
        restart_norm = rnorm;
    }
    res.relative_residual = rnorm / bnorm;
    return res;
}

} // namespace dualhodge
