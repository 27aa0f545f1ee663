#pragma once

#include "common.hpp"

#include <algorithm>

namespace modcma::linalg
{
    struct EigenDecomposition
    {
        Matrix vectors;  ///< columns are eigenvectors
        Vector values;   ///< unclamped eigenvalues, same order as columns
        int sweeps = 0;
        bool converged = false;
    };

    /**
     * Cyclic Jacobi rotation solver for a symmetric matrix. Sweeps continue
     * until the off-diagonal Frobenius norm falls below tol times the
     * Frobenius norm of the input.
     */
    inline EigenDecomposition jacobi_eigen(const Matrix &sym, double tol = 1e-12, int max_sweeps = 100)
    {
        const Eigen::Index n = sym.rows();
        Matrix a = 0.5 * (sym + sym.transpose());
        Matrix v = Matrix::Identity(n, n);
        const double scale = std::max(a.norm(), std::numeric_limits<double>::min());

        auto off_norm = [&] {
            double s = 0.0;
            for (Eigen::Index p = 0; p < n; ++p)
                for (Eigen::Index q = p + 1; q < n; ++q)
                    s += 2.0 * a(p, q) * a(p, q);
            return std::sqrt(s);
        };

        EigenDecomposition out;
        for (; out.sweeps < max_sweeps; ++out.sweeps)
        {
            if (off_norm() <= tol * scale)
            {
                out.converged = true;
                break;
            }
            for (Eigen::Index p = 0; p < n - 1; ++p)
            {
                for (Eigen::Index q = p + 1; q < n; ++q)
                {
                    const double apq = a(p, q);
                    if (apq == 0.0)
                        continue;
                    const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                    const double t = (theta >= 0 ? 1.0 : -1.0) /
                                     (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                    const double c = 1.0 / std::sqrt(t * t + 1.0);
                    const double s = t * c;

                    for (Eigen::Index k = 0; k < n; ++k)
                    {
                        const double akp = a(k, p), akq = a(k, q);
                        a(k, p) = c * akp - s * akq;
                        a(k, q) = s * akp + c * akq;
                    }
                    for (Eigen::Index k = 0; k < n; ++k)
                    {
                        const double apk = a(p, k), aqk = a(q, k);
                        a(p, k) = c * apk - s * aqk;
                        a(q, k) = s * apk + c * aqk;
                    }
                    a(p, q) = a(q, p) = 0.0;
                    for (Eigen::Index k = 0; k < n; ++k)
                    {
                        const double vkp = v(k, p), vkq = v(k, q);
                        v(k, p) = c * vkp - s * vkq;
                        v(k, q) = s * vkp + c * vkq;
                    }
                }
            }
        }
        if (!out.converged)
            out.converged = off_norm() <= tol * scale;
        out.values = a.diagonal();
        out.vectors = std::move(v);
        return out;
    }

    /// Largest over smallest eigenvalue; infinite when the smallest is not positive.
    inline double condition_number(const Vector &eigenvalues)
    {
        const double lo = eigenvalues.minCoeff();
        return lo > 0 ? eigenvalues.maxCoeff() / lo : kInf;
    }
}
