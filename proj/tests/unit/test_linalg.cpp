#include <modcma/linalg.hpp>

#include <gtest/gtest.h>

using namespace modcma;

namespace
{
    Matrix random_spd(Eigen::Index n, Rng &rng, double spread)
    {
        Matrix q(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            q.col(i) = rng.normal_vector(n);
        Eigen::HouseholderQR<Matrix> qr(q);
        const Matrix orth = qr.householderQ();
        Vector ev(n);
        for (Eigen::Index i = 0; i < n; ++i)
            ev(i) = std::pow(10.0, spread * rng.uniform());
        return orth * ev.asDiagonal() * orth.transpose();
    }
}

TEST(Jacobi, DiagonalInputIsImmediate)
{
    Matrix a = Vector::LinSpaced(4, 1.0, 4.0).asDiagonal();
    const auto e = linalg::jacobi_eigen(a);
    EXPECT_TRUE(e.converged);
    EXPECT_EQ(e.values, Vector::LinSpaced(4, 1.0, 4.0));
}

TEST(Jacobi, TwoByTwoClosedForm)
{
    Matrix a(2, 2);
    a << 2, 1, 1, 2;
    auto e = linalg::jacobi_eigen(a);
    std::vector<double> v(e.values.data(), e.values.data() + 2);
    std::sort(v.begin(), v.end());
    EXPECT_NEAR(v[0], 1.0, 1e-14);
    EXPECT_NEAR(v[1], 3.0, 1e-14);
}

TEST(Jacobi, ReconstructsAgainstReferenceSolver)
{
    Rng rng(3);
    for (Eigen::Index n : {2, 3, 5, 10, 20})
        for (double spread : {0.0, 3.0, 10.0})
        {
            const Matrix a = random_spd(n, rng, spread);
            const auto e = linalg::jacobi_eigen(a);
            ASSERT_TRUE(e.converged);
            const Matrix rec = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
            EXPECT_LE((rec - a).norm(), 1e-10 * a.norm());
            EXPECT_LE((e.vectors.transpose() * e.vectors - Matrix::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-12);

            Eigen::SelfAdjointEigenSolver<Matrix> ref(a);
            std::vector<double> mine(e.values.data(), e.values.data() + n);
            std::sort(mine.begin(), mine.end());
            for (Eigen::Index i = 0; i < n; ++i)
                EXPECT_NEAR(mine[static_cast<std::size_t>(i)], ref.eigenvalues()(i), 1e-10 * ref.eigenvalues().maxCoeff());
        }
}

TEST(Jacobi, ConditionNumber)
{
    Vector ev(3);
    ev << 1.0, 10.0, 1e15;
    EXPECT_DOUBLE_EQ(linalg::condition_number(ev), 1e15);
}
