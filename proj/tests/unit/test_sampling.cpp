#include <modcma/sampling.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace modcma;
using namespace modcma::sampling;

namespace
{
    // Exact star discrepancy of a 2-d point set over the grid of point coordinates.
    double star_discrepancy_2d(const std::vector<std::array<double, 2>> &pts)
    {
        const std::size_t n = pts.size();
        std::vector<double> xs{1.0}, ys{1.0};
        for (const auto &p : pts)
        {
            xs.push_back(p[0]);
            ys.push_back(p[1]);
        }
        std::sort(xs.begin(), xs.end());
        std::sort(ys.begin(), ys.end());
        xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
        ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

        double worst = 0.0;
        for (double x : xs)
        {
            // sorted y of points left of x (closed / open)
            std::vector<double> closed, open;
            for (const auto &p : pts)
            {
                if (p[0] <= x)
                    closed.push_back(p[1]);
                if (p[0] < x)
                    open.push_back(p[1]);
            }
            std::sort(closed.begin(), closed.end());
            std::sort(open.begin(), open.end());
            for (double y : ys)
            {
                const double vol = x * y;
                const auto c = static_cast<double>(std::upper_bound(closed.begin(), closed.end(), y) - closed.begin());
                const auto o = static_cast<double>(std::lower_bound(open.begin(), open.end(), y) - open.begin());
                worst = std::max({worst, c / static_cast<double>(n) - vol, vol - o / static_cast<double>(n)});
            }
        }
        return worst;
    }

    // Standard normal CDF from erfc, used to check the inverse.
    double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
}

TEST(Gaussian, DeterministicPerSeed)
{
    Rng a(1), b(1);
    EXPECT_EQ(next_gaussian(a, 5), next_gaussian(b, 5));
}

TEST(Gaussian, MomentsOfAMillionDraws)
{
    Rng rng(1);
    const int n = 1000000;
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i)
    {
        const double z = next_gaussian(rng, 1)(0);
        sum += z;
        sq += z * z;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    EXPECT_LE(std::abs(mean), 0.01);
    EXPECT_GE(var, 0.99);
    EXPECT_LE(var, 1.01);
}

TEST(SamplerSpec, RejectsZeroDimension)
{
    SamplerSpec spec;
    spec.dimension = 0;
    EXPECT_THROW(spec.validate(), ConfigError);
    EXPECT_THROW(Sampler(spec, 1), ConfigError);
}

TEST(SamplerSpec, RejectsSobolBeyondTable)
{
    SamplerSpec spec{BaseSampler::sobol, Mirrored::off, false, 22};
    EXPECT_THROW(spec.validate(), ConfigError);
    spec.dimension = 21;
    EXPECT_NO_THROW(spec.validate());
}

TEST(Halton, FirstPointIsHalfAndThird)
{
    const Vector p = halton_point(1, 2);
    EXPECT_EQ(p(0), 0.5);
    EXPECT_DOUBLE_EQ(p(1), 1.0 / 3.0);
}

TEST(Halton, RadicalInverseHandCases)
{
    EXPECT_DOUBLE_EQ(radical_inverse(6, 2), 0.375); // 110b -> 0.011b
    EXPECT_DOUBLE_EQ(radical_inverse(5, 3), 7.0 / 9.0); // 12 in base 3 -> 0.21
    EXPECT_DOUBLE_EQ(radical_inverse(0, 5), 0.0);
}

TEST(Sobol, MatchesReferenceGrayCodeOrder)
{
    // unscrambled Sobol points (Joe-Kuo directions), produced by an external implementation
    const double expected[8][6] = {
        {0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
        {0.5, 0.5, 0.5, 0.5, 0.5, 0.5},
        {0.75, 0.25, 0.25, 0.25, 0.75, 0.75},
        {0.25, 0.75, 0.75, 0.75, 0.25, 0.25},
        {0.375, 0.375, 0.625, 0.875, 0.375, 0.125},
        {0.875, 0.875, 0.125, 0.375, 0.875, 0.625},
        {0.625, 0.125, 0.875, 0.625, 0.625, 0.875},
        {0.125, 0.625, 0.375, 0.125, 0.125, 0.375},
    };
    for (std::uint64_t i = 0; i < 8; ++i)
    {
        const Vector p = sobol_point(i, 6);
        for (int j = 0; j < 6; ++j)
            EXPECT_EQ(p(j), expected[i][j]) << "index " << i << " dim " << j;
    }
}

TEST(Sobol, MatchesReferenceInAllTwentyOneDimensions)
{
    const std::vector<double> p500 = {0.439453125, 0.064453125, 0.345703125, 0.408203125, 0.541015625, 0.939453125,
                                      0.056640625, 0.775390625, 0.533203125, 0.138671875, 0.654296875, 0.517578125,
                                      0.248046875, 0.755859375, 0.556640625, 0.583984375, 0.123046875, 0.318359375,
                                      0.341796875, 0.693359375, 0.349609375};
    const std::vector<double> p1023 = {0.0009765625, 0.7529296875, 0.6123046875, 0.1455078125, 0.1865234375,
                                       0.4384765625, 0.1396484375, 0.6181640625, 0.3447265625, 0.8505859375,
                                       0.6787109375, 0.0361328125, 0.1298828125, 0.6650390625, 0.3623046875,
                                       0.4638671875, 0.3134765625, 0.8759765625, 0.5849609375, 0.3193359375,
                                       0.8662109375};
    const Vector a = sobol_point(500, 21), b = sobol_point(1023, 21);
    for (int j = 0; j < 21; ++j)
    {
        EXPECT_EQ(a(j), p500[j]) << j;
        EXPECT_EQ(b(j), p1023[j]) << j;
    }
}

TEST(Sobol, LowerStarDiscrepancyThanUniform)
{
    std::vector<std::array<double, 2>> sobol, uniform;
    Rng rng(1);
    for (std::uint64_t i = 0; i < 1024; ++i)
    {
        const Vector p = sobol_point(i, 2);
        sobol.push_back({p(0), p(1)});
        uniform.push_back({rng.uniform(), rng.uniform()});
    }
    const double ds = star_discrepancy_2d(sobol);
    const double du = star_discrepancy_2d(uniform);
    EXPECT_LT(ds, du);
    EXPECT_LT(ds, 0.01);
}

TEST(InverseCdf, MedianMapsToZero) { EXPECT_EQ(inverse_normal_cdf(0.5), 0.0); }

TEST(InverseCdf, SymmetricAndMonotone)
{
    double prev = -kInf;
    for (int k = 1; k < 4096; ++k)
    {
        const double u = k / 4096.0;
        const double x = inverse_normal_cdf(u);
        EXPECT_GT(x, prev);
        prev = x;
        EXPECT_NEAR(inverse_normal_cdf(1.0 - u), -x, 1e-12);
    }
}

TEST(InverseCdf, InvertsTheNormalCdf)
{
    for (double u : {1e-10, 1e-6, 0.001, 0.02425, 0.1, 0.3, 0.5, 0.7, 0.97575, 0.999, 1 - 1e-6})
        EXPECT_NEAR(normal_cdf(inverse_normal_cdf(u)), u, 1e-9 * std::max(1.0, u)) << u;
    EXPECT_NEAR(inverse_normal_cdf(0.975), 1.959963984540054, 1e-9);
}

TEST(Quasirandom, HalfCoordinateIsGaussianZero)
{
    const Vector z = next_quasirandom(BaseSampler::sobol, 1, 3);
    EXPECT_EQ(z, Vector::Zero(3));
}

TEST(Quasirandom, SamplerSkipsOriginAndStaysFinite)
{
    for (auto base : {BaseSampler::sobol, BaseSampler::halton})
    {
        Sampler s({base, Mirrored::off, false, 4}, 3);
        for (int i = 0; i < 200; ++i)
            EXPECT_TRUE(s.next().allFinite());
    }
    Sampler h({BaseSampler::halton, Mirrored::off, false, 2}, 3);
    const Vector first = h.next();
    EXPECT_NEAR(first(0), 0.0, 1e-15);
    EXPECT_NEAR(first(1), inverse_normal_cdf(1.0 / 3.0), 1e-15);
}

TEST(Mirror, PairIsExactNegation)
{
    Vector z(2);
    z << 1, -2;
    const auto [a, b] = mirror_pair(z, 3);
    EXPECT_EQ(a.z, z);
    EXPECT_EQ(b.z(0), -1.0);
    EXPECT_EQ(b.z(1), 2.0);
    EXPECT_EQ(a.pair_id, 3);
    EXPECT_EQ(b.pair_id, 3);
    const auto [c, e] = mirror_pair(Vector::Zero(3), 0);
    EXPECT_EQ(c.z, Vector::Zero(3));
    EXPECT_EQ(e.z.norm(), 0.0);
}

TEST(Mirror, PopulationSumsToZero)
{
    for (auto mode : {Mirrored::mirrored, Mirrored::mirrored_pairwise})
        for (auto base : {BaseSampler::gaussian, BaseSampler::sobol, BaseSampler::halton})
            for (bool orth : {false, true})
            {
                Sampler s({base, mode, orth, 5}, 11);
                const auto pop = s.sample(8);
                ASSERT_EQ(pop.size(), 8u);
                Vector sum = Vector::Zero(5);
                for (std::size_t i = 0; i < pop.size(); i += 2)
                {
                    EXPECT_EQ(pop[i].z + pop[i + 1].z, Vector::Zero(5));
                    EXPECT_EQ(pop[i].pair_id, pop[i + 1].pair_id);
                    sum += pop[i].z + pop[i + 1].z;
                }
                EXPECT_EQ(sum, Vector::Zero(5));
            }
}

TEST(Mirror, OddPopulationDropsLastMirror)
{
    Sampler s({BaseSampler::gaussian, Mirrored::mirrored, false, 3}, 1);
    const auto pop = s.sample(7);
    ASSERT_EQ(pop.size(), 7u);
    EXPECT_EQ(pop[6].pair_id, 3);
}

TEST(Orthonormalize, AlreadyOrthogonalIsUnchanged)
{
    Vector a(2), b(2);
    a << 2, 0;
    b << 0, 3;
    const auto out = orthonormalize({a, b}, [] { return Vector::Zero(2).eval(); });
    EXPECT_NEAR((out[0] - a).norm(), 0.0, 1e-15);
    EXPECT_NEAR((out[1] - b).norm(), 0.0, 1e-15);
}

TEST(Orthonormalize, HandGramSchmidt)
{
    Vector a(2), b(2);
    a << 1, 0;
    b << 1, 1;
    const auto out = orthonormalize({a, b}, [] { return Vector::Zero(2).eval(); });
    EXPECT_NEAR(out[1](0), 0.0, 1e-15);
    EXPECT_NEAR(out[1](1), std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(out[0].dot(out[1]), 0.0, 1e-15);
}

TEST(Orthonormalize, MoreVectorsThanDimensions)
{
    Rng rng(5);
    std::vector<Vector> batch;
    for (int i = 0; i < 8; ++i)
        batch.push_back(rng.normal_vector(5));
    const auto out = orthonormalize(batch, [&] { return rng.normal_vector(5); });
    for (int i = 0; i < 5; ++i)
    {
        EXPECT_NEAR(out[i].norm(), batch[i].norm(), 1e-12 * batch[i].norm());
        for (int j = 0; j < i; ++j)
            EXPECT_LE(std::abs(out[i].dot(out[j])), 1e-10);
    }
    for (int i = 5; i < 8; ++i)
        EXPECT_EQ(out[i], batch[i]);
}

TEST(Orthonormalize, DependentVectorIsResampled)
{
    Vector a(3), b(3), fresh(3);
    a << 1, 2, 3;
    b = 2.0 * a;
    fresh << 0, 0, 1;
    int calls = 0;
    const auto out = orthonormalize({a, b}, [&] {
        ++calls;
        return fresh;
    });
    EXPECT_EQ(calls, 1);
    EXPECT_NEAR(out[0].dot(out[1]), 0.0, 1e-12);
    EXPECT_NEAR(out[1].norm(), 1.0, 1e-12);
}

TEST(Orthonormalize, GivesUpAfterTenResamples)
{
    Vector a(2);
    a << 1, 1;
    int calls = 0;
    EXPECT_THROW(orthonormalize({a, a}, [&] {
                     ++calls;
                     return a;
                 }),
                 std::runtime_error);
    EXPECT_EQ(calls, kMaxResamples);
}

TEST(Sampler, OrthogonalBatchesOfFiveInFiveDimensions)
{
    for (auto base : {BaseSampler::gaussian, BaseSampler::sobol, BaseSampler::halton})
    {
        Sampler s({base, Mirrored::off, true, 5}, 9);
        for (int rep = 0; rep < 20; ++rep)
        {
            const auto pop = s.sample(5);
            for (int i = 0; i < 5; ++i)
                for (int j = 0; j < i; ++j)
                    EXPECT_LE(std::abs(pop[i].z.dot(pop[j].z)), 1e-10);
        }
    }
}

TEST(Sampler, DeterministicStreams)
{
    for (auto base : {BaseSampler::gaussian, BaseSampler::sobol, BaseSampler::halton})
    {
        const SamplerSpec spec{base, Mirrored::mirrored, true, 4};
        Sampler a(spec, 77), b(spec, 77);
        for (int rep = 0; rep < 5; ++rep)
        {
            const auto x = a.sample(9), y = b.sample(9);
            for (std::size_t i = 0; i < x.size(); ++i)
            {
                EXPECT_EQ(x[i].z, y[i].z);
                EXPECT_EQ(x[i].pair_id, y[i].pair_id);
            }
        }
    }
}
