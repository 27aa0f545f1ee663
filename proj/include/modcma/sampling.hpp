#pragma once

#include "common.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace modcma::sampling
{
    enum class BaseSampler
    {
        gaussian,
        sobol,
        halton
    };

    enum class Mirrored
    {
        off,
        mirrored,
        mirrored_pairwise
    };

    inline constexpr std::size_t kMaxSobolDimension = 21;
    inline constexpr std::array<unsigned, 40> kPrimes = {
        2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
        73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173};
    inline constexpr std::size_t kMaxHaltonDimension = kPrimes.size();

    /**
     * Inverse of the standard normal CDF. Acklam's rational approximation
     * followed by one Halley step against erfc, giving close to full double
     * precision on (0, 1).
     */
    inline double inverse_normal_cdf(double u)
    {
        if (!(u > 0.0 && u < 1.0))
            return u <= 0.0 ? -kInf : kInf;
        if (u > 0.5)
            return -inverse_normal_cdf(1.0 - u);
        if (u == 0.5)
            return 0.0;

        static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                       1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00};
        static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                       6.680131188771972e+01, -1.328068155288572e+01};
        static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                       -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00};
        static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                       3.754408661907416e+00};

        double x;
        if (u < 0.02425)
        {
            const double q = std::sqrt(-2.0 * std::log(u));
            x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
                ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
        }
        else
        {
            const double q = u - 0.5;
            const double r = q * q;
            x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
                (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
        }
        const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - u;
        const double h = e * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(0.5 * x * x);
        return x - h / (1.0 + 0.5 * x * h);
    }

    inline double radical_inverse(std::uint64_t index, unsigned base)
    {
        double result = 0.0;
        double f = 1.0 / base;
        while (index > 0)
        {
            result += f * static_cast<double>(index % base);
            index /= base;
            f /= base;
        }
        return result;
    }

    inline Vector halton_point(std::uint64_t index, std::size_t d)
    {
        if (d > kMaxHaltonDimension)
            throw ConfigError("halton sequence supports at most 40 dimensions");
        Vector p(static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < d; ++i)
            p(static_cast<Eigen::Index>(i)) = radical_inverse(index, kPrimes[i]);
        return p;
    }

    namespace detail
    {
        struct SobolPoly
        {
            unsigned degree;
            unsigned coeffs;
            std::array<unsigned, 7> m;
        };

        // Joe & Kuo (new-joe-kuo-6.21201), dimensions 2..21.
        inline constexpr std::array<SobolPoly, kMaxSobolDimension - 1> kSobolPolys = {{
            {1, 0, {1}},
            {2, 1, {1, 3}},
            {3, 1, {1, 3, 1}},
            {3, 2, {1, 1, 1}},
            {4, 1, {1, 1, 3, 3}},
            {4, 4, {1, 3, 5, 13}},
            {5, 2, {1, 1, 5, 5, 17}},
            {5, 4, {1, 1, 5, 5, 5}},
            {5, 7, {1, 1, 7, 11, 19}},
            {5, 11, {1, 1, 5, 1, 1}},
            {5, 13, {1, 1, 1, 3, 11}},
            {5, 14, {1, 3, 5, 5, 31}},
            {6, 1, {1, 3, 3, 9, 7, 49}},
            {6, 13, {1, 1, 1, 15, 21, 21}},
            {6, 16, {1, 3, 1, 13, 27, 49}},
            {6, 19, {1, 1, 1, 15, 7, 5}},
            {6, 22, {1, 3, 1, 15, 13, 25}},
            {6, 25, {1, 1, 5, 5, 19, 61}},
            {7, 1, {1, 3, 7, 11, 23, 15, 103}},
            {7, 4, {1, 3, 7, 13, 13, 15, 69}},
        }};

        inline constexpr unsigned kSobolBits = 32;

        using DirectionTable = std::array<std::array<std::uint32_t, kSobolBits>, kMaxSobolDimension>;

        inline const DirectionTable &sobol_directions()
        {
            static const DirectionTable table = [] {
                DirectionTable v{};
                for (unsigned k = 0; k < kSobolBits; ++k)
                    v[0][k] = 1u << (31 - k);
                for (std::size_t j = 1; j < kMaxSobolDimension; ++j)
                {
                    const auto &poly = kSobolPolys[j - 1];
                    const unsigned s = poly.degree;
                    for (unsigned k = 0; k < s; ++k)
                        v[j][k] = poly.m[k] << (31 - k);
                    for (unsigned k = s; k < kSobolBits; ++k)
                    {
                        std::uint32_t value = v[j][k - s] ^ (v[j][k - s] >> s);
                        for (unsigned l = 1; l < s; ++l)
                            if ((poly.coeffs >> (s - 1 - l)) & 1u)
                                value ^= v[j][k - l];
                        v[j][k] = value;
                    }
                }
                return v;
            }();
            return table;
        }
    }

    /// Sobol point in Gray-code (Antonov-Saleev) order; index 0 is the origin.
    inline Vector sobol_point(std::uint64_t index, std::size_t d)
    {
        if (d > kMaxSobolDimension)
            throw ConfigError("sobol sequence supports at most 21 dimensions");
        const auto &v = detail::sobol_directions();
        const std::uint64_t gray = index ^ (index >> 1);
        Vector p(static_cast<Eigen::Index>(d));
        for (std::size_t j = 0; j < d; ++j)
        {
            std::uint32_t x = 0;
            for (unsigned k = 0; k < detail::kSobolBits; ++k)
                if ((gray >> k) & 1u)
                    x ^= v[j][k];
            p(static_cast<Eigen::Index>(j)) = static_cast<double>(x) * 0x1.0p-32;
        }
        return p;
    }

    inline Vector unit_cube_point(BaseSampler seq, std::uint64_t index, std::size_t d)
    {
        return seq == BaseSampler::sobol ? sobol_point(index, d) : halton_point(index, d);
    }

    inline Vector next_gaussian(Rng &rng, std::size_t d)
    {
        return rng.normal_vector(static_cast<Eigen::Index>(d));
    }

    /// Quasi-random point mapped coordinate-wise through the inverse normal CDF.
    inline Vector next_quasirandom(BaseSampler seq, std::uint64_t index, std::size_t d)
    {
        Vector u = unit_cube_point(seq, index, d);
        return u.unaryExpr([](double ui) { return inverse_normal_cdf(ui); });
    }

    struct SamplerSpec
    {
        BaseSampler base = BaseSampler::gaussian;
        Mirrored mirrored = Mirrored::off;
        bool orthogonal = false;
        std::size_t dimension = 1;

        void validate() const
        {
            if (dimension < 1)
                throw ConfigError("sampler dimension must be at least 1");
            if (base == BaseSampler::sobol && dimension > kMaxSobolDimension)
                throw ConfigError("sobol sampler supports at most 21 dimensions");
            if (base == BaseSampler::halton && dimension > kMaxHaltonDimension)
                throw ConfigError("halton sampler supports at most 40 dimensions");
        }
    };

    struct BaseSample
    {
        Vector z;
        std::optional<int> pair_id;
    };

    inline std::pair<BaseSample, BaseSample> mirror_pair(const Vector &z, int pair_id)
    {
        return {BaseSample{z, pair_id}, BaseSample{-z, pair_id}};
    }

    inline constexpr double kDependenceTolerance = 1e-12;
    inline constexpr int kMaxResamples = 10;

    /**
     * Gram-Schmidt over the first min(k, d) vectors, rescaling each output to
     * the norm of its input. Vectors beyond d pass through. A vector whose
     * residual vanishes is replaced by `resample()` (at most kMaxResamples times).
     */
    inline std::vector<Vector> orthonormalize(std::vector<Vector> batch, const std::function<Vector()> &resample)
    {
        if (batch.empty())
            return batch;
        const auto d = static_cast<std::size_t>(batch.front().size());
        const std::size_t n = std::min(batch.size(), d);
        std::vector<Vector> basis;
        basis.reserve(n);

        for (std::size_t i = 0; i < n; ++i)
        {
            for (int attempt = 0;; ++attempt)
            {
                const double norm = batch[i].norm();
                Vector r = batch[i];
                // two passes of modified Gram-Schmidt
                for (int pass = 0; pass < 2; ++pass)
                    for (const auto &u : basis)
                        r -= r.dot(u) * u;
                const double rn = r.norm();
                if (norm >= kDependenceTolerance && rn >= kDependenceTolerance)
                {
                    basis.push_back(r / rn);
                    batch[i] = basis.back() * norm;
                    break;
                }
                if (attempt == kMaxResamples)
                    throw std::runtime_error("orthonormalize: linearly dependent sample after 10 resamples");
                batch[i] = resample();
            }
        }
        return batch;
    }

    /**
     * Stateful base-vector stream for one run. Quasi-random streams start at
     * index 1; points with a coordinate equal to 0 are skipped.
     */
    class Sampler
    {
    public:
        Sampler(SamplerSpec spec, std::uint64_t seed) : spec_(spec), rng_(seed)
        {
            spec_.validate();
        }

        const SamplerSpec &spec() const { return spec_; }
        std::size_t dimension() const { return spec_.dimension; }

        Vector gaussian() { return next_gaussian(rng_, spec_.dimension); }

        Vector next()
        {
            if (spec_.base == BaseSampler::gaussian)
                return gaussian();
            for (;;)
            {
                const std::uint64_t index = next_index_++;
                Vector u = unit_cube_point(spec_.base, index, spec_.dimension);
                if ((u.array() <= 0.0).any() || (u.array() >= 1.0).any())
                    continue;
                return u.unaryExpr([](double ui) { return inverse_normal_cdf(ui); });
            }
        }

        /// n base samples with mirroring and orthogonalization per spec.
        std::vector<BaseSample> sample(std::size_t n)
        {
            const bool mirrored = spec_.mirrored != Mirrored::off;
            const std::size_t draws = mirrored ? (n + 1) / 2 : n;

            std::vector<Vector> base;
            base.reserve(draws);
            for (std::size_t i = 0; i < draws; ++i)
                base.push_back(next());
            if (spec_.orthogonal)
                base = orthonormalize(std::move(base), [this] { return gaussian(); });

            std::vector<BaseSample> out;
            out.reserve(n);
            for (std::size_t i = 0; i < draws && out.size() < n; ++i)
            {
                if (!mirrored)
                {
                    out.push_back({std::move(base[i]), std::nullopt});
                    continue;
                }
                auto [a, b] = mirror_pair(base[i], static_cast<int>(i));
                out.push_back(std::move(a));
                if (out.size() < n)
                    out.push_back(std::move(b));
            }
            return out;
        }

    private:
        SamplerSpec spec_;
        Rng rng_;
        std::uint64_t next_index_ = 1;
    };
}
