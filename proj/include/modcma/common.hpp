#pragma once

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace modcma
{
    using Vector = Eigen::VectorXd;
    using Matrix = Eigen::MatrixXd;

    inline constexpr double kInf = std::numeric_limits<double>::infinity();

    /// Raised when a Configuration (or a value derived from one) is malformed.
    struct ConfigError : std::invalid_argument
    {
        using std::invalid_argument::invalid_argument;
    };

    /// Raised for unknown benchmark function identifiers.
    struct UnknownFunction : std::invalid_argument
    {
        using std::invalid_argument::invalid_argument;
    };

    /// SplitMix64 finalizer, used to derive independent stream seeds.
    constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream = 0) noexcept
    {
        std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /**
     * Seeded random stream. The engine is std::mt19937_64, whose output sequence
     * is fixed by the standard; uniform and normal variates are derived here
     * rather than through <random> distributions, whose algorithms are
     * implementation-defined.
     */
    class Rng
    {
    public:
        explicit Rng(std::uint64_t seed = 1) : engine_(seed) {}

        std::uint64_t bits() { return engine_(); }

        /// Uniform in [0, 1) with 53 random bits.
        double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

        double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

        /// Uniform integer in [0, n).
        std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

        /// Standard normal via Box-Muller; the second variate is cached.
        double normal()
        {
            if (has_spare_)
            {
                has_spare_ = false;
                return spare_;
            }
            const double u1 = 1.0 - uniform();
            const double u2 = uniform();
            const double r = std::sqrt(-2.0 * std::log(u1));
            const double theta = 2.0 * 3.14159265358979323846 * u2;
            spare_ = r * std::sin(theta);
            has_spare_ = true;
            return r * std::cos(theta);
        }

        Vector normal_vector(Eigen::Index d)
        {
            Vector z(d);
            for (Eigen::Index i = 0; i < d; ++i)
                z(i) = normal();
            return z;
        }

    private:
        std::mt19937_64 engine_;
        double spare_ = 0.0;
        bool has_spare_ = false;
    };

    /// Shortest decimal representation that round-trips to the same double.
    inline std::string format_double(double v)
    {
        if (std::isnan(v))
            return "nan";
        if (std::isinf(v))
            return v > 0 ? "inf" : "-inf";
        char buf[64];
        const auto res = std::to_chars(buf, buf + sizeof(buf), v);
        return {buf, res.ptr};
    }

    inline double expected_norm(std::size_t d)
    {
        const double n = static_cast<double>(d);
        return std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
    }
}
