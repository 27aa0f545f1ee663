#pragma once

#include "boundary.hpp"
#include "common.hpp"

#include <array>
#include <string>
#include <string_view>

namespace modcma::benchmarks
{
    enum class Function
    {
        sphere,
        sep_ellipsoid,
        sep_rastrigin,
        linear_slope,
        attractive_sector,
        rosenbrock,
        rot_ellipsoid,
        bent_cigar,
        sharp_ridge,
        different_powers,
        rot_rastrigin,
        schaffers10
    };

    struct FunctionInfo
    {
        Function fid;
        std::string_view name;
        bool rotated;
    };

    inline constexpr std::array<FunctionInfo, 12> kSuite = {{
        {Function::sphere, "sphere", false},
        {Function::sep_ellipsoid, "sep_ellipsoid", false},
        {Function::sep_rastrigin, "sep_rastrigin", false},
        {Function::linear_slope, "linear_slope", false},
        {Function::attractive_sector, "attractive_sector", true},
        {Function::rosenbrock, "rosenbrock", false},
        {Function::rot_ellipsoid, "rot_ellipsoid", true},
        {Function::bent_cigar, "bent_cigar", true},
        {Function::sharp_ridge, "sharp_ridge", true},
        {Function::different_powers, "different_powers", true},
        {Function::rot_rastrigin, "rot_rastrigin", true},
        {Function::schaffers10, "schaffers10", true},
    }};

    inline constexpr std::size_t kMaxDimension = 40;
    inline constexpr double kBound = 5.0;

    inline const FunctionInfo &info(Function fid)
    {
        for (const auto &f : kSuite)
            if (f.fid == fid)
                return f;
        throw UnknownFunction("unknown function id");
    }

    inline std::string_view to_string(Function fid) { return info(fid).name; }

    inline Function parse_function(std::string_view name)
    {
        for (const auto &f : kSuite)
            if (f.name == name)
                return f.fid;
        throw UnknownFunction("unknown function '" + std::string(name) + "'");
    }

    namespace raw
    {
        inline double conditioning(std::size_t i, std::size_t d, double base)
        {
            return d == 1 ? 1.0 : std::pow(base, static_cast<double>(i) / static_cast<double>(d - 1));
        }

        inline double sphere(const Vector &z) { return z.squaredNorm(); }

        inline double ellipsoid(const Vector &z)
        {
            const auto d = static_cast<std::size_t>(z.size());
            double f = 0.0;
            for (std::size_t i = 0; i < d; ++i)
                f += conditioning(i, d, 1e6) * z(static_cast<Eigen::Index>(i)) * z(static_cast<Eigen::Index>(i));
            return f;
        }

        inline double rastrigin(const Vector &z)
        {
            constexpr double two_pi = 2.0 * 3.14159265358979323846;
            double f = 0.0;
            for (Eigen::Index i = 0; i < z.size(); ++i)
                f += z(i) * z(i) - 10.0 * std::cos(two_pi * z(i));
            return f + 10.0 * static_cast<double>(z.size());
        }

        /// z already clamped; slopes s_i from the optimum's signs.
        inline double linear_slope(const Vector &z, const Vector &x_opt)
        {
            const auto d = static_cast<std::size_t>(z.size());
            double f = 0.0;
            for (std::size_t i = 0; i < d; ++i)
            {
                const auto k = static_cast<Eigen::Index>(i);
                const double s = (x_opt(k) > 0 ? 1.0 : -1.0) * conditioning(i, d, 10.0);
                f += kBound * std::abs(s) - s * z(k);
            }
            return f;
        }

        inline double attractive_sector(const Vector &z, const Vector &x_opt)
        {
            double f = 0.0;
            for (Eigen::Index i = 0; i < z.size(); ++i)
            {
                const double s = z(i) * x_opt(i) > 0 ? 100.0 : 1.0;
                f += (s * z(i)) * (s * z(i));
            }
            return std::pow(f, 0.9);
        }

        inline double rosenbrock(const Vector &z)
        {
            const double scale = std::max(1.0, std::sqrt(static_cast<double>(z.size())) / 8.0);
            const Vector y = (scale * z).array() + 1.0;
            double f = 0.0;
            for (Eigen::Index i = 0; i + 1 < y.size(); ++i)
                f += 100.0 * std::pow(y(i) * y(i) - y(i + 1), 2) + std::pow(y(i) - 1.0, 2);
            return f;
        }

        inline double bent_cigar(const Vector &z)
        {
            return z(0) * z(0) + 1e6 * z.tail(z.size() - 1).squaredNorm();
        }

        inline double sharp_ridge(const Vector &z)
        {
            return z(0) * z(0) + 100.0 * z.tail(z.size() - 1).norm();
        }

        inline double different_powers(const Vector &z)
        {
            const auto d = static_cast<std::size_t>(z.size());
            double f = 0.0;
            for (std::size_t i = 0; i < d; ++i)
                f += std::pow(std::abs(z(static_cast<Eigen::Index>(i))),
                              2.0 + 4.0 * static_cast<double>(i) / static_cast<double>(d - 1));
            return std::sqrt(f);
        }

        /// Schaffer F7 after a sqrt(10)-conditioning of the rotated input.
        inline double schaffers10(const Vector &z)
        {
            const auto d = static_cast<std::size_t>(z.size());
            Vector y(z.size());
            for (std::size_t i = 0; i < d; ++i)
                y(static_cast<Eigen::Index>(i)) = conditioning(i, d, std::sqrt(10.0)) * z(static_cast<Eigen::Index>(i));
            double acc = 0.0;
            for (Eigen::Index i = 0; i + 1 < y.size(); ++i)
            {
                const double s = std::sqrt(y(i) * y(i) + y(i + 1) * y(i + 1));
                acc += std::sqrt(s) + std::sqrt(s) * std::pow(std::sin(50.0 * std::pow(s, 0.2)), 2);
            }
            acc /= static_cast<double>(d - 1);
            return acc * acc;
        }
    }

    inline Matrix random_rotation(std::size_t d, Rng &rng)
    {
        const auto n = static_cast<Eigen::Index>(d);
        Matrix g(n, n);
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < n; ++i)
                g(i, j) = rng.normal();
        // modified Gram-Schmidt on the columns
        Matrix q = g;
        for (Eigen::Index j = 0; j < n; ++j)
        {
            for (int pass = 0; pass < 2; ++pass)
                for (Eigen::Index k = 0; k < j; ++k)
                    q.col(j) -= q.col(k).dot(q.col(j)) * q.col(k);
            q.col(j) /= q.col(j).norm();
        }
        return q;
    }

    /**
     * One seeded instance: shifted optimum, offset, and (for rotated functions)
     * an orthogonal transform. Only the evaluation counter is mutable.
     */
    class ProblemInstance
    {
    public:
        ProblemInstance(Function fid, std::size_t d, std::uint64_t iid)
            : fid_(fid), d_(d), iid_(iid), box_(boundary::Box::uniform(d < 1 ? 1 : d, -kBound, kBound))
        {
            if (d < 2 || d > kMaxDimension)
                throw std::invalid_argument("dimension must lie in [2, 40]");
            const auto n = static_cast<Eigen::Index>(d);
            Rng rng(mix_seed(iid, 1000 + static_cast<std::uint64_t>(fid) * 64 + d));

            x_opt_ = Vector(n);
            for (Eigen::Index i = 0; i < n; ++i)
                x_opt_(i) = rng.uniform(-4.0, 4.0);
            if (fid == Function::linear_slope)
                x_opt_ = x_opt_.unaryExpr([](double v) { return v >= 0 ? kBound : -kBound; });
            f_opt_ = rng.uniform(-100.0, 100.0);
            rotation_ = info(fid).rotated ? random_rotation(d, rng) : Matrix::Identity(n, n);
        }

        Function fid() const { return fid_; }
        std::size_t dimension() const { return d_; }
        std::uint64_t iid() const { return iid_; }
        const Vector &x_opt() const { return x_opt_; }
        double f_opt() const { return f_opt_; }
        const Matrix &rotation() const { return rotation_; }
        const boundary::Box &box() const { return box_; }
        std::size_t evaluations() const { return evals_; }

        /// Transformed coordinates fed to the raw function.
        Vector transform(const Vector &x) const
        {
            if (fid_ == Function::linear_slope)
            {
                Vector z = x;
                for (Eigen::Index i = 0; i < z.size(); ++i)
                    if (x_opt_(i) * x(i) >= kBound * kBound)
                        z(i) = x_opt_(i);
                return z;
            }
            return rotation_ * (x - x_opt_);
        }

        double raw_value(const Vector &z) const
        {
            switch (fid_)
            {
            case Function::sphere: return raw::sphere(z);
            case Function::sep_ellipsoid: return raw::ellipsoid(z);
            case Function::sep_rastrigin: return raw::rastrigin(z);
            case Function::linear_slope: return raw::linear_slope(z, x_opt_);
            case Function::attractive_sector: return raw::attractive_sector(z, x_opt_);
            case Function::rosenbrock: return raw::rosenbrock(z);
            case Function::rot_ellipsoid: return raw::ellipsoid(z);
            case Function::bent_cigar: return raw::bent_cigar(z);
            case Function::sharp_ridge: return raw::sharp_ridge(z);
            case Function::different_powers: return raw::different_powers(z);
            case Function::rot_rastrigin: return raw::rastrigin(z);
            case Function::schaffers10: return raw::schaffers10(z);
            }
            throw UnknownFunction("unknown function id");
        }

        double evaluate(const Vector &x)
        {
            ++evals_;
            return raw_value(transform(x)) + f_opt_;
        }

        double operator()(const Vector &x) { return evaluate(x); }

    private:
        Function fid_;
        std::size_t d_;
        std::uint64_t iid_;
        boundary::Box box_;
        Vector x_opt_;
        double f_opt_ = 0.0;
        Matrix rotation_;
        std::size_t evals_ = 0;
    };

    inline ProblemInstance make_instance(Function fid, std::size_t d, std::uint64_t iid) { return {fid, d, iid}; }

    inline ProblemInstance make_instance(std::string_view fid, std::size_t d, std::uint64_t iid)
    {
        return {parse_function(fid), d, iid};
    }
}
