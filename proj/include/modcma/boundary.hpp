#pragma once

#include "common.hpp"

#include <algorithm>

namespace modcma::boundary
{
    enum class Strategy
    {
        none,
        ur,
        mcs,
        cotn,
        scs,
        tcs
    };

    struct Box
    {
        Vector lb;
        Vector ub;

        Box(Vector lower, Vector upper) : lb(std::move(lower)), ub(std::move(upper))
        {
            if (lb.size() != ub.size() || lb.size() == 0)
                throw std::invalid_argument("box bounds must be non-empty and of equal length");
            for (Eigen::Index i = 0; i < lb.size(); ++i)
                if (!std::isfinite(lb(i)) || !std::isfinite(ub(i)) || !(lb(i) < ub(i)))
                    throw std::invalid_argument("box bounds must be finite with lb < ub");
        }

        static Box uniform(std::size_t d, double lo, double hi)
        {
            const auto n = static_cast<Eigen::Index>(d);
            return {Vector::Constant(n, lo), Vector::Constant(n, hi)};
        }

        Eigen::Index dimension() const { return lb.size(); }
        Vector width() const { return ub - lb; }
        double diagonal() const { return width().norm(); }

        bool contains(const Vector &x) const
        {
            return (x.array() >= lb.array()).all() && (x.array() <= ub.array()).all();
        }
    };

    inline constexpr double kCotnScale = 1.0 / 3.0;
    inline constexpr int kCotnMaxDraws = 100;

    namespace detail
    {
        inline double positive_mod(double a, double period)
        {
            const double r = std::fmod(a, period);
            return r < 0 ? r + period : r;
        }
    }

    /// Triangular folding with period 2w: reflection about the nearest bound.
    inline double mirror(double x, double lb, double ub)
    {
        const double w = ub - lb;
        double y = detail::positive_mod(x - lb, 2.0 * w);
        if (y > w)
            y = 2.0 * w - y;
        return std::clamp(lb + y, lb, ub);
    }

    /// Wrapping with period w: re-entry through the opposite bound.
    inline double toroidal(double x, double lb, double ub)
    {
        const double w = ub - lb;
        return std::clamp(lb + detail::positive_mod(x - lb, w), lb, ub);
    }

    inline double one_tailed_normal(double x, double lb, double ub, Rng &rng)
    {
        const double sd = (ub - lb) * kCotnScale;
        const bool above = x > ub;
        double y = above ? ub : lb;
        for (int i = 0; i < kCotnMaxDraws; ++i)
        {
            const double step = std::abs(rng.normal()) * sd;
            y = above ? ub - step : lb + step;
            if (y >= lb && y <= ub)
                return y;
        }
        return std::clamp(y, lb, ub);
    }

    /// Coordinate-wise repair; feasible coordinates are returned untouched.
    inline Vector correct(const Vector &x, const Box &box, Strategy strategy, Rng &rng)
    {
        if (strategy == Strategy::none)
            return x;
        Vector out = x;
        for (Eigen::Index i = 0; i < x.size(); ++i)
        {
            const double lo = box.lb(i), hi = box.ub(i);
            if (x(i) >= lo && x(i) <= hi)
                continue;
            switch (strategy)
            {
            case Strategy::ur:
                out(i) = rng.uniform(lo, hi);
                break;
            case Strategy::mcs:
                out(i) = mirror(x(i), lo, hi);
                break;
            case Strategy::cotn:
                out(i) = one_tailed_normal(x(i), lo, hi, rng);
                break;
            case Strategy::scs:
                out(i) = std::clamp(x(i), lo, hi);
                break;
            case Strategy::tcs:
                out(i) = toroidal(x(i), lo, hi);
                break;
            case Strategy::none:
                break;
            }
        }
        return out;
    }
}
