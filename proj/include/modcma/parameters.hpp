#pragma once

#include "configuration.hpp"

#include <algorithm>
#include <cmath>

namespace modcma
{
    struct StrategyParameters
    {
        std::size_t d = 0;
        std::size_t lambda = 0;
        std::size_t mu = 0;
        /// Length lambda, ranked: positive head, zero or negative tail.
        Vector weights;
        /// Number of leading positive weights, i.e. individuals recombined into the mean.
        std::size_t n_parents = 0;
        double mu_eff = 0;
        double c1 = 0;
        double c_mu = 0;
        double c_c = 0;
        double c_sigma = 0;
        double d_sigma = 0;
        double chi_d = 0;

        Vector positive_weights() const { return weights.head(static_cast<Eigen::Index>(n_parents)); }
    };

    inline std::size_t default_lambda(std::size_t d)
    {
        return 4 + static_cast<std::size_t>(std::floor(3.0 * std::log(static_cast<double>(d))));
    }

    namespace detail
    {
        /// ln((lambda+1)/2) - ln(i), i = 1..lambda
        inline Vector raw_default_weights(std::size_t lambda)
        {
            Vector w(static_cast<Eigen::Index>(lambda));
            for (std::size_t i = 0; i < lambda; ++i)
                w(static_cast<Eigen::Index>(i)) = std::log((lambda + 1.0) / 2.0) - std::log(i + 1.0);
            return w;
        }
    }

    /**
     * Tutorial defaults for dimension d, with the configuration's weight scheme
     * and any learning-rate overrides applied. c1 + c_mu > 1 is repaired by
     * proportional rescaling. An explicit lambda overrides the default formula.
     */
    inline StrategyParameters default_parameters(std::size_t d, const Configuration &cfg,
                                                 std::optional<std::size_t> lambda_override = std::nullopt)
    {
        if (d < 1)
            throw ConfigError("dimension must be at least 1");
        StrategyParameters p;
        p.d = d;
        p.lambda = lambda_override ? *lambda_override
                   : cfg.lambda    ? static_cast<std::size_t>(std::max(*cfg.lambda, 0))
                                   : default_lambda(d);
        if (p.lambda < 2)
            throw ConfigError("lambda must be at least 2");
        p.mu = p.lambda / 2;

        const auto lam = static_cast<Eigen::Index>(p.lambda);
        const auto mu = static_cast<Eigen::Index>(p.mu);
        const Vector raw = detail::raw_default_weights(p.lambda);
        p.weights = Vector::Zero(lam);

        switch (cfg.weights)
        {
        case Weights::default_:
            p.weights.head(mu) = raw.head(mu) / raw.head(mu).sum();
            p.n_parents = p.mu;
            break;
        case Weights::equal:
            p.weights.head(mu).setConstant(1.0 / static_cast<double>(p.mu));
            p.n_parents = p.mu;
            break;
        case Weights::half_power_lambda:
            for (Eigen::Index i = 0; i < lam; ++i)
                p.weights(i) = std::ldexp(1.0, -static_cast<int>(i + 1)) +
                               std::ldexp(1.0, -static_cast<int>(p.lambda)) / static_cast<double>(p.lambda);
            p.n_parents = p.lambda;
            break;
        }

        const Vector pos = p.positive_weights();
        p.mu_eff = std::pow(pos.sum(), 2) / pos.squaredNorm();

        const double n = static_cast<double>(d);
        const double me = p.mu_eff;
        p.chi_d = expected_norm(d);
        p.c_c = cfg.c_c.value_or((4.0 + me / n) / (n + 4.0 + 2.0 * me / n));
        p.c_sigma = cfg.c_sigma.value_or((me + 2.0) / (n + me + 5.0));
        p.c1 = cfg.c1.value_or(2.0 / (std::pow(n + 1.3, 2) + me));
        p.c_mu = cfg.c_mu.value_or(std::min(1.0 - p.c1, 2.0 * (me - 2.0 + 1.0 / me) / (std::pow(n + 2.0, 2) + me)));
        p.c_mu = std::max(p.c_mu, 0.0);
        if (p.c1 + p.c_mu > 1.0)
        {
            const double scale = 1.0 / (p.c1 + p.c_mu + 1e-12);
            p.c1 *= scale;
            p.c_mu *= scale;
        }
        p.d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((me - 1.0) / (n + 1.0)) - 1.0) + p.c_sigma;

        // negative tail for the active update
        if (cfg.active && p.n_parents < p.lambda)
        {
            const auto tail_start = static_cast<Eigen::Index>(p.n_parents);
            Vector neg = raw.tail(lam - tail_start).cwiseMin(0.0);
            const double neg_sum = -neg.sum();
            if (neg_sum > 0)
            {
                const double mu_eff_neg = std::pow(neg.sum(), 2) / neg.squaredNorm();
                const double alpha_mu = p.c_mu > 0 ? 1.0 + p.c1 / p.c_mu : kInf;
                const double alpha_mu_eff = 1.0 + 2.0 * mu_eff_neg / (me + 2.0);
                const double alpha_posdef = p.c_mu > 0 ? (1.0 - p.c1 - p.c_mu) / (n * p.c_mu) : kInf;
                const double scale = std::min({alpha_mu, alpha_mu_eff, alpha_posdef});
                p.weights.tail(lam - tail_start) = scale * neg / neg_sum;
            }
        }
        return p;
    }
}
