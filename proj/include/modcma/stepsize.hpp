#pragma once

#include "parameters.hpp"

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

namespace modcma::stepsize
{
    // Constants for the success-rule and natural-gradient variants.
    inline constexpr double kMsrQuantile = 0.3;
    inline constexpr double kMsrSmoothing = 0.3;
    inline constexpr double kPsrTargetSuccess = 0.25;
    inline constexpr double kPsrSmoothing = 0.9;
    inline constexpr double kTpaAlpha = 0.5;
    inline constexpr double kTpaSmoothing = 0.3;
    inline constexpr double kSigmaClampLow = 1e-14;
    inline constexpr double kSigmaClampHigh = 1e14;

    inline double p_xnes_tau(std::size_t d) { return 1.0 / std::sqrt(2.0 * static_cast<double>(d)); }

    struct SsaInput
    {
        /// f-values of every individual evaluated this generation.
        std::span<const double> current_f;
        /// f-values of the previous generation; empty in the first one.
        std::span<const double> previous_f;
        /// base samples of the recombined individuals, ranked best first
        std::span<const Vector> selected_z;
        /// trial step sizes of the recombined individuals, ranked (p-xNES)
        std::span<const double> selected_trial_sigma;
        /// recombination weights matching selected_z
        Vector weights;
        Vector old_mean;
        Vector new_mean;
        double sigma = 1.0;
        Vector p_sigma;
        Matrix B;
        Vector D;
        double chi_d = 1.0;
        double c_sigma = 0.3;
        double d_sigma = 1.0;
        double mu_eff = 1.0;
        /// smoothed success accumulator carried between generations
        double s = 0.0;
    };

    struct SsaUpdate
    {
        double multiplier = 1.0;
        double s = 0.0;
    };

    inline SsaUpdate adapt_csa(const SsaInput &in)
    {
        return {std::exp((in.c_sigma / in.d_sigma) * (in.p_sigma.norm() / in.chi_d - 1.0)), in.s};
    }

    /// The ceil(0.3 n)-th best of the previous f-values.
    inline double msr_quantile(std::span<const double> previous_f)
    {
        std::vector<double> prev(previous_f.begin(), previous_f.end());
        std::sort(prev.begin(), prev.end());
        const auto k = static_cast<std::size_t>(std::ceil(kMsrQuantile * static_cast<double>(prev.size())));
        return prev[std::clamp<std::size_t>(k, 1, prev.size()) - 1];
    }

    inline SsaUpdate adapt_msr(const SsaInput &in)
    {
        if (in.previous_f.empty() || in.current_f.empty())
            return {1.0, in.s};
        const double q = msr_quantile(in.previous_f);
        const auto n = static_cast<double>(in.current_f.size());
        const auto k = static_cast<double>(std::count_if(in.current_f.begin(), in.current_f.end(),
                                                         [q](double f) { return f < q; }));
        const double z = (2.0 / n) * (k - (n + 1.0) / 2.0);
        const double s = (1.0 - kMsrSmoothing) * in.s + kMsrSmoothing * z;
        return {std::exp(s / in.d_sigma), s};
    }

    /// 1-based ranks of the joint sample, ties receiving their average rank.
    inline std::vector<double> average_ranks(std::span<const double> values)
    {
        std::vector<std::size_t> order(values.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
        std::vector<double> ranks(values.size());
        for (std::size_t i = 0; i < order.size();)
        {
            std::size_t j = i;
            while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]])
                ++j;
            const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
            for (std::size_t k = i; k <= j; ++k)
                ranks[order[k]] = r;
            i = j + 1;
        }
        return ranks;
    }

    /// Mean-rank advantage of the current over the previous population, in [-1, 1].
    inline double psr_success(std::span<const double> current_f, std::span<const double> previous_f)
    {
        std::vector<double> pool(current_f.begin(), current_f.end());
        pool.insert(pool.end(), previous_f.begin(), previous_f.end());
        const auto ranks = average_ranks(pool);
        const auto nc = current_f.size(), np = previous_f.size();
        const double mean_curr = std::accumulate(ranks.begin(), ranks.begin() + nc, 0.0) / nc;
        const double mean_prev = std::accumulate(ranks.begin() + nc, ranks.end(), 0.0) / np;
        return (mean_prev - mean_curr) / ((nc + np) / 2.0);
    }

    inline SsaUpdate adapt_psr(const SsaInput &in)
    {
        if (in.previous_f.empty() || in.current_f.empty())
            return {1.0, in.s};
        const double delta = psr_success(in.current_f, in.previous_f) - kPsrTargetSuccess;
        const double s = (1.0 - kPsrSmoothing) * in.s + kPsrSmoothing * delta;
        return {std::exp(s / in.d_sigma), s};
    }

    inline SsaUpdate adapt_xnes(const SsaInput &in)
    {
        double acc = 0.0;
        for (std::size_t i = 0; i < in.selected_z.size(); ++i)
            acc += in.weights(static_cast<Eigen::Index>(i)) * (in.selected_z[i].norm() - in.chi_d) / in.chi_d;
        return {std::exp(in.c_sigma * acc), in.s};
    }

    inline SsaUpdate adapt_m_xnes(const SsaInput &in)
    {
        const Vector delta = std::sqrt(in.mu_eff) *
                             (in.B.transpose() * (in.new_mean - in.old_mean)).cwiseQuotient(in.D) / in.sigma;
        return {std::exp(in.c_sigma * (delta.norm() - in.chi_d) / in.chi_d), in.s};
    }

    /// Weighted geometric mean of the ranked trial step sizes; returns the new sigma.
    inline double adapt_p_xnes(const SsaInput &in)
    {
        if (in.selected_trial_sigma.size() != in.selected_z.size() || in.selected_trial_sigma.empty())
            throw ConfigError("p-xnes requires a trial step size on every recombined individual");
        double log_sigma = 0.0;
        for (std::size_t i = 0; i < in.selected_trial_sigma.size(); ++i)
            log_sigma += in.weights(static_cast<Eigen::Index>(i)) * std::log(in.selected_trial_sigma[i]);
        return std::exp(log_sigma);
    }

    /// Two-point rule: +1 when the longer probe step ranks better.
    inline SsaUpdate adapt_tpa(double f_forward, double f_backward, double s, double d_sigma)
    {
        const double z = f_forward < f_backward ? 1.0 : -1.0;
        const double next = (1.0 - kTpaSmoothing) * s + kTpaSmoothing * z;
        return {std::exp(next / d_sigma), next};
    }
}
