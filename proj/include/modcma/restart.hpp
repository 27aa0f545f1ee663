#pragma once

#include "configuration.hpp"

#include <algorithm>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace modcma::restart
{
    enum class Reason
    {
        none,
        no_improvement,
        ill_conditioned,
        sigma_collapse,
        flat_fitness,
        sigma_out_of_range,
        numerical_failure
    };

    inline std::string_view to_string(Reason r)
    {
        switch (r)
        {
        case Reason::none: return "none";
        case Reason::no_improvement: return "no_improvement";
        case Reason::ill_conditioned: return "ill_conditioned";
        case Reason::sigma_collapse: return "sigma_collapse";
        case Reason::flat_fitness: return "flat_fitness";
        case Reason::sigma_out_of_range: return "sigma_out_of_range";
        case Reason::numerical_failure: return "numerical_failure";
        }
        return "unknown";
    }

    inline constexpr double kImprovementTolerance = 1e-12;
    inline constexpr double kMaxCondition = 1e14;
    inline constexpr double kMinStep = 1e-12;
    inline constexpr double kFlatFitness = 1e-12;

    /// Each stagnation trigger can be disabled for ablations.
    struct Triggers
    {
        bool no_improvement = true;
        bool ill_conditioned = true;
        bool sigma_collapse = true;
        bool flat_fitness = true;
        bool sigma_out_of_range = true;
    };

    struct StagnationInput
    {
        /// best-so-far f after each generation of the current restart segment
        std::span<const double> best_history;
        /// f-values evaluated in the latest generation
        std::span<const double> population_f;
        /// square roots of the eigenvalues of C
        Vector D;
        double sigma = 1.0;
        bool sigma_clamped = false;
        std::size_t d = 1;
        std::size_t lambda = 2;
    };

    struct Decision
    {
        bool restart = false;
        Reason reason = Reason::none;

        explicit operator bool() const { return restart; }
    };

    inline std::size_t improvement_window(std::size_t d, std::size_t lambda)
    {
        return 10 + (30 * d + lambda - 1) / lambda;
    }

    inline Decision should_restart(const StagnationInput &in, const Triggers &triggers = {})
    {
        if (triggers.sigma_out_of_range && in.sigma_clamped)
            return {true, Reason::sigma_out_of_range};

        if (triggers.flat_fitness)
        {
            std::vector<double> finite;
            for (double f : in.population_f)
                if (std::isfinite(f))
                    finite.push_back(f);
            if (finite.size() >= 2)
            {
                const auto [lo, hi] = std::minmax_element(finite.begin(), finite.end());
                if (*hi - *lo < kFlatFitness)
                    return {true, Reason::flat_fitness};
            }
        }

        if (in.D.size() > 0)
        {
            const double dmax = in.D.maxCoeff(), dmin = in.D.minCoeff();
            if (triggers.ill_conditioned && (dmin <= 0 || (dmax / dmin) * (dmax / dmin) > kMaxCondition))
                return {true, Reason::ill_conditioned};
            if (triggers.sigma_collapse && in.sigma * dmax < kMinStep)
                return {true, Reason::sigma_collapse};
        }

        if (triggers.no_improvement)
        {
            const std::size_t window = improvement_window(in.d, in.lambda);
            const auto &h = in.best_history;
            if (h.size() > window && h[h.size() - 1 - window] - h.back() < kImprovementTolerance)
                return {true, Reason::no_improvement};
        }
        return {};
    }

    enum class Regime
    {
        initial,
        large,
        small
    };

    struct Ledger
    {
        std::vector<Regime> regimes{Regime::initial};
        std::size_t budget_used_large = 0;
        std::size_t budget_used_small = 0;
        std::size_t lambda_base = 0;
        std::size_t lambda_large = 0;
        std::size_t lambda_current = 0;
        std::size_t restarts = 0;
        std::size_t large_restarts = 0;

        explicit Ledger(std::size_t lambda0 = 0)
            : lambda_base(lambda0), lambda_large(lambda0), lambda_current(lambda0) {}

        Regime current() const { return regimes.back(); }

        /// Charge evaluations of the running segment; the initial run counts as large.
        void charge(std::size_t evals)
        {
            if (current() == Regime::small)
                budget_used_small += evals;
            else
                budget_used_large += evals;
        }
    };

    struct Plan
    {
        std::size_t lambda = 0;
        /// multiplier on the default initial step size
        double sigma_factor = 1.0;
    };

    /**
     * Population size and step size for the next segment, or nothing when the
     * strategy is off or the remaining budget cannot fund a generation.
     */
    inline std::optional<Plan> next_restart_config(Ledger &ledger, Restart strategy, std::size_t remaining_budget,
                                                   Rng &rng)
    {
        if (strategy == Restart::off)
            return std::nullopt;

        Plan plan;
        Regime regime = Regime::large;
        if (strategy == Restart::ipop)
        {
            plan.lambda = 2 * ledger.lambda_current;
        }
        else if (ledger.budget_used_large <= ledger.budget_used_small)
        {
            plan.lambda = 2 * ledger.lambda_large;
        }
        else
        {
            regime = Regime::small;
            const double u = rng.uniform();
            const double u_sigma = rng.uniform();
            const double ratio = static_cast<double>(ledger.lambda_large) / static_cast<double>(ledger.lambda_base);
            const double lam = static_cast<double>(ledger.lambda_base) * std::pow(ratio, u * u) / 2.0;
            plan.lambda = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(lam)));
            plan.sigma_factor = 2.0 * std::pow(10.0, -2.0 * u_sigma);
        }

        if (remaining_budget < plan.lambda + 2)
            return std::nullopt;

        if (regime == Regime::large)
        {
            ++ledger.large_restarts;
            ledger.lambda_large = plan.lambda;
        }
        ledger.lambda_current = plan.lambda;
        ledger.regimes.push_back(regime);
        ++ledger.restarts;
        return plan;
    }
}
