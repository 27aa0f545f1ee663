#pragma once

#include "benchmarks.hpp"
#include "boundary.hpp"
#include "configuration.hpp"
#include "linalg.hpp"
#include "metrics.hpp"
#include "parameters.hpp"
#include "restart.hpp"
#include "sampling.hpp"
#include "stepsize.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <optional>
#include <vector>

namespace modcma
{
    inline constexpr double kFinalTarget = 1e-8;
    inline constexpr double kThresholdStart = 0.2;
    inline constexpr double kThresholdDecay = 1.0;
    inline constexpr double kInitialSigmaFraction = 0.2;
    inline constexpr double kEigenvalueFloor = 1e-30;

    struct Individual
    {
        Vector z;
        Vector y;
        Vector x;
        double f = kInf;
        std::optional<int> pair_id;
        std::optional<double> trial_sigma;
        bool evaluated = false;
    };

    struct CmaState
    {
        Vector m;
        Matrix C;
        Matrix B;
        Vector D;
        double sigma = 1.0;
        double sigma0 = 1.0;
        Vector p_sigma;
        Vector p_c;
        std::size_t t = 0;
        std::size_t evals = 0;
        std::size_t eigen_evals = 0;
        Vector best_x;
        double best_f = kInf;
        /// f-values of the previous generation (MSR, PSR, sequential selection)
        std::vector<double> prev_f;
        /// previous parents, merged into the ranking under elitism
        std::vector<Individual> prev_parents;
        /// success accumulator of CSA-like smoothed rules
        double ssa_s = 0.0;
        bool sigma_clamped = false;
        bool numerical_failure = false;
        /// best-so-far f at the end of each generation of this segment
        std::vector<double> best_history;

        static CmaState initial(Vector mean, double sigma0)
        {
            const auto d = mean.size();
            CmaState s;
            s.m = std::move(mean);
            s.C = Matrix::Identity(d, d);
            s.B = Matrix::Identity(d, d);
            s.D = Vector::Ones(d);
            s.sigma = s.sigma0 = sigma0;
            s.p_sigma = Vector::Zero(d);
            s.p_c = Vector::Zero(d);
            return s;
        }

        Matrix inv_sqrt_C() const { return B * D.cwiseInverse().asDiagonal() * B.transpose(); }
    };

    /// Tutorial's lazy rule: decompose once the evaluations since the last one exceed lambda / ((c1 + c_mu) d 10).
    inline bool eigen_update_due(const CmaState &state, const StrategyParameters &params)
    {
        const double rate = params.c1 + params.c_mu;
        if (rate <= 0)
            return false;
        const double gap = static_cast<double>(params.lambda) / (rate * static_cast<double>(params.d) * 10.0);
        return static_cast<double>(state.evals - state.eigen_evals) > gap;
    }

    /// Recompute B and D from C; negative eigenvalues flag a numerical failure.
    inline void decompose(CmaState &state)
    {
        const auto eig = linalg::jacobi_eigen(state.C);
        if ((eig.values.array() < 0.0).any() || !eig.values.allFinite())
            state.numerical_failure = true;
        state.B = eig.vectors;
        state.D = eig.values.cwiseMax(kEigenvalueFloor).cwiseSqrt();
        state.eigen_evals = state.evals;
    }

    inline void refresh_eigensystem(CmaState &state, const StrategyParameters &params)
    {
        if (eigen_update_due(state, params))
            decompose(state);
    }

    /// L = 0.2 * |ub - lb| * ((budget - evals) / budget)^1
    inline double threshold_length(const boundary::Box &box, std::size_t evals, std::size_t budget)
    {
        if (budget == 0 || evals >= budget)
            return 0.0;
        const double remaining = static_cast<double>(budget - evals) / static_cast<double>(budget);
        return kThresholdStart * box.diagonal() * std::pow(remaining, kThresholdDecay);
    }

    inline sampling::SamplerSpec sampler_spec(const Configuration &cfg, std::size_t d)
    {
        return {cfg.base_sampler, cfg.mirrored, cfg.orthogonal, d};
    }

    inline std::vector<Individual> generate_population(const CmaState &state, const StrategyParameters &params,
                                                       const Configuration &cfg, sampling::Sampler &sampler,
                                                       const boundary::Box &box, Rng &rng, std::size_t budget)
    {
        auto base = sampler.sample(params.lambda);
        const double threshold =
            cfg.threshold_convergence ? threshold_length(box, state.evals, budget) : 0.0;
        const double tau = stepsize::p_xnes_tau(params.d);

        std::vector<Individual> pop;
        pop.reserve(base.size());
        for (auto &b : base)
        {
            Individual ind;
            ind.z = std::move(b.z);
            ind.pair_id = b.pair_id;
            ind.y = state.B * state.D.cwiseProduct(ind.z);
            double sigma = state.sigma;
            if (cfg.ssa == Ssa::p_xnes)
            {
                sigma = state.sigma * std::exp(tau * rng.normal());
                ind.trial_sigma = sigma;
            }
            if (threshold > 0)
            {
                const double length = sigma * ind.y.norm();
                if (length > 0 && length < threshold)
                    ind.y *= threshold / length;
            }
            ind.x = boundary::correct(state.m + sigma * ind.y, box, cfg.bound_correction, rng);
            pop.push_back(std::move(ind));
        }
        return pop;
    }

    struct Selection
    {
        /// finite-valued eligible pool, best first; parents are its head
        std::vector<Individual> ranked;
        /// every individual evaluated this generation, in evaluation order
        std::vector<Individual> evaluated;
        std::size_t evals_used = 0;
        std::size_t n_parents = 0;

        std::span<const Individual> parents() const { return {ranked.data(), n_parents}; }
    };

    inline void rank_in_place(std::vector<Individual> &pool)
    {
        std::stable_sort(pool.begin(), pool.end(), [](const Individual &a, const Individual &b) { return a.f < b.f; });
    }

    /**
     * Evaluates candidates in order (at most max_evals calls) and ranks the
     * eligible pool. Non-finite values rank as +inf and are dropped before
     * recombination.
     */
    template <typename Objective>
    Selection evaluate_and_select(std::vector<Individual> pop, const CmaState &state,
                                  const StrategyParameters &params, const Configuration &cfg, Objective &&objective,
                                  std::size_t max_evals)
    {
        Selection sel;
        const double prev_best =
            state.prev_f.empty() ? kInf : *std::min_element(state.prev_f.begin(), state.prev_f.end());
        bool improved = false;
        for (auto &ind : pop)
        {
            if (sel.evals_used >= max_evals)
                break;
            const double f = objective(ind.x);
            ++sel.evals_used;
            ind.f = std::isfinite(f) ? f : kInf;
            ind.evaluated = true;
            sel.evaluated.push_back(ind);
            improved = improved || (!state.prev_f.empty() && ind.f < prev_best);
            if (cfg.sequential && improved && sel.evaluated.size() >= params.mu)
                break;
        }

        std::vector<Individual> pool;
        if (cfg.mirrored == Mirrored::mirrored_pairwise)
        {
            for (std::size_t i = 0; i < sel.evaluated.size(); ++i)
            {
                const auto &a = sel.evaluated[i];
                if (i + 1 < sel.evaluated.size() && a.pair_id && sel.evaluated[i + 1].pair_id == a.pair_id)
                {
                    const auto &b = sel.evaluated[i + 1];
                    pool.push_back(b.f < a.f ? b : a);
                    ++i;
                }
                else
                    pool.push_back(a);
            }
        }
        else
            pool = sel.evaluated;

        if (cfg.elitist)
            pool.insert(pool.end(), state.prev_parents.begin(), state.prev_parents.end());

        std::erase_if(pool, [](const Individual &ind) { return !std::isfinite(ind.f); });
        rank_in_place(pool);
        sel.n_parents = std::min(params.n_parents, pool.size());
        sel.ranked = std::move(pool);
        return sel;
    }

    /// Weights for the current selection: positive head renormalized over available parents.
    inline Vector selection_weights(const StrategyParameters &params, const Selection &sel)
    {
        const auto k = static_cast<Eigen::Index>(sel.n_parents);
        const auto n = static_cast<Eigen::Index>(std::min(sel.ranked.size(), params.lambda));
        Vector w = params.weights.head(n);
        if (k > 0)
            w.head(k) /= w.head(k).sum();
        return w;
    }

    /**
     * Mean, evolution paths and covariance update. Steps are taken from the
     * corrected candidates, y = (x - m) / sigma. Returns false (and flags the
     * state) when no parent is available or C degenerates.
     */
    inline bool update_distribution(CmaState &state, const Selection &sel, const StrategyParameters &params,
                                    const Configuration &cfg)
    {
        if (sel.n_parents == 0)
        {
            state.numerical_failure = true;
            return false;
        }
        const auto d = static_cast<Eigen::Index>(params.d);
        const Vector w = selection_weights(params, sel);
        const auto k = static_cast<Eigen::Index>(sel.n_parents);

        const Vector m_old = state.m;
        Vector m_new = Vector::Zero(d);
        for (Eigen::Index i = 0; i < k; ++i)
            m_new += w(i) * sel.ranked[static_cast<std::size_t>(i)].x;

        const double mu_eff = std::pow(w.head(k).sum(), 2) / w.head(k).squaredNorm();
        const Vector dm = (m_new - m_old) / state.sigma;
        const Matrix inv_sqrt = state.inv_sqrt_C();

        const double cs = params.c_sigma, cc = params.c_c;
        state.p_sigma = (1.0 - cs) * state.p_sigma + std::sqrt(cs * (2.0 - cs) * mu_eff) * (inv_sqrt * dm);
        const double generations = static_cast<double>(state.t + 1);
        const bool hsig = state.p_sigma.norm() / std::sqrt(1.0 - std::pow(1.0 - cs, 2.0 * generations)) <
                          (1.4 + 2.0 / (static_cast<double>(params.d) + 1.0)) * params.chi_d;
        state.p_c = (1.0 - cc) * state.p_c + (hsig ? std::sqrt(cc * (2.0 - cc) * mu_eff) : 0.0) * dm;
        const double delta_h = hsig ? 0.0 : cc * (2.0 - cc);

        Matrix rank_mu = Matrix::Zero(d, d);
        double weight_sum = 0.0;
        for (Eigen::Index i = 0; i < w.size(); ++i)
        {
            double wi = w(i);
            if (wi == 0.0)
                continue;
            const Vector y = (sel.ranked[static_cast<std::size_t>(i)].x - m_old) / state.sigma;
            if (wi < 0)
            {
                if (!cfg.active)
                    continue;
                const double len2 = (inv_sqrt * y).squaredNorm();
                wi *= len2 > 0 ? static_cast<double>(params.d) / len2 : 0.0;
                weight_sum += w(i);
            }
            else
                weight_sum += wi;
            rank_mu += wi * y * y.transpose();
        }

        const double c1 = params.c1, cmu = params.c_mu;
        state.C = (1.0 + c1 * delta_h - c1 - cmu * weight_sum) * state.C + c1 * state.p_c * state.p_c.transpose() +
                  cmu * rank_mu;
        state.C = 0.5 * (state.C + state.C.transpose());
        state.m = m_new;
        ++state.t;

        if (!state.C.allFinite() || !state.m.allFinite())
        {
            state.numerical_failure = true;
            return false;
        }
        return true;
    }

    /// Probe points of the two-point rule around the new mean.
    inline std::pair<Vector, Vector> tpa_probes(const CmaState &state, const Vector &m_old)
    {
        const Vector step = state.m - m_old;
        const double length = step.norm();
        if (length == 0)
            return {state.m, state.m};
        const double mahalanobis = (state.inv_sqrt_C() * step).norm() / state.sigma;
        const Vector offset = stepsize::kTpaAlpha * state.sigma * mahalanobis * step / length;
        return {state.m + offset, state.m - offset};
    }

    /**
     * Applies the configured step-size rule once per generation. TPA spends two
     * evaluations through `objective` when max_evals allows it.
     */
    template <typename Objective>
    std::size_t adapt_step_size(CmaState &state, const Selection &sel, const Vector &m_old,
                                const StrategyParameters &params, const Configuration &cfg,
                                const boundary::Box &box, Rng &rng, Objective &&objective, std::size_t max_evals)
    {
        std::vector<double> current_f;
        current_f.reserve(sel.evaluated.size());
        for (const auto &ind : sel.evaluated)
            current_f.push_back(ind.f);

        std::vector<Vector> selected_z;
        std::vector<double> trial_sigma;
        for (const auto &ind : sel.parents())
        {
            selected_z.push_back(ind.z);
            if (ind.trial_sigma)
                trial_sigma.push_back(*ind.trial_sigma);
        }

        stepsize::SsaInput in;
        in.current_f = current_f;
        in.previous_f = state.prev_f;
        in.selected_z = selected_z;
        in.selected_trial_sigma = trial_sigma;
        in.weights = selection_weights(params, sel).head(static_cast<Eigen::Index>(sel.n_parents));
        in.old_mean = m_old;
        in.new_mean = state.m;
        in.sigma = state.sigma;
        in.p_sigma = state.p_sigma;
        in.B = state.B;
        in.D = state.D;
        in.chi_d = params.chi_d;
        in.c_sigma = params.c_sigma;
        in.d_sigma = params.d_sigma;
        in.mu_eff = params.mu_eff;
        in.s = state.ssa_s;

        std::size_t used = 0;
        stepsize::SsaUpdate up{1.0, state.ssa_s};
        double new_sigma = state.sigma;
        switch (cfg.ssa)
        {
        case Ssa::csa:
            up = stepsize::adapt_csa(in);
            break;
        case Ssa::tpa:
            if (max_evals >= 2)
            {
                auto [fwd, bwd] = tpa_probes(state, m_old);
                fwd = boundary::correct(fwd, box, cfg.bound_correction, rng);
                bwd = boundary::correct(bwd, box, cfg.bound_correction, rng);
                const double f_fwd = objective(fwd);
                const double f_bwd = objective(bwd);
                used = 2;
                up = stepsize::adapt_tpa(std::isfinite(f_fwd) ? f_fwd : kInf, std::isfinite(f_bwd) ? f_bwd : kInf,
                                         state.ssa_s, params.d_sigma);
            }
            break;
        case Ssa::msr:
            up = stepsize::adapt_msr(in);
            break;
        case Ssa::psr:
            up = stepsize::adapt_psr(in);
            break;
        case Ssa::xnes:
            up = stepsize::adapt_xnes(in);
            break;
        case Ssa::m_xnes:
            up = stepsize::adapt_m_xnes(in);
            break;
        case Ssa::p_xnes:
            new_sigma = stepsize::adapt_p_xnes(in);
            break;
        }
        if (cfg.ssa != Ssa::p_xnes)
            new_sigma = state.sigma * up.multiplier;
        state.ssa_s = up.s;

        const double lo = stepsize::kSigmaClampLow * state.sigma0, hi = stepsize::kSigmaClampHigh * state.sigma0;
        if (!std::isfinite(new_sigma))
        {
            state.numerical_failure = true;
            new_sigma = state.sigma;
        }
        else if (new_sigma < lo || new_sigma > hi)
        {
            state.sigma_clamped = true;
            new_sigma = std::clamp(new_sigma, lo, hi);
        }
        state.sigma = new_sigma;
        state.prev_f = std::move(current_f);
        return used;
    }

    /// A black-box problem: objective, search box and known optimum value.
    struct Problem
    {
        std::function<double(const Vector &)> objective;
        boundary::Box box;
        double f_opt = 0.0;
        std::string fid;
        std::uint64_t iid = 0;

        std::size_t dimension() const { return static_cast<std::size_t>(box.dimension()); }

        static Problem from_instance(benchmarks::ProblemInstance instance)
        {
            const double f_opt = instance.f_opt();
            const auto box = instance.box();
            const std::string fid(benchmarks::to_string(instance.fid()));
            const auto iid = instance.iid();
            return {[inst = std::move(instance)](const Vector &x) mutable { return inst.evaluate(x); }, box, f_opt,
                    fid, iid};
        }
    };

    struct RunOptions
    {
        restart::Triggers triggers{};
        double target = kFinalTarget;
        std::string config_id;
    };

    struct RunResult
    {
        metrics::RunTrace trace;
        Vector best_x;
        double best_f = kInf;
        std::size_t generations = 0;
        std::size_t restarts = 0;
        std::vector<restart::Reason> restart_reasons;
        std::vector<std::size_t> lambdas;
        /// step size after each adapted generation
        std::vector<double> sigmas;
    };

    /**
     * Full generational loop with the configured restart strategy, until the
     * budget is spent or the final target precision is reached.
     */
    inline RunResult run(const Configuration &cfg, Problem problem, std::size_t budget, std::uint64_t seed,
                         const RunOptions &options = {})
    {
        cfg.validate();
        const std::size_t d = problem.dimension();
        StrategyParameters params = default_parameters(d, cfg);
        const auto spec = sampler_spec(cfg, d);
        spec.validate();
        if (budget < params.lambda)
            throw ConfigError("budget must cover at least one generation");

        sampling::Sampler sampler(spec, mix_seed(seed, 1));
        Rng rng(mix_seed(seed, 2));
        const auto &box = problem.box;
        const double sigma_default = kInitialSigmaFraction * box.width().mean();

        RunResult result;
        auto &trace = result.trace;
        trace.budget = budget;
        trace.fid = problem.fid;
        trace.iid = problem.iid;
        trace.seed = seed;
        trace.config_id = options.config_id;

        std::size_t evals = 0;
        bool target_hit = false;
        auto objective = [&](const Vector &x) {
            const double f = problem.objective(x);
            ++evals;
            if (std::isfinite(f))
            {
                if (f < result.best_f)
                {
                    result.best_f = f;
                    result.best_x = x;
                }
                const double precision = std::max(f - problem.f_opt, 0.0);
                trace.record(evals, precision);
                target_hit = target_hit || precision <= options.target;
            }
            return f;
        };

        auto random_mean = [&] {
            Vector m(box.dimension());
            for (Eigen::Index i = 0; i < m.size(); ++i)
                m(i) = rng.uniform(box.lb(i), box.ub(i));
            return m;
        };

        restart::Ledger ledger(params.lambda);
        CmaState state = CmaState::initial(random_mean(), sigma_default);
        std::size_t segment_start = 0;
        result.lambdas.push_back(params.lambda);

        while (evals < budget && !target_hit)
        {
            state.evals = evals;
            refresh_eigensystem(state, params);
            auto pop = generate_population(state, params, cfg, sampler, box, rng, budget);
            auto sel = evaluate_and_select(std::move(pop), state, params, cfg, objective, budget - evals);
            state.evals = evals;
            ++result.generations;
            if (target_hit || evals >= budget)
                break;

            const Vector m_old = state.m;
            if (update_distribution(state, sel, params, cfg))
            {
                adapt_step_size(state, sel, m_old, params, cfg, box, rng, objective, budget - evals);
                state.evals = evals;
                if (cfg.elitist)
                    state.prev_parents.assign(sel.ranked.begin(),
                                              sel.ranked.begin() + static_cast<std::ptrdiff_t>(sel.n_parents));
            }
            result.sigmas.push_back(state.sigma);
            if (target_hit || evals >= budget)
                break;

            const double gen_best = state.best_history.empty() ? kInf : state.best_history.back();
            double best_now = gen_best;
            std::vector<double> pop_f;
            for (const auto &ind : sel.evaluated)
            {
                pop_f.push_back(ind.f);
                best_now = std::min(best_now, ind.f);
            }
            state.best_history.push_back(best_now);

            restart::StagnationInput stag{state.best_history, pop_f, state.D, state.sigma, state.sigma_clamped, d,
                                          params.lambda};
            auto decision = state.numerical_failure ? restart::Decision{true, restart::Reason::numerical_failure}
                                                    : restart::should_restart(stag, options.triggers);
            if (!decision)
                continue;

            result.restart_reasons.push_back(decision.reason);
            ledger.charge(evals - segment_start);
            const auto plan = restart::next_restart_config(ledger, cfg.restart, budget - evals, rng);
            if (!plan)
                break;
            ++result.restarts;
            segment_start = evals;
            params = default_parameters(d, cfg, plan->lambda);
            result.lambdas.push_back(params.lambda);
            state = CmaState::initial(random_mean(), sigma_default * plan->sigma_factor);
            state.evals = evals;
            state.eigen_evals = evals;
        }

        trace.evals_used = evals;
        return result;
    }

    inline RunResult run(const Configuration &cfg, const benchmarks::ProblemInstance &instance, std::size_t budget,
                         std::uint64_t seed, const RunOptions &options = {})
    {
        return run(cfg, Problem::from_instance(instance), budget, seed, options);
    }
}
