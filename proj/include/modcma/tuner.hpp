#pragma once

#include "cma.hpp"
#include "metrics.hpp"
#include "modules.hpp"
#include "parallel.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

namespace modcma::tuner
{
    enum class Extension
    {
        none,
        ssa_new,
        boundary_new
    };

    inline std::string_view to_string(Extension e)
    {
        switch (e)
        {
        case Extension::none: return "none";
        case Extension::ssa_new: return "ssa_new";
        case Extension::boundary_new: return "boundary_new";
        }
        return "none";
    }

    inline Extension parse_extension(std::string_view s)
    {
        if (s == "none" || s == "baseline")
            return Extension::none;
        if (s == "ssa_new" || s == "ssa")
            return Extension::ssa_new;
        if (s == "boundary_new" || s == "boundary")
            return Extension::boundary_new;
        throw ConfigError("unknown search-space extension '" + std::string(s) + "'");
    }

    struct ContinuousDim
    {
        std::string name;
        double lo = 0;
        double hi = 1;
        bool lo_open = false;
    };

    struct SearchSpace
    {
        std::vector<modules::Module> categorical;
        std::vector<ContinuousDim> continuous;
        Extension extension = Extension::none;
        /// problem dimension, used to resolve default learning rates
        std::size_t dim = 5;

        const modules::Module *find(std::string_view name) const
        {
            for (const auto &m : categorical)
                if (m.name == name)
                    return &m;
            return nullptr;
        }

        std::size_t active_categorical() const
        {
            return static_cast<std::size_t>(std::count_if(categorical.begin(), categorical.end(),
                                                          [](const auto &m) { return m.options.size() > 1; }));
        }

        std::size_t n_parameters() const { return active_categorical() + continuous.size(); }
    };

    /// Baseline space keeps only the original options; an extension adds the new ones of one module.
    inline SearchSpace build_space(Extension extension, std::size_t dim = 5)
    {
        SearchSpace space;
        space.extension = extension;
        space.dim = dim;
        for (auto m : modules::all_modules())
        {
            if (m.name == "ssa" && extension != Extension::ssa_new)
                m.options = {"csa", "tpa"};
            if (m.name == "bound_correction" && extension != Extension::boundary_new)
                m.options = {"none"};
            space.categorical.push_back(std::move(m));
        }
        space.continuous = {{"c1", 0.0, 1.0, false},
                            {"c_mu", 0.0, 1.0, false},
                            {"c_c", 0.0, 1.0, true},
                            {"c_sigma", 0.0, 1.0, true}};
        return space;
    }

    inline SearchSpace build_space(bool ssa_new, bool boundary_new, std::size_t dim = 5)
    {
        if (ssa_new && boundary_new)
            throw ConfigError("the ssa and boundary extensions are mutually exclusive");
        return build_space(ssa_new ? Extension::ssa_new : boundary_new ? Extension::boundary_new : Extension::none,
                           dim);
    }

    struct Candidate
    {
        int id = 0;
        Configuration config;
        int born = 1;
        /// score per instance index
        std::map<std::size_t, double> scores;

        double mean_score() const
        {
            if (scores.empty())
                return kInf;
            double s = 0;
            for (const auto &[k, v] : scores)
                s += v;
            return s / static_cast<double>(scores.size());
        }
    };

    struct LogEntry
    {
        int iteration = 0;
        int config_id = 0;
        std::uint64_t seed = 0;
        double aoc = 0;
    };

    using Evaluator = std::function<double(const Configuration &, std::uint64_t seed)>;

    struct TunerOptions
    {
        std::size_t total_budget = 1000;
        std::size_t min_results = 5;
        double alpha = 0.05;
        std::size_t n_elites = 5;
        std::size_t jobs = 1;
        /// score assigned when the evaluator throws
        double failure_score = kInf;
        std::uint64_t seed = 1;
    };

    inline double sample_continuous(const ContinuousDim &dim, Rng &rng)
    {
        return dim.lo_open ? dim.hi - (dim.hi - dim.lo) * rng.uniform() : rng.uniform(dim.lo, dim.hi);
    }

    /// Uniform random configurations plus the exact default configuration (first).
    inline std::vector<Configuration> initial_population(const SearchSpace &space, std::size_t n, Rng &rng)
    {
        if (n < 2)
            throw std::invalid_argument("initial population needs at least two configurations");
        std::vector<Configuration> out{Configuration{}};
        while (out.size() < n)
        {
            Configuration cfg;
            for (const auto &m : space.categorical)
                modules::set_option(cfg, m.name, m.options[rng.index(m.options.size())]);
            for (const auto &c : space.continuous)
                modules::continuous(cfg, c.name) = sample_continuous(c, rng);
            out.push_back(std::move(cfg));
        }
        return out;
    }

    /// Probability of keeping the parent's categorical value, 0.5 -> 0.9 over the iterations.
    inline double keep_probability(int iteration, int n_iterations)
    {
        if (n_iterations <= 1)
            return 0.9;
        return 0.5 + 0.4 * static_cast<double>(iteration - 1) / static_cast<double>(n_iterations - 1);
    }

    /// Standard deviation factor on the parameter range: 0.25 at the first resampling, x0.6 afterwards.
    inline double continuous_spread(int iteration) { return 0.25 * std::pow(0.6, std::max(0, iteration - 2)); }

    inline Configuration sample_around(const Configuration &parent, const SearchSpace &space, int iteration,
                                       int n_iterations, Rng &rng)
    {
        Configuration cfg = parent;
        const double keep = keep_probability(iteration, n_iterations);
        for (const auto &m : space.categorical)
        {
            if (m.options.size() < 2)
            {
                modules::set_option(cfg, m.name, m.options.front());
                continue;
            }
            if (rng.uniform() >= keep)
                modules::set_option(cfg, m.name, m.options[rng.index(m.options.size())]);
        }
        for (const auto &c : space.continuous)
        {
            const auto &stored = modules::continuous(parent, c.name);
            const double center = stored ? *stored : modules::effective_continuous(parent, c.name, space.dim);
            const double sd = continuous_spread(iteration) * (c.hi - c.lo);
            double v = center;
            bool inside = false;
            for (int k = 0; k < 100 && !inside; ++k)
            {
                v = center + sd * rng.normal();
                inside = (c.lo_open ? v > c.lo : v >= c.lo) && v <= c.hi;
            }
            if (!inside)
                v = std::clamp(center, c.lo_open ? std::nextafter(c.lo, c.hi) : c.lo, c.hi);
            modules::continuous(cfg, c.name) = v;
        }
        return cfg;
    }

    struct FriedmanResult
    {
        bool rejected = false;
        double statistic = 0;
        double p_value = 1;
        double critical_difference = kInf;
        std::vector<double> rank_sums;
    };

    /// scores[block][config]; lower is better. Conover post-hoc difference on rank sums.
    inline FriedmanResult friedman_test(const std::vector<std::vector<double>> &scores, double alpha)
    {
        FriedmanResult r;
        const std::size_t n = scores.size();
        const std::size_t k = n ? scores.front().size() : 0;
        r.rank_sums.assign(k, 0.0);
        if (n < 2 || k < 2)
            return r;
        double a = 0.0;
        for (const auto &block : scores)
        {
            const auto ranks = stepsize::average_ranks(block);
            for (std::size_t j = 0; j < k; ++j)
            {
                r.rank_sums[j] += ranks[j];
                a += ranks[j] * ranks[j];
            }
        }
        const double nd = static_cast<double>(n), kd = static_cast<double>(k);
        const double c = nd * kd * (kd + 1) * (kd + 1) / 4.0;
        if (a - c <= 1e-12)
            return r;
        double ss = 0.0, sum_r2 = 0.0;
        for (double rj : r.rank_sums)
        {
            ss += (rj - nd * (kd + 1) / 2.0) * (rj - nd * (kd + 1) / 2.0);
            sum_r2 += rj * rj;
        }
        r.statistic = (kd - 1) * ss / (a - c);
        boost::math::chi_squared chi2(kd - 1);
        r.p_value = boost::math::cdf(boost::math::complement(chi2, r.statistic));
        r.rejected = r.p_value < alpha;
        if (r.rejected)
        {
            const double dof = (nd - 1) * (kd - 1);
            boost::math::students_t t(dof);
            const double q = boost::math::quantile(boost::math::complement(t, alpha / 2.0));
            r.critical_difference = q * std::sqrt(std::max(0.0, 2.0 * (nd * a - sum_r2) / dof));
        }
        return r;
    }

    /// One-sided sign test that `other` is worse than `best` over paired blocks.
    inline double sign_test_p(std::span<const double> best, std::span<const double> other)
    {
        std::size_t wins = 0, n = 0;
        for (std::size_t i = 0; i < best.size(); ++i)
        {
            if (best[i] == other[i])
                continue;
            ++n;
            wins += other[i] > best[i];
        }
        if (n == 0)
            return 1.0;
        double p = 0.0;
        for (std::size_t x = wins; x <= n; ++x)
            p += std::exp(std::lgamma(n + 1.0) - std::lgamma(x + 1.0) - std::lgamma(n - x + 1.0)) * std::pow(0.5, n);
        return std::min(1.0, p);
    }

    struct RaceOutcome
    {
        std::vector<Candidate> survivors;
        std::size_t evaluations = 0;
        std::size_t instances = 0;
    };

    /// Shared instance stream: the seed of instance k.
    inline std::uint64_t instance_seed(std::uint64_t tuner_seed, std::size_t k)
    {
        return mix_seed(tuner_seed, 100000 + k) % 1000000007ULL + 1;
    }

    /**
     * Paired race over a shared instance stream. Every alive candidate is
     * scored on the same instances; from min_results instances on, a Friedman
     * test (sign test for two candidates) removes statistically worse ones.
     */
    inline RaceOutcome race(std::vector<Candidate> alive, const Evaluator &evaluator, const TunerOptions &opt,
                            std::size_t budget, int iteration, std::vector<LogEntry> *log = nullptr)
    {
        if (alive.size() < 2)
            throw std::invalid_argument("a race needs at least two configurations");
        RaceOutcome out;
        // a race that starts with few configurations runs on until its budget is spent
        const bool crowded = alive.size() > opt.n_elites;
        std::size_t k = 0;
        for (;;)
        {
            std::vector<std::size_t> todo;
            for (std::size_t i = 0; i < alive.size(); ++i)
                if (!alive[i].scores.contains(k))
                    todo.push_back(i);
            if (out.evaluations + todo.size() > budget)
                break;

            const std::uint64_t seed = instance_seed(opt.seed, k);
            const auto values = parallel_map(todo.size(), opt.jobs, [&](std::size_t j) {
                try
                {
                    const double v = evaluator(alive[todo[j]].config, seed);
                    return std::isfinite(v) ? v : opt.failure_score;
                }
                catch (...)
                {
                    return opt.failure_score;
                }
            });
            for (std::size_t j = 0; j < todo.size(); ++j)
            {
                auto &cand = alive[todo[j]];
                cand.scores[k] = values[j];
                if (log)
                    log->push_back({iteration, cand.id, seed, values[j]});
            }
            out.evaluations += todo.size();
            ++k;

            if (k < opt.min_results)
                continue;

            std::vector<std::vector<double>> blocks(k, std::vector<double>(alive.size()));
            for (std::size_t b = 0; b < k; ++b)
                for (std::size_t j = 0; j < alive.size(); ++j)
                    blocks[b][j] = alive[j].scores.at(b);

            std::vector<bool> keep(alive.size(), true);
            if (alive.size() == 2)
            {
                double s0 = 0, s1 = 0;
                std::vector<double> a(k), b(k);
                for (std::size_t i = 0; i < k; ++i)
                {
                    a[i] = blocks[i][0];
                    b[i] = blocks[i][1];
                    s0 += a[i];
                    s1 += b[i];
                }
                const bool first_best = s0 <= s1;
                const double p = first_best ? sign_test_p(a, b) : sign_test_p(b, a);
                if (p < opt.alpha)
                    keep[first_best ? 1 : 0] = false;
            }
            else
            {
                const auto fr = friedman_test(blocks, opt.alpha);
                if (fr.rejected)
                {
                    const double best = *std::min_element(fr.rank_sums.begin(), fr.rank_sums.end());
                    for (std::size_t j = 0; j < alive.size(); ++j)
                        keep[j] = fr.rank_sums[j] - best <= fr.critical_difference;
                }
            }
            std::vector<Candidate> next;
            for (std::size_t j = 0; j < alive.size(); ++j)
                if (keep[j])
                    next.push_back(std::move(alive[j]));
            alive = std::move(next);
            if (alive.size() < 2 || (crowded && alive.size() <= opt.n_elites))
                break;
        }

        // rank by mean over the instances every survivor shares
        auto common_mean = [k](const Candidate &c) {
            double s = 0;
            std::size_t n = 0;
            for (std::size_t b = 0; b < k; ++b)
                if (auto it = c.scores.find(b); it != c.scores.end())
                {
                    s += it->second;
                    ++n;
                }
            return n ? s / static_cast<double>(n) : kInf;
        };
        std::stable_sort(alive.begin(), alive.end(), [&](const Candidate &a, const Candidate &b) {
            const double ma = common_mean(a), mb = common_mean(b);
            return ma != mb ? ma < mb : a.id < b.id;
        });
        out.instances = k;
        out.survivors = std::move(alive);
        return out;
    }

    struct Elite
    {
        int config_id = 0;
        Configuration config;
        double tuner_aoc = 0;
        std::vector<double> verified_aoc;
        std::vector<metrics::RunTrace> traces;

        double verified_mean() const
        {
            if (verified_aoc.empty())
                return kInf;
            return std::accumulate(verified_aoc.begin(), verified_aoc.end(), 0.0) /
                   static_cast<double>(verified_aoc.size());
        }
    };

    struct TuneResult
    {
        std::vector<Elite> elites;
        std::vector<LogEntry> log;
        std::size_t evaluations = 0;
        int iterations = 0;
    };

    inline int n_iterations(const SearchSpace &space)
    {
        return 2 + static_cast<int>(std::floor(std::log2(static_cast<double>(std::max<std::size_t>(1, space.n_parameters())))));
    }

    /**
     * Iterated racing: each iteration races fresh samples around the current
     * elites (plus the elites themselves, keeping their scores) on an equal
     * share of the remaining budget.
     */
    inline TuneResult iterated_race(const SearchSpace &space, const Evaluator &evaluator, const TunerOptions &opt)
    {
        if (opt.total_budget < 50)
            throw std::invalid_argument("tuner budget must be at least 50");
        Rng rng(mix_seed(opt.seed, 7));
        TuneResult result;
        const int iterations = n_iterations(space);
        std::size_t remaining = opt.total_budget;
        int next_id = 0;
        std::vector<Candidate> elites;

        for (int it = 1; it <= iterations; ++it)
        {
            const std::size_t share = remaining / static_cast<std::size_t>(iterations - it + 1);
            const std::size_t per_config = std::max<std::size_t>(opt.min_results, static_cast<std::size_t>(it) + 4);
            const std::size_t n_configs = std::max<std::size_t>(2, share / per_config);

            std::vector<Candidate> racers;
            if (it == 1)
            {
                for (auto &cfg : initial_population(space, n_configs, rng))
                    racers.push_back({next_id++, std::move(cfg), it, {}});
            }
            else
            {
                racers = elites;
                const std::size_t fresh = n_configs > elites.size() ? n_configs - elites.size() : 1;
                std::vector<double> rank_weight;
                for (std::size_t r = 0; r < elites.size(); ++r)
                    rank_weight.push_back(static_cast<double>(elites.size() - r));
                const double total = std::accumulate(rank_weight.begin(), rank_weight.end(), 0.0);
                for (std::size_t i = 0; i < fresh; ++i)
                {
                    double u = rng.uniform() * total;
                    std::size_t parent = 0;
                    while (parent + 1 < elites.size() && u >= rank_weight[parent])
                        u -= rank_weight[parent++];
                    racers.push_back(
                        {next_id++, sample_around(elites[parent].config, space, it, iterations, rng), it, {}});
                }
            }
            if (racers.size() < 2)
                break;

            auto outcome = race(std::move(racers), evaluator, opt, share, it, &result.log);
            remaining -= outcome.evaluations;
            result.evaluations += outcome.evaluations;
            result.iterations = it;
            elites = std::move(outcome.survivors);
            if (elites.size() > opt.n_elites)
                elites.resize(opt.n_elites);
        }

        for (const auto &c : elites)
            result.elites.push_back({c.id, c.config, c.mean_score(), {}, {}});
        return result;
    }

    using Runner = std::function<metrics::RunTrace(const Configuration &, std::uint64_t seed)>;

    /// Re-runs every elite on the same seed list and ranks by the verified mean AOC.
    inline std::vector<Elite> verify(std::vector<Elite> elites, const Runner &runner, std::size_t n_runs,
                                     std::uint64_t seed_base, std::size_t jobs = 1,
                                     const metrics::TargetSet &targets = metrics::default_targets())
    {
        if (elites.empty())
            throw std::invalid_argument("verify needs at least one elite");
        const std::size_t total = elites.size() * n_runs;
        auto traces = parallel_map(total, jobs, [&](std::size_t i) {
            return runner(elites[i / n_runs].config, seed_base + i % n_runs);
        });
        for (std::size_t e = 0; e < elites.size(); ++e)
        {
            elites[e].verified_aoc.clear();
            elites[e].traces.clear();
            for (std::size_t r = 0; r < n_runs; ++r)
            {
                auto &trace = traces[e * n_runs + r];
                elites[e].verified_aoc.push_back(metrics::run_aoc(trace, targets));
                elites[e].traces.push_back(std::move(trace));
            }
        }
        std::stable_sort(elites.begin(), elites.end(),
                         [](const Elite &a, const Elite &b) { return a.verified_mean() < b.verified_mean(); });
        return elites;
    }

    inline nlohmann::ordered_json to_json(const std::vector<Elite> &elites)
    {
        auto arr = nlohmann::ordered_json::array();
        for (const auto &e : elites)
        {
            nlohmann::ordered_json j;
            j["config_id"] = e.config_id;
            j["config"] = modcma::to_json(e.config);
            j["tuner_aoc"] = e.tuner_aoc;
            j["verified_aoc"] = e.verified_aoc;
            arr.push_back(std::move(j));
        }
        return arr;
    }

    inline std::vector<Elite> elites_from_json(const nlohmann::ordered_json &arr)
    {
        if (!arr.is_array())
            throw std::runtime_error("elites JSON must be an array");
        std::vector<Elite> out;
        for (const auto &j : arr)
        {
            Elite e;
            e.config = configuration_from_json(j.at("config"));
            e.config_id = j.value("config_id", static_cast<int>(out.size()));
            e.tuner_aoc = j.at("tuner_aoc").get<double>();
            e.verified_aoc = j.value("verified_aoc", std::vector<double>{});
            out.push_back(std::move(e));
        }
        return out;
    }

    inline void write_log_csv(std::ostream &os, const std::vector<LogEntry> &log)
    {
        os << "iteration,config_id,seed,aoc\n";
        for (const auto &e : log)
            os << e.iteration << ',' << e.config_id << ',' << e.seed << ',' << format_double(e.aoc) << '\n';
    }
}
