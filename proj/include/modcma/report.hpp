#pragma once

#include "metrics.hpp"
#include "modules.hpp"
#include "tuner.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace modcma::report
{
    inline constexpr std::string_view kDefaultLabel = "default";

    struct SingleModuleRow
    {
        std::string function;
        /// "default" or a module=option label
        std::string label;
        double aoc = 0;
    };

    struct VbsRow
    {
        std::string function;
        std::string best;
        double vbs_aoc = 0;
        double default_aoc = 0;
        double improvement = 0;
    };

    /// Per function, the best single-module variant against the default. Ties keep the earlier row.
    inline std::vector<VbsRow> vbs_single_module(const std::vector<SingleModuleRow> &rows)
    {
        std::vector<std::string> order;
        std::map<std::string, std::vector<const SingleModuleRow *>> by_function;
        for (const auto &r : rows)
        {
            if (!by_function.contains(r.function))
                order.push_back(r.function);
            by_function[r.function].push_back(&r);
        }
        std::vector<VbsRow> out;
        for (const auto &fn : order)
        {
            const auto &group = by_function[fn];
            const auto def = std::find_if(group.begin(), group.end(),
                                          [](const auto *r) { return r->label == kDefaultLabel; });
            if (def == group.end())
                throw std::invalid_argument("no default row for function '" + fn + "'");
            const SingleModuleRow *best = *def;
            for (const auto *r : group)
                if (r->aoc < best->aoc)
                    best = r;
            VbsRow v{fn, best->label, best->aoc, (*def)->aoc, 0.0};
            v.improvement = v.default_aoc == 0 ? 0.0 : 1.0 - v.vbs_aoc / v.default_aoc;
            out.push_back(std::move(v));
        }
        return out;
    }

    inline void write_vbs_csv(std::ostream &os, const std::vector<VbsRow> &rows)
    {
        os << "function,best,vbs_aoc,default_aoc,improvement\n";
        for (const auto &r : rows)
            os << r.function << ',' << r.best << ',' << format_double(r.vbs_aoc) << ','
               << format_double(r.default_aoc) << ',' << format_double(r.improvement) << '\n';
    }

    /// module -> option -> count, every option listed (zeros included) in module table order.
    struct ActivationTable
    {
        std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::size_t>>>> modules;
        std::size_t n_elites = 0;

        std::size_t count(std::string_view module, std::string_view option) const
        {
            for (const auto &[m, opts] : modules)
                if (m == module)
                    for (const auto &[o, c] : opts)
                        if (o == option)
                            return c;
            return 0;
        }

        double fraction(std::string_view module, std::string_view option) const
        {
            return n_elites ? static_cast<double>(count(module, option)) / static_cast<double>(n_elites) : 0.0;
        }

        bool operator==(const ActivationTable &) const = default;
    };

    inline ActivationTable activation_counts(const std::vector<Configuration> &elites)
    {
        if (elites.empty())
            throw std::invalid_argument("activation counts need at least one elite");
        ActivationTable t;
        t.n_elites = elites.size();
        for (const auto &m : modules::all_modules())
        {
            std::vector<std::pair<std::string, std::size_t>> opts;
            for (const auto &o : m.options)
                opts.emplace_back(o, 0);
            for (const auto &cfg : elites)
            {
                const auto v = modules::get_option(cfg, m.name);
                for (auto &[o, c] : opts)
                    if (o == v)
                        ++c;
            }
            t.modules.emplace_back(m.name, std::move(opts));
        }
        return t;
    }

    inline std::vector<Configuration> configurations(const std::vector<tuner::Elite> &elites)
    {
        std::vector<Configuration> out;
        for (const auto &e : elites)
            out.push_back(e.config);
        return out;
    }

    inline void write_activation_csv(std::ostream &os, const std::vector<std::pair<std::string, ActivationTable>> &tables)
    {
        os << "function,option,count\n";
        for (const auto &[fn, t] : tables)
            for (const auto &[m, opts] : t.modules)
                for (const auto &[o, c] : opts)
                    os << fn << ',' << modules::label(m, o) << ',' << c << '\n';
    }

    inline std::vector<std::pair<std::string, ActivationTable>> read_activation_csv(std::istream &is)
    {
        std::string line;
        if (!std::getline(is, line) || line != "function,option,count")
            throw std::runtime_error("activation CSV must start with 'function,option,count'");
        std::vector<std::pair<std::string, ActivationTable>> out;
        while (std::getline(is, line))
        {
            if (line.empty())
                continue;
            const auto c1 = line.find(',');
            const auto c2 = line.rfind(',');
            const auto eq = line.find('=', c1);
            if (c1 == std::string::npos || c2 == c1 || eq == std::string::npos || eq > c2)
                throw std::runtime_error("malformed activation row: " + line);
            const std::string fn = line.substr(0, c1);
            const std::string module = line.substr(c1 + 1, eq - c1 - 1);
            const std::string option = line.substr(eq + 1, c2 - eq - 1);
            const auto count = static_cast<std::size_t>(std::stoull(line.substr(c2 + 1)));
            if (out.empty() || out.back().first != fn)
                out.push_back({fn, {}});
            auto &mods = out.back().second.modules;
            if (mods.empty() || mods.back().first != module)
                mods.push_back({module, {}});
            mods.back().second.emplace_back(option, count);
        }
        for (auto &[fn, t] : out)
        {
            // every module's counts sum to the elite count
            std::size_t n = 0;
            if (!t.modules.empty())
                for (const auto &[o, c] : t.modules.front().second)
                    n += c;
            t.n_elites = n;
        }
        return out;
    }

    /// 1 - ext/base; undefined when the base AOC is zero.
    inline std::optional<double> relative_improvement(double ext, double base)
    {
        if (base == 0.0)
            return std::nullopt;
        return 1.0 - ext / base;
    }

    inline void write_improvement_csv(std::ostream &os,
                                      const std::vector<std::pair<std::string, std::optional<double>>> &rows)
    {
        os << "function,improvement\n";
        for (const auto &[fn, v] : rows)
            os << fn << ',' << (v ? format_double(*v) : std::string("undefined")) << '\n';
    }

    struct Delta
    {
        std::string module;
        double delta = 0;
        /// true for the fraction difference of a binary module, false for a TV distance
        bool binary = false;
    };

    /// Binary modules: fraction on in `experiment` minus in `baseline`. Others: total variation distance.
    inline std::vector<Delta> distribution_divergence(const std::vector<Configuration> &baseline,
                                                      const std::vector<Configuration> &experiment)
    {
        const auto a = activation_counts(baseline);
        const auto b = activation_counts(experiment);
        std::vector<Delta> out;
        for (const auto &m : modules::all_modules())
        {
            if (m.binary())
            {
                out.push_back({m.name, b.fraction(m.name, "true") - a.fraction(m.name, "true"), true});
                continue;
            }
            double tv = 0.0;
            for (const auto &o : m.options)
                tv += std::abs(a.fraction(m.name, o) - b.fraction(m.name, o));
            out.push_back({m.name, 0.5 * tv, false});
        }
        return out;
    }

    inline void write_delta_csv(std::ostream &os, const std::vector<Delta> &deltas)
    {
        os << "module,delta\n";
        for (const auto &d : deltas)
            os << d.module << ',' << format_double(d.delta) << '\n';
    }

    /// Log-spaced integer grid 1..budget, `per_decade` points per decade, budget included.
    inline std::vector<std::size_t> log_grid(std::size_t budget, int per_decade = 20)
    {
        std::vector<std::size_t> grid;
        if (budget == 0)
            return grid;
        const double decades = std::log10(static_cast<double>(budget));
        const int n = static_cast<int>(std::ceil(decades * per_decade));
        for (int k = 0; k <= n; ++k)
        {
            const auto t = std::min(budget, static_cast<std::size_t>(std::llround(std::pow(10.0, k / static_cast<double>(per_decade)))));
            if (grid.empty() || t > grid.back())
                grid.push_back(t);
        }
        if (grid.back() != budget)
            grid.push_back(budget);
        return grid;
    }

    /// Expected running time to precision v: evaluations spent until hit (or all used) over the number of hits.
    inline double ert(const std::vector<metrics::RunTrace> &traces, double v)
    {
        std::size_t spent = 0, hits = 0;
        for (const auto &t : traces)
        {
            if (const auto h = metrics::hitting_time(t, v))
            {
                spent += *h;
                ++hits;
            }
            else
                spent += t.evals_used ? t.evals_used : t.budget;
        }
        return hits ? static_cast<double>(spent) / static_cast<double>(hits) : kInf;
    }

    struct EcdfErt
    {
        std::vector<std::pair<std::size_t, double>> ecdf;
        std::vector<std::pair<double, double>> ert;
    };

    inline EcdfErt export_ecdf_ert(const std::vector<metrics::RunTrace> &traces, const metrics::TargetSet &targets)
    {
        if (traces.empty())
            throw std::invalid_argument("ECDF export needs at least one trace");
        EcdfErt out;
        std::size_t budget = 0;
        for (const auto &t : traces)
            budget = std::max(budget, t.budget);
        for (std::size_t t : log_grid(budget))
            out.ecdf.emplace_back(t, metrics::ecdf(traces, targets, t));
        for (double v : targets.values)
            out.ert.emplace_back(v, ert(traces, v));
        return out;
    }

    inline void write_ecdf_csv(std::ostream &os, const EcdfErt &data)
    {
        os << "evals,ecdf\n";
        for (const auto &[t, e] : data.ecdf)
            os << t << ',' << format_double(e) << '\n';
    }

    inline void write_ert_csv(std::ostream &os, const EcdfErt &data)
    {
        os << "target,ert\n";
        for (const auto &[v, e] : data.ert)
            os << format_double(v) << ',' << (std::isfinite(e) ? format_double(e) : std::string("inf")) << '\n';
    }

    struct InitialRelative
    {
        int config_id = 0;
        std::size_t n_seeds = 0;
        std::optional<double> relative;
    };

    /**
     * Relative AOC of every configuration raced in the first iteration against
     * the default configuration (id 0), over the seeds both were run on.
     * Positive means lower AOC than the default.
     */
    inline std::vector<InitialRelative> initial_relative_aoc(const std::vector<tuner::LogEntry> &log)
    {
        std::map<int, std::map<std::uint64_t, double>> scores;
        for (const auto &e : log)
            if (e.iteration == 1)
                scores[e.config_id][e.seed] = e.aoc;
        if (!scores.contains(0))
            throw std::invalid_argument("run log has no default configuration in the first iteration");
        const auto &def = scores.at(0);
        std::vector<InitialRelative> out;
        for (const auto &[id, s] : scores)
        {
            double sum_c = 0, sum_d = 0;
            std::size_t n = 0;
            for (const auto &[seed, v] : s)
                if (auto it = def.find(seed); it != def.end())
                {
                    sum_c += v;
                    sum_d += it->second;
                    ++n;
                }
            InitialRelative r{id, n, std::nullopt};
            if (n)
                r.relative = relative_improvement(sum_c / n, sum_d / n);
            out.push_back(r);
        }
        return out;
    }

    inline void write_initial_csv(std::ostream &os, const std::vector<InitialRelative> &rows)
    {
        os << "config_id,n_seeds,relative_aoc\n";
        for (const auto &r : rows)
            os << r.config_id << ',' << r.n_seeds << ','
               << (r.relative ? format_double(*r.relative) : std::string("undefined")) << '\n';
    }

    inline std::vector<tuner::LogEntry> read_log_csv(std::istream &is)
    {
        std::string line;
        if (!std::getline(is, line) || line != "iteration,config_id,seed,aoc")
            throw std::runtime_error("run log must start with 'iteration,config_id,seed,aoc'");
        std::vector<tuner::LogEntry> out;
        while (std::getline(is, line))
        {
            if (line.empty())
                continue;
            std::istringstream row(line);
            std::string a, b, c, d;
            if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, c, ',') ||
                !std::getline(row, d))
                throw std::runtime_error("malformed run log row: " + line);
            out.push_back({std::stoi(a), std::stoi(b), std::stoull(c), std::stod(d)});
        }
        return out;
    }
}
