#pragma once

#include "common.hpp"

#include <algorithm>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace modcma::metrics
{
    struct Improvement
    {
        std::size_t evals = 0;
        double best_precision = kInf;

        bool operator==(const Improvement &) const = default;
    };

    /// Monotone best-so-far record of one run.
    struct RunTrace
    {
        std::vector<Improvement> improvements;
        std::size_t budget = 0;
        /// evaluations actually consumed (<= budget)
        std::size_t evals_used = 0;
        std::string config_id;
        std::string fid;
        std::uint64_t iid = 0;
        std::uint64_t seed = 0;

        /// Appends (evals, precision) if it strictly improves on the last entry.
        bool record(std::size_t evals, double precision)
        {
            if (!improvements.empty() && !(precision < improvements.back().best_precision))
                return false;
            improvements.push_back({evals, precision});
            return true;
        }

        double final_precision() const { return improvements.empty() ? kInf : improvements.back().best_precision; }

        bool valid() const
        {
            for (std::size_t i = 0; i < improvements.size(); ++i)
            {
                if (improvements[i].evals < 1 || improvements[i].evals > budget)
                    return false;
                if (i > 0 && (improvements[i].evals <= improvements[i - 1].evals ||
                              !(improvements[i].best_precision < improvements[i - 1].best_precision)))
                    return false;
            }
            return true;
        }
    };

    struct TargetSet
    {
        std::vector<double> values;
    };

    /// 51 targets 10^(2 - k/5), k = 0..50, from 1e2 down to 1e-8.
    inline TargetSet default_targets()
    {
        TargetSet v;
        v.values.reserve(51);
        for (int k = 0; k <= 50; ++k)
            v.values.push_back(std::pow(10.0, 2.0 - k / 5.0));
        return v;
    }

    /// First evaluation count reaching precision <= v; empty means never.
    inline std::optional<std::size_t> hitting_time(const RunTrace &trace, double v)
    {
        for (const auto &imp : trace.improvements)
            if (imp.best_precision <= v)
                return imp.evals <= trace.budget ? std::optional(imp.evals) : std::nullopt;
        return std::nullopt;
    }

    inline double ecdf(std::span<const RunTrace> traces, const TargetSet &targets, std::size_t t)
    {
        if (traces.empty() || targets.values.empty())
            throw std::invalid_argument("ecdf needs at least one trace and one target");
        std::size_t hits = 0;
        for (const auto &trace : traces)
            for (double v : targets.values)
                if (const auto h = hitting_time(trace, v); h && *h <= t)
                    ++hits;
        return static_cast<double>(hits) / static_cast<double>(traces.size() * targets.values.size());
    }

    struct AocScore
    {
        double aoc = 0;
        double auc = 0;
        std::size_t budget = 0;
        std::size_t n_runs = 0;
        /// auc = hit_mass / pairs and aoc = (budget * pairs - hit_mass) / pairs, exactly
        std::int64_t hit_mass = 0;
        std::int64_t pairs = 0;
    };

    /**
     * AUC as the unit-step sum of the ECDF over t = 1..B, accumulated from the
     * sorted hitting times: a pair hit at h contributes B - h + 1.
     */
    inline AocScore aoc(std::span<const RunTrace> traces, const TargetSet &targets, std::size_t budget)
    {
        if (traces.empty() || targets.values.empty())
            throw std::invalid_argument("aoc needs at least one trace and one target");
        AocScore s;
        s.budget = budget;
        s.n_runs = traces.size();
        s.pairs = static_cast<std::int64_t>(traces.size() * targets.values.size());
        for (const auto &trace : traces)
        {
            std::size_t cursor = 0;
            // targets are descending, so hitting times are non-decreasing
            for (double v : targets.values)
            {
                while (cursor < trace.improvements.size() && trace.improvements[cursor].best_precision > v)
                    ++cursor;
                if (cursor == trace.improvements.size())
                    break;
                const std::size_t h = trace.improvements[cursor].evals;
                if (h >= 1 && h <= budget)
                    s.hit_mass += static_cast<std::int64_t>(budget - h + 1);
            }
        }
        const auto total = static_cast<std::int64_t>(budget) * s.pairs;
        s.auc = static_cast<double>(s.hit_mass) / static_cast<double>(s.pairs);
        s.aoc = static_cast<double>(total - s.hit_mass) / static_cast<double>(s.pairs);
        return s;
    }

    inline double run_aoc(const RunTrace &trace, const TargetSet &targets = default_targets())
    {
        return aoc(std::span(&trace, 1), targets, trace.budget).aoc;
    }

    inline void write_trace_csv(std::ostream &os, const RunTrace &trace)
    {
        os << "evals,best_precision\n";
        for (const auto &imp : trace.improvements)
            os << imp.evals << ',' << format_double(imp.best_precision) << '\n';
    }

    inline RunTrace read_trace_csv(std::istream &is, std::size_t budget)
    {
        RunTrace trace;
        trace.budget = budget;
        std::string line;
        if (!std::getline(is, line) || line != "evals,best_precision")
            throw std::runtime_error("trace CSV must start with 'evals,best_precision'");
        while (std::getline(is, line))
        {
            if (line.empty())
                continue;
            const auto comma = line.find(',');
            if (comma == std::string::npos)
                throw std::runtime_error("malformed trace row: " + line);
            const auto evals = static_cast<std::size_t>(std::stoull(line.substr(0, comma)));
            const double precision = std::stod(line.substr(comma + 1));
            trace.improvements.push_back({evals, precision});
        }
        trace.evals_used = trace.improvements.empty() ? 0 : trace.improvements.back().evals;
        return trace;
    }

    inline constexpr std::string_view kScoreHeader = "config_id,fid,iid,n_runs,budget,aoc";

    inline std::string score_row(std::string_view config_id, std::string_view fid, std::uint64_t iid,
                                 const AocScore &score)
    {
        std::ostringstream os;
        os << config_id << ',' << fid << ',' << iid << ',' << score.n_runs << ',' << score.budget << ','
           << format_double(score.aoc);
        return os.str();
    }
}
