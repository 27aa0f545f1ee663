#include <modcma/report.hpp>

#include <gtest/gtest.h>

#include <sstream>

using namespace modcma;
using namespace modcma::report;

namespace
{
    metrics::RunTrace hit_at(std::size_t t, double precision, std::size_t budget)
    {
        metrics::RunTrace tr;
        tr.budget = budget;
        tr.evals_used = budget;
        tr.record(t, precision);
        return tr;
    }

    std::vector<Configuration> with_ssa(const std::vector<std::pair<Ssa, int>> &counts)
    {
        std::vector<Configuration> out;
        for (const auto &[s, n] : counts)
            for (int i = 0; i < n; ++i)
            {
                Configuration c;
                c.ssa = s;
                out.push_back(c);
            }
        return out;
    }
}

TEST(Vbs, ImprovementOverDefault)
{
    const std::vector<SingleModuleRow> rows = {
        {"sphere", "default", 326},
        {"sphere", "active=true", 300},
        {"sphere", "ssa=tpa", 247},
        {"sphere", "elitist=true", 400},
        {"rot_ellipsoid", "default", 100},
        {"rot_ellipsoid", "active=true", 100},
    };
    const auto v = vbs_single_module(rows);
    ASSERT_EQ(v.size(), 2u);
    EXPECT_EQ(v[0].best, "ssa=tpa");
    EXPECT_EQ(v[0].vbs_aoc, 247);
    EXPECT_EQ(v[0].default_aoc, 326);
    EXPECT_NEAR(v[0].improvement, 0.2423, 5e-5);
    EXPECT_EQ(std::lround(100 * v[0].improvement), 24);
    EXPECT_EQ(v[1].best, "default");
    EXPECT_EQ(v[1].improvement, 0.0);

    EXPECT_THROW(vbs_single_module({{"sphere", "active=true", 1.0}}), std::invalid_argument);
}

TEST(Vbs, ArgminOverRandomTables)
{
    Rng rng(3);
    for (int rep = 0; rep < 100; ++rep)
    {
        std::vector<SingleModuleRow> rows = {{"f", "default", rng.uniform(0, 100)}};
        for (int i = 0; i < 14; ++i)
            rows.push_back({"f", "opt" + std::to_string(i), rng.uniform(0, 100)});
        std::size_t arg = 0;
        for (std::size_t i = 1; i < rows.size(); ++i)
            if (rows[i].aoc < rows[arg].aoc)
                arg = i;
        EXPECT_EQ(vbs_single_module(rows).front().best, rows[arg].label);
    }
}

TEST(Activation, CountsMatchElites)
{
    const auto t = activation_counts(with_ssa({{Ssa::psr, 14}, {Ssa::msr, 1}, {Ssa::csa, 5}}));
    EXPECT_EQ(t.n_elites, 20u);
    EXPECT_EQ(t.count("ssa", "psr"), 14u);
    EXPECT_EQ(t.count("ssa", "msr"), 1u);
    EXPECT_EQ(t.count("ssa", "csa"), 5u);
    EXPECT_EQ(t.count("ssa", "tpa"), 0u);
    for (const auto &[m, opts] : t.modules)
    {
        std::size_t sum = 0;
        for (const auto &[o, c] : opts)
            sum += c;
        EXPECT_EQ(sum, 20u) << m;
    }

    const auto single = activation_counts({Configuration{}});
    for (const auto &[m, opts] : single.modules)
    {
        std::size_t ones = 0;
        for (const auto &[o, c] : opts)
            ones += c == 1;
        EXPECT_EQ(ones, 1u);
    }
    EXPECT_THROW(activation_counts({}), std::invalid_argument);
}

TEST(Activation, CsvRoundTrip)
{
    Configuration odd;
    odd.active = true;
    odd.bound_correction = BoundCorrection::cotn;
    odd.base_sampler = BaseSampler::halton;
    std::vector<std::pair<std::string, ActivationTable>> tables = {
        {"sphere", activation_counts(with_ssa({{Ssa::psr, 3}, {Ssa::tpa, 2}}))},
        {"sep_rastrigin", activation_counts({odd, Configuration{}})},
    };
    std::stringstream ss;
    write_activation_csv(ss, tables);
    const auto back = read_activation_csv(ss);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back, tables);
}

TEST(Improvement, RelativeAoc)
{
    EXPECT_NEAR(*relative_improvement(1480, 1159), -0.277, 5e-4);
    EXPECT_EQ(*relative_improvement(500, 500), 0.0);
    EXPECT_GT(*relative_improvement(0.829 * 34433, 34433), 0.0);
    EXPECT_FALSE(relative_improvement(10, 0));
    std::ostringstream os;
    write_improvement_csv(os, {{"sphere", 0.25}, {"linear_slope", std::nullopt}});
    EXPECT_EQ(os.str(), "function,improvement\nsphere,0.25\nlinear_slope,undefined\n");
}

TEST(Divergence, IdenticalSetsGiveZero)
{
    Configuration a;
    a.active = true;
    a.mirrored = Mirrored::mirrored;
    const std::vector<Configuration> set = {a, Configuration{}, a};
    for (const auto &d : distribution_divergence(set, set))
        EXPECT_EQ(d.delta, 0.0) << d.module;
}

TEST(Divergence, HandBuiltSets)
{
    Configuration m1, m2, p1;
    m1.mirrored = Mirrored::mirrored;
    m2.mirrored = Mirrored::mirrored_pairwise;
    p1.active = true;
    // baseline mirrored: off 2, mirrored 1, pairwise 1 ; experiment: off 0, mirrored 1, pairwise 3
    const std::vector<Configuration> base = {Configuration{}, Configuration{}, m1, m2};
    const std::vector<Configuration> exp = {m1, m2, m2, m2};
    const auto deltas = distribution_divergence(base, exp);
    auto get = [&](const std::string &m) {
        for (const auto &d : deltas)
            if (d.module == m)
                return d;
        return Delta{};
    };
    EXPECT_NEAR(get("mirrored").delta, 0.5 * (0.5 + 0.0 + 0.5), 1e-15);
    EXPECT_FALSE(get("mirrored").binary);
    EXPECT_EQ(get("active").delta, 0.0);

    const std::vector<Configuration> on = {p1, p1, p1, Configuration{}};
    EXPECT_NEAR(distribution_divergence(base, on).front().delta, 0.75, 1e-15);
    EXPECT_TRUE(distribution_divergence(base, on).front().binary);

    // no overlap on a ternary module
    Configuration s;
    s.base_sampler = BaseSampler::sobol;
    Configuration h;
    h.base_sampler = BaseSampler::halton;
    const auto tv = distribution_divergence({s, s}, {h, h});
    for (const auto &d : tv)
        if (d.module == "base_sampler")
            EXPECT_EQ(d.delta, 1.0);
}

TEST(Ert, StandardFormula)
{
    std::vector<metrics::RunTrace> all;
    for (int i = 0; i < 25; ++i)
        all.push_back(hit_at(100, 1e-9, 5000));
    EXPECT_EQ(ert(all, 1e-8), 100.0);

    const std::size_t B = 2000;
    std::vector<metrics::RunTrace> half;
    for (int i = 0; i < 10; ++i)
        half.push_back(hit_at(B, 1e-9, B));
    for (int i = 0; i < 10; ++i)
        half.push_back(hit_at(5, 1.0, B));
    EXPECT_EQ(ert(half, 1e-8), 2.0 * B);

    EXPECT_EQ(ert({hit_at(5, 1.0, B)}, 1e-8), kInf);
}

TEST(Ecdf, GridMatchesMetrics)
{
    Rng rng(8);
    std::vector<metrics::RunTrace> traces;
    for (int i = 0; i < 6; ++i)
    {
        metrics::RunTrace t;
        t.budget = 3000;
        t.evals_used = 3000;
        double p = 100;
        for (std::size_t e = 1 + rng.index(20); e <= 3000; e += 1 + rng.index(200))
            t.record(e, p *= rng.uniform(0.05, 0.9));
        traces.push_back(t);
    }
    const auto targets = metrics::default_targets();
    const auto data = export_ecdf_ert(traces, targets);
    const auto grid = log_grid(3000);
    ASSERT_EQ(data.ecdf.size(), grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
        EXPECT_EQ(data.ecdf[i].first, grid[i]);
        EXPECT_EQ(data.ecdf[i].second, metrics::ecdf(traces, targets, grid[i]));
    }
    EXPECT_EQ(grid.front(), 1u);
    EXPECT_EQ(grid.back(), 3000u);
    EXPECT_TRUE(std::is_sorted(grid.begin(), grid.end()));
    EXPECT_EQ(data.ert.size(), targets.values.size());
    EXPECT_THROW(export_ecdf_ert({}, targets), std::invalid_argument);
}

TEST(InitialRace, RelativeToDefaultOnSharedSeeds)
{
    const std::vector<tuner::LogEntry> log = {
        {1, 0, 11, 200}, {1, 0, 12, 100}, {1, 1, 11, 150}, {1, 1, 12, 75},
        {1, 2, 11, 300}, {2, 0, 13, 1},   {2, 5, 13, 1},
    };
    const auto r = initial_relative_aoc(log);
    ASSERT_EQ(r.size(), 3u);
    EXPECT_EQ(r[0].config_id, 0);
    EXPECT_EQ(*r[0].relative, 0.0);
    EXPECT_EQ(r[1].n_seeds, 2u);
    EXPECT_NEAR(*r[1].relative, 0.25, 1e-15);
    EXPECT_EQ(r[2].n_seeds, 1u);
    EXPECT_NEAR(*r[2].relative, -0.5, 1e-15);

    std::stringstream ss;
    tuner::write_log_csv(ss, log);
    const auto back = read_log_csv(ss);
    ASSERT_EQ(back.size(), log.size());
    EXPECT_EQ(back[3].aoc, 75);
    EXPECT_EQ(back[5].iteration, 2);

    EXPECT_THROW(initial_relative_aoc({{1, 3, 1, 5.0}}), std::invalid_argument);
}
