#include <modcma/tuner.hpp>

#include <gtest/gtest.h>

#include <map>
#include <set>
#include <sstream>

using namespace modcma;
using namespace modcma::tuner;

namespace
{
    double effective(const Configuration &cfg, const char *name)
    {
        return modules::effective_continuous(cfg, name, 5);
    }

    // distance of the learning rates to a fixed point, plus a little instance noise
    double bowl(const Configuration &cfg, std::uint64_t seed)
    {
        const double d = std::pow(effective(cfg, "c1") - 0.2, 2) + std::pow(effective(cfg, "c_mu") - 0.5, 2) +
                         std::pow(effective(cfg, "c_c") - 0.6, 2) + std::pow(effective(cfg, "c_sigma") - 0.4, 2);
        return d + 1e-3 * static_cast<double>(seed % 1000) / 1000.0;
    }
}

TEST(Space, ParameterCounts)
{
    const auto base = build_space(Extension::none);
    EXPECT_EQ(base.active_categorical(), 10u);
    EXPECT_EQ(base.continuous.size(), 4u);
    EXPECT_EQ(base.n_parameters(), 14u);
    EXPECT_EQ(base.find("ssa")->options, (std::vector<std::string>{"csa", "tpa"}));
    EXPECT_EQ(base.find("bound_correction")->options, (std::vector<std::string>{"none"}));

    const auto ssa = build_space(Extension::ssa_new);
    EXPECT_EQ(ssa.find("ssa")->options.size(), 7u);
    EXPECT_EQ(ssa.active_categorical(), 10u);
    const auto bc = build_space(Extension::boundary_new);
    EXPECT_EQ(bc.find("bound_correction")->options.size(), 6u);
    EXPECT_EQ(bc.active_categorical(), 11u);

    EXPECT_THROW(build_space(true, true), ConfigError);
    EXPECT_EQ(n_iterations(base), 5);
    EXPECT_EQ(parse_extension("ssa"), Extension::ssa_new);
    EXPECT_THROW(parse_extension("both"), ConfigError);
}

TEST(Sampling, InitialPopulationHasDefaultFirst)
{
    const auto space = build_space(Extension::boundary_new);
    Rng rng(4);
    const auto pop = initial_population(space, 40, rng);
    ASSERT_EQ(pop.size(), 40u);
    EXPECT_EQ(pop.front(), Configuration{});
    EXPECT_EQ(std::count(pop.begin(), pop.end(), Configuration{}), 1);
    for (const auto &cfg : pop)
    {
        EXPECT_NO_THROW(cfg.validate());
        for (const auto &m : space.categorical)
        {
            const auto v = modules::get_option(cfg, m.name);
            EXPECT_NE(std::find(m.options.begin(), m.options.end(), v), m.options.end());
        }
    }
    for (std::size_t i = 1; i < pop.size(); ++i)
        for (const auto &c : space.continuous)
        {
            const auto v = modules::continuous(pop[i], c.name);
            ASSERT_TRUE(v);
            EXPECT_LE(*v, c.hi);
            EXPECT_TRUE(c.lo_open ? *v > c.lo : *v >= c.lo);
        }
    Rng again(4);
    EXPECT_EQ(initial_population(space, 40, again), pop);
    EXPECT_THROW(initial_population(space, 1, again), std::invalid_argument);
}

TEST(Sampling, SchedulesAndNeighbourhood)
{
    EXPECT_EQ(keep_probability(1, 5), 0.5);
    EXPECT_NEAR(keep_probability(5, 5), 0.9, 1e-15);
    EXPECT_EQ(continuous_spread(2), 0.25);
    EXPECT_NEAR(continuous_spread(4), 0.25 * 0.36, 1e-15);

    const auto space = build_space(Extension::none);
    Configuration parent;
    parent.c1 = 0.999;
    Rng rng(9);
    for (int i = 0; i < 500; ++i)
    {
        const auto child = sample_around(parent, space, 5, 5, rng);
        EXPECT_NO_THROW(child.validate());
        EXPECT_LE(*child.c1, 1.0);
        EXPECT_GT(*child.c_c, 0.0);
        EXPECT_EQ(child.bound_correction, BoundCorrection::none);
    }
}

TEST(Statistics, FriedmanMatchesClosedForm)
{
    // five blocks, a strict order: rank sums 5, 10, 15, chi^2 = 10 on 2 dof
    std::vector<std::vector<double>> blocks(5, {1.0, 2.0, 3.0});
    const auto r = friedman_test(blocks, 0.05);
    EXPECT_EQ(r.rank_sums, (std::vector<double>{5, 10, 15}));
    EXPECT_NEAR(r.statistic, 10.0, 1e-12);
    EXPECT_NEAR(r.p_value, std::exp(-5.0), 1e-12);
    EXPECT_TRUE(r.rejected);

    const std::vector<std::vector<double>> flat(6, {4.0, 4.0, 4.0});
    EXPECT_FALSE(friedman_test(flat, 0.05).rejected);

    EXPECT_NEAR(sign_test_p(std::vector<double>{1, 1, 1, 1, 1}, std::vector<double>{2, 2, 2, 2, 2}), 1.0 / 32, 1e-15);
    EXPECT_NEAR(sign_test_p(std::vector<double>{1, 1, 3, 1}, std::vector<double>{2, 2, 2, 2}), 5.0 / 16, 1e-15);
}

TEST(Race, ClearlyWorseConfigurationIsDropped)
{
    Configuration good, bad;
    bad.active = true;
    std::vector<Candidate> alive = {{0, good, 1, {}}, {1, bad, 1, {}}};
    TunerOptions opt;
    auto eval = [](const Configuration &c, std::uint64_t) { return c.active ? 20.0 : 10.0; };
    const auto out = race(alive, eval, opt, 1000, 1);
    ASSERT_EQ(out.survivors.size(), 1u);
    EXPECT_EQ(out.survivors[0].id, 0);
    EXPECT_EQ(out.instances, 5u);
    EXPECT_EQ(out.evaluations, 10u);
}

TEST(Race, TiesRunUntilBudget)
{
    std::vector<Candidate> alive;
    for (int i = 0; i < 4; ++i)
        alive.push_back({i, Configuration{}, 1, {}});
    TunerOptions opt;
    auto eval = [](const Configuration &, std::uint64_t) { return 7.0; };
    const auto out = race(alive, eval, opt, 42, 1);
    EXPECT_EQ(out.survivors.size(), 4u);
    EXPECT_EQ(out.evaluations, 40u);
}

TEST(Race, FailuresScoreWorst)
{
    Configuration good, bad;
    bad.elitist = true;
    std::vector<Candidate> alive = {{0, bad, 1, {}}, {1, good, 1, {}}};
    TunerOptions opt;
    auto eval = [](const Configuration &c, std::uint64_t) -> double {
        if (c.elitist)
            throw std::runtime_error("boom");
        return 5.0;
    };
    const auto out = race(alive, eval, opt, 1000, 1);
    ASSERT_EQ(out.survivors.size(), 1u);
    EXPECT_EQ(out.survivors[0].id, 1);
}

TEST(IteratedRace, RespectsBudgetAndEliteCount)
{
    const auto space = build_space(Extension::ssa_new);
    for (std::size_t budget : {50u, 100u, 333u, 1000u})
    {
        TunerOptions opt;
        opt.total_budget = budget;
        opt.seed = budget;
        const auto res = iterated_race(space, bowl, opt);
        EXPECT_LE(res.evaluations, budget);
        EXPECT_EQ(res.log.size(), res.evaluations);
        EXPECT_GE(res.elites.size(), 1u);
        EXPECT_LE(res.elites.size(), 5u);
        std::set<int> ids;
        for (const auto &e : res.elites)
            ids.insert(e.config_id);
        EXPECT_EQ(ids.size(), res.elites.size());
    }
    TunerOptions tiny;
    tiny.total_budget = 49;
    EXPECT_THROW(iterated_race(space, bowl, tiny), std::invalid_argument);
}

TEST(IteratedRace, FindsContinuousOptimum)
{
    const auto space = build_space(Extension::none);
    int close = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed)
    {
        TunerOptions opt;
        opt.seed = seed;
        const auto res = iterated_race(space, bowl, opt);
        const auto &best = res.elites.front().config;
        close += std::abs(effective(best, "c1") - 0.2) <= 0.1 && std::abs(effective(best, "c_mu") - 0.5) <= 0.1 &&
                 std::abs(effective(best, "c_c") - 0.6) <= 0.1 && std::abs(effective(best, "c_sigma") - 0.4) <= 0.1;
    }
    EXPECT_GE(close, 18);
}

TEST(IteratedRace, DefaultRunsAtLeastMinResultsInFirstRace)
{
    const auto space = build_space(Extension::none);
    TunerOptions opt;
    const auto res = iterated_race(space, bowl, opt);
    const auto n = std::count_if(res.log.begin(), res.log.end(),
                                 [](const LogEntry &e) { return e.iteration == 1 && e.config_id == 0; });
    EXPECT_GE(n, 5);
}

TEST(IteratedRace, SeedsArePairedAtEveryTest)
{
    const auto space = build_space(Extension::ssa_new);
    TunerOptions opt;
    opt.seed = 5;
    const auto res = iterated_race(space, bowl, opt);
    // within an iteration, every config evaluated on the k-th seed was also evaluated on all earlier ones
    std::map<int, std::map<int, std::set<std::uint64_t>>> seen;
    std::map<int, std::vector<std::uint64_t>> order;
    for (const auto &e : res.log)
    {
        seen[e.iteration][e.config_id].insert(e.seed);
        auto &o = order[e.iteration];
        if (std::find(o.begin(), o.end(), e.seed) == o.end())
            o.push_back(e.seed);
    }
    for (const auto &[it, configs] : seen)
        for (const auto &[id, seeds] : configs)
        {
            std::set<std::uint64_t> prefix;
            for (const auto s : order[it])
            {
                if (!seeds.contains(s))
                    break;
                prefix.insert(s);
            }
            EXPECT_EQ(prefix, seeds) << "iteration " << it << " config " << id;
        }
}

TEST(Race, BestRankSumIsNeverEliminated)
{
    Rng rng(21);
    for (int rep = 0; rep < 50; ++rep)
    {
        std::vector<Candidate> alive;
        std::vector<double> offset;
        for (int i = 0; i < 8; ++i)
        {
            Configuration c;
            c.c1 = 0.1 * i;
            alive.push_back({i, c, 1, {}});
            offset.push_back(rng.uniform(0, 2));
        }
        const int best = static_cast<int>(std::min_element(offset.begin(), offset.end()) - offset.begin());
        auto eval = [&](const Configuration &c, std::uint64_t seed) {
            Rng noise(seed * 31 + static_cast<std::uint64_t>(std::lround(*c.c1 * 10)));
            return offset[static_cast<std::size_t>(std::lround(*c.c1 * 10))] + 0.05 * noise.normal();
        };
        TunerOptions opt;
        opt.seed = static_cast<std::uint64_t>(rep);
        const auto out = race(alive, eval, opt, 200, 1);
        bool present = false;
        for (const auto &c : out.survivors)
            present = present || c.id == best;
        EXPECT_TRUE(present) << rep;
    }
}

TEST(IteratedRace, Reproducible)
{
    const auto space = build_space(Extension::boundary_new);
    TunerOptions opt;
    opt.seed = 77;
    const auto a = iterated_race(space, bowl, opt);
    opt.jobs = 3;
    const auto b = iterated_race(space, bowl, opt);
    EXPECT_EQ(to_json(a.elites).dump(), to_json(b.elites).dump());
    std::ostringstream la, lb;
    write_log_csv(la, a.log);
    write_log_csv(lb, b.log);
    EXPECT_EQ(la.str(), lb.str());
}

TEST(Verify, SameSeedsForEveryElite)
{
    Configuration c;
    std::vector<Elite> elites = {{3, c, 1.0, {}, {}}, {8, c, 2.0, {}, {}}};
    auto runner = [](const Configuration &, std::uint64_t seed) {
        metrics::RunTrace t;
        t.budget = 100;
        t.evals_used = 100;
        t.seed = seed;
        t.record(1 + seed % 50, 1.0 / static_cast<double>(seed));
        return t;
    };
    const auto v = verify(elites, runner, 25, 1);
    ASSERT_EQ(v.size(), 2u);
    EXPECT_EQ(v[0].verified_aoc.size(), 25u);
    EXPECT_EQ(v[0].verified_aoc, v[1].verified_aoc);
    EXPECT_EQ(v[0].traces.size(), 25u);
    EXPECT_EQ(v[0].traces[24].seed, 25u);
    EXPECT_THROW(verify({}, runner, 5, 1), std::invalid_argument);
}

TEST(Json, ElitesRoundTrip)
{
    Configuration c;
    c.ssa = Ssa::psr;
    c.c_sigma = 0.25;
    std::vector<Elite> elites = {{12, c, 310.5, {300.0, 320.25}, {}}};
    const auto back = elites_from_json(nlohmann::ordered_json::parse(to_json(elites).dump()));
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(back[0].config_id, 12);
    EXPECT_EQ(back[0].config, c);
    EXPECT_EQ(back[0].tuner_aoc, 310.5);
    EXPECT_EQ(back[0].verified_aoc, elites[0].verified_aoc);
}
