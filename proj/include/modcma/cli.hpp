#pragma once

#include "benchmarks.hpp"
#include "cma.hpp"
#include "report.hpp"
#include "tuner.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace modcma::cli
{
    namespace fs = std::filesystem;

    enum ExitCode : int
    {
        ok = 0,
        failure = 1,
        invalid_config = 2,
        unknown_function = 3,
        missing_input = 4,
    };

    struct MissingInput : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };

    inline std::size_t default_run_budget(std::size_t d) { return 10000 * d; }

    struct Manifest
    {
        std::string name = "experiment";
        tuner::Extension extension = tuner::Extension::none;
        std::vector<std::string> functions;
        std::size_t dim = 5;
        std::uint64_t iid = 1;
        std::size_t run_budget = 0;
        std::size_t tuner_budget = 1000;
        std::size_t repetitions = 4;
        std::uint64_t seed = 1;
        std::string output = "out";
        std::size_t verify_runs = 25;

        std::size_t budget() const { return run_budget ? run_budget : default_run_budget(dim); }
    };

    inline nlohmann::ordered_json to_json(const Manifest &m)
    {
        nlohmann::ordered_json j;
        j["name"] = m.name;
        j["extension"] = tuner::to_string(m.extension);
        j["functions"] = m.functions;
        j["dim"] = m.dim;
        j["iid"] = m.iid;
        j["run_budget"] = m.budget();
        j["tuner_budget"] = m.tuner_budget;
        j["repetitions"] = m.repetitions;
        j["seed"] = m.seed;
        j["output"] = m.output;
        j["verify_runs"] = m.verify_runs;
        return j;
    }

    /// Throws ConfigError on bad fields and UnknownFunction on unknown fids.
    inline Manifest manifest_from_json(const nlohmann::json &j)
    {
        if (!j.is_object())
            throw ConfigError("manifest must be a JSON object");
        static const std::vector<std::string> known = {"name",         "extension",   "functions", "dim",
                                                       "iid",          "run_budget",  "tuner_budget",
                                                       "repetitions",  "seed",        "output",    "verify_runs"};
        for (const auto &[key, value] : j.items())
            if (std::find(known.begin(), known.end(), key) == known.end())
                throw ConfigError("unknown manifest key '" + key + "'");
        Manifest m;
        try
        {
            m.name = j.value("name", m.name);
            m.extension = tuner::parse_extension(j.value("extension", std::string("none")));
            m.functions = j.value("functions", std::vector<std::string>{});
            m.dim = j.value("dim", m.dim);
            m.iid = j.value("iid", m.iid);
            m.run_budget = j.value("run_budget", m.run_budget);
            m.tuner_budget = j.value("tuner_budget", m.tuner_budget);
            m.repetitions = j.value("repetitions", m.repetitions);
            m.seed = j.value("seed", m.seed);
            m.output = j.value("output", m.output);
            m.verify_runs = j.value("verify_runs", m.verify_runs);
        }
        catch (const nlohmann::json::exception &e)
        {
            throw ConfigError(std::string("manifest: ") + e.what());
        }
        if (m.functions.empty())
            throw ConfigError("manifest lists no functions");
        for (const auto &f : m.functions)
            benchmarks::parse_function(f);
        if (m.dim < 2 || m.dim > benchmarks::kMaxDimension)
            throw ConfigError("manifest dim must lie in [2, 40]");
        if (m.tuner_budget < 50 || m.repetitions == 0 || m.verify_runs == 0)
            throw ConfigError("manifest budgets and counts must be positive (tuner budget >= 50)");
        if (m.name.empty() || m.name.find('/') != std::string::npos)
            throw ConfigError("manifest name must be a plain file name");
        return m;
    }

    inline std::string read_file(const fs::path &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw MissingInput("cannot read '" + path.string() + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    inline void write_file(const fs::path &path, const std::string &content)
    {
        if (path.has_parent_path())
            fs::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot write '" + path.string() + "'");
        out << content;
    }

    /// MODCMA_SEED, if set, replaces every manifest seed.
    inline std::optional<std::uint64_t> seed_override()
    {
        const char *env = std::getenv("MODCMA_SEED");
        if (!env || !*env)
            return std::nullopt;
        try
        {
            return std::stoull(env);
        }
        catch (const std::exception &)
        {
            throw ConfigError("MODCMA_SEED must be an unsigned integer");
        }
    }

    inline Manifest load_manifest(const fs::path &path)
    {
        const auto text = read_file(path);
        nlohmann::json j;
        try
        {
            j = nlohmann::json::parse(text);
        }
        catch (const nlohmann::json::parse_error &e)
        {
            throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
        }
        auto m = manifest_from_json(j);
        if (auto s = seed_override())
            m.seed = *s;
        return m;
    }

    /// Inline JSON if the text starts with '{', otherwise a file path.
    inline Configuration load_configuration(const std::string &arg)
    {
        if (arg.empty())
            return Configuration{};
        const auto first = arg.find_first_not_of(" \t\r\n");
        if (first != std::string::npos && arg[first] == '{')
            return parse_configuration(arg);
        return parse_configuration(read_file(arg));
    }

    /// AOC of a single run; the tuner's evaluator.
    inline double run_score(const Configuration &cfg, benchmarks::Function fid, std::size_t dim, std::uint64_t iid,
                            std::size_t budget, std::uint64_t seed)
    {
        const auto result = run(cfg, benchmarks::ProblemInstance(fid, dim, iid), budget, seed);
        return metrics::run_aoc(result.trace);
    }

    inline tuner::Evaluator make_evaluator(benchmarks::Function fid, std::size_t dim, std::uint64_t iid,
                                           std::size_t budget)
    {
        return [=](const Configuration &cfg, std::uint64_t seed) {
            return run_score(cfg, fid, dim, iid, budget, seed);
        };
    }

    inline tuner::Runner make_runner(benchmarks::Function fid, std::size_t dim, std::uint64_t iid, std::size_t budget)
    {
        return [=](const Configuration &cfg, std::uint64_t seed) {
            return run(cfg, benchmarks::ProblemInstance(fid, dim, iid), budget, seed).trace;
        };
    }

    struct Variant
    {
        std::string label;
        Configuration config;
    };

    /// The default plus every configuration differing from it in exactly one module.
    inline std::vector<Variant> single_module_variants(const tuner::SearchSpace &space)
    {
        std::vector<Variant> out{{std::string(report::kDefaultLabel), Configuration{}}};
        const Configuration def;
        for (const auto &m : space.categorical)
        {
            const auto current = modules::get_option(def, m.name);
            for (const auto &o : m.options)
            {
                if (o == current)
                    continue;
                Configuration cfg;
                modules::set_option(cfg, m.name, o);
                out.push_back({modules::label(m.name, o), cfg});
            }
        }
        return out;
    }

    /// Tuner seed of repetition r on the function at position f of the manifest.
    inline std::uint64_t repetition_seed(std::uint64_t seed, std::size_t f, std::size_t r)
    {
        return mix_seed(seed, 1000 * (f + 1) + r);
    }

    struct RunArgs
    {
        std::string function = "sphere";
        std::size_t dim = 5;
        std::uint64_t iid = 1;
        std::string config;
        std::size_t budget = 0;
        std::uint64_t seed = 1;
        std::string out = ".";
    };

    struct SingleModuleArgs
    {
        std::size_t dim = 5;
        std::uint64_t iid = 1;
        std::size_t budget = 0;
        std::size_t runs = 5;
        std::uint64_t seed = 1;
        std::string extension = "none";
        std::vector<std::string> functions;
        std::size_t jobs = 1;
        std::string out = ".";
    };

    struct TuneArgs
    {
        std::string manifest;
        std::string out;
        std::size_t jobs = 1;
    };

    struct VerifyArgs
    {
        std::string elites;
        std::optional<std::size_t> runs;
        std::string function;
        std::optional<std::size_t> dim;
        std::optional<std::uint64_t> iid;
        std::optional<std::size_t> budget;
        std::uint64_t seed_base = 1;
        bool include_default = false;
        std::size_t jobs = 1;
        std::string out = ".";
    };

    struct ReportArgs
    {
        std::string kind;
        std::string input;
        std::string baseline;
        std::string experiment;
        std::size_t budget = 0;
        std::string out = ".";
    };

    /// Maps exceptions to exit codes, reporting the message on `err`.
    template <typename Fn>
    int guarded(std::ostream &err, Fn &&fn)
    {
        try
        {
            return fn();
        }
        catch (const UnknownFunction &e)
        {
            err << "error: " << e.what() << '\n';
            return unknown_function;
        }
        catch (const MissingInput &e)
        {
            err << "error: " << e.what() << '\n';
            return missing_input;
        }
        catch (const std::invalid_argument &e)
        {
            err << "error: " << e.what() << '\n';
            return invalid_config;
        }
        catch (const std::exception &e)
        {
            err << "error: " << e.what() << '\n';
            return failure;
        }
    }

    inline int cmd_run(const RunArgs &a, std::ostream &out, std::ostream &err)
    {
        return guarded(err, [&] {
            const auto cfg = load_configuration(a.config);
            cfg.validate();
            const auto fid = benchmarks::parse_function(a.function);
            const benchmarks::ProblemInstance instance(fid, a.dim, a.iid);
            const std::size_t budget = a.budget ? a.budget : default_run_budget(a.dim);

            RunOptions options;
            options.config_id = "cli";
            const auto result = run(cfg, instance, budget, a.seed, options);

            std::ostringstream csv;
            metrics::write_trace_csv(csv, result.trace);
            const auto name = "trace_" + a.function + "_d" + std::to_string(a.dim) + "_i" + std::to_string(a.iid) +
                              "_s" + std::to_string(a.seed) + ".csv";
            write_file(fs::path(a.out) / name, csv.str());

            const auto score = metrics::aoc(std::span(&result.trace, 1), metrics::default_targets(), budget);
            out << metrics::kScoreHeader << '\n' << metrics::score_row("cli", a.function, a.iid, score) << '\n';
            return static_cast<int>(ok);
        });
    }

    inline int cmd_single_module(const SingleModuleArgs &a, std::ostream &out, std::ostream &err)
    {
        return guarded(err, [&] {
            const auto space = tuner::build_space(tuner::parse_extension(a.extension), a.dim);
            std::vector<benchmarks::Function> fids;
            if (a.functions.empty())
                for (const auto &f : benchmarks::kSuite)
                    fids.push_back(f.fid);
            else
                for (const auto &f : a.functions)
                    fids.push_back(benchmarks::parse_function(f));
            if (a.runs == 0)
                throw ConfigError("runs must be positive");
            benchmarks::ProblemInstance(fids.front(), a.dim, a.iid);

            const std::size_t budget = a.budget ? a.budget : default_run_budget(a.dim);
            const auto variants = single_module_variants(space);
            const std::size_t per_function = variants.size() * a.runs;
            const auto scores = parallel_map(fids.size() * per_function, a.jobs, [&](std::size_t i) {
                const auto fid = fids[i / per_function];
                const auto &v = variants[(i % per_function) / a.runs];
                return run_score(v.config, fid, a.dim, a.iid, budget, a.seed + i % a.runs);
            });

            std::vector<report::SingleModuleRow> rows;
            std::ostringstream table;
            table << "function,option,aoc\n";
            for (std::size_t f = 0; f < fids.size(); ++f)
                for (std::size_t v = 0; v < variants.size(); ++v)
                {
                    double sum = 0;
                    for (std::size_t r = 0; r < a.runs; ++r)
                        sum += scores[f * per_function + v * a.runs + r];
                    const std::string fn(benchmarks::to_string(fids[f]));
                    rows.push_back({fn, variants[v].label, sum / static_cast<double>(a.runs)});
                    table << fn << ',' << variants[v].label << ',' << format_double(rows.back().aoc) << '\n';
                }
            std::ostringstream vbs;
            report::write_vbs_csv(vbs, report::vbs_single_module(rows));
            write_file(fs::path(a.out) / "single_module_aoc.csv", table.str());
            write_file(fs::path(a.out) / "vbs.csv", vbs.str());
            out << vbs.str();
            return static_cast<int>(ok);
        });
    }

    inline int cmd_tune(const TuneArgs &a, std::ostream &out, std::ostream &err)
    {
        return guarded(err, [&] {
            const auto m = load_manifest(a.manifest);
            const fs::path root = fs::path(a.out.empty() ? m.output : a.out) / m.name;
            const auto space = tuner::build_space(m.extension, m.dim);

            write_file(root / "manifest.json", to_json(m).dump(2) + "\n");
            for (std::size_t f = 0; f < m.functions.size(); ++f)
            {
                const auto fid = benchmarks::parse_function(m.functions[f]);
                const auto evaluator = make_evaluator(fid, m.dim, m.iid, m.budget());
                for (std::size_t r = 0; r < m.repetitions; ++r)
                {
                    tuner::TunerOptions opt;
                    opt.total_budget = m.tuner_budget;
                    opt.jobs = a.jobs;
                    opt.seed = repetition_seed(m.seed, f, r);
                    opt.failure_score = static_cast<double>(m.budget());
                    const auto result = tuner::iterated_race(space, evaluator, opt);

                    const fs::path dir = root / m.functions[f];
                    const auto stem = "rep" + std::to_string(r);
                    write_file(dir / ("elites_" + stem + ".json"), tuner::to_json(result.elites).dump(2) + "\n");
                    std::ostringstream log;
                    tuner::write_log_csv(log, result.log);
                    write_file(dir / ("runlog_" + stem + ".csv"), log.str());
                    out << m.functions[f] << ' ' << stem << ": " << result.elites.size() << " elites, "
                        << result.evaluations << " runs, best tuner AOC "
                        << format_double(result.elites.front().tuner_aoc) << '\n';
                }
            }
            return static_cast<int>(ok);
        });
    }

    namespace detail
    {
        inline bool is_elites_file(const fs::path &p)
        {
            const auto name = p.filename().string();
            return p.extension() == ".json" && name.rfind("elites_", 0) == 0 &&
                   name.find("_verified") == std::string::npos;
        }

        inline bool is_verified_file(const fs::path &p)
        {
            return p.extension() == ".json" && p.filename().string().find("_verified") != std::string::npos;
        }

        /// Files under a directory (or the file itself), sorted for a stable order.
        template <typename Pred>
        std::vector<fs::path> collect(const fs::path &input, Pred pred)
        {
            if (!fs::exists(input))
                throw MissingInput("input '" + input.string() + "' does not exist");
            std::vector<fs::path> out;
            if (fs::is_regular_file(input))
                out.push_back(input);
            else
                for (const auto &e : fs::recursive_directory_iterator(input))
                    if (e.is_regular_file() && pred(e.path()))
                        out.push_back(e.path());
            std::sort(out.begin(), out.end());
            if (out.empty())
                throw MissingInput("no matching files under '" + input.string() + "'");
            return out;
        }

        inline std::vector<tuner::Elite> load_elites(const fs::path &path)
        {
            try
            {
                return tuner::elites_from_json(nlohmann::ordered_json::parse(read_file(path)));
            }
            catch (const nlohmann::json::exception &e)
            {
                throw ConfigError("invalid elites file '" + path.string() + "': " + e.what());
            }
        }

        inline std::optional<Manifest> find_manifest(const fs::path &start)
        {
            for (auto p = fs::absolute(start); !p.empty(); p = p.parent_path())
            {
                if (fs::exists(p / "manifest.json"))
                    return manifest_from_json(nlohmann::json::parse(read_file(p / "manifest.json")));
                if (p == p.root_path())
                    break;
            }
            return std::nullopt;
        }

        /// Elites grouped by the function directory they were written into.
        inline std::vector<std::pair<std::string, std::vector<tuner::Elite>>> elites_by_function(
            const fs::path &root, bool verified)
        {
            std::vector<std::pair<std::string, std::vector<tuner::Elite>>> out;
            // tuner output, or a verify output directory which holds only verified files
            const bool plain = !verified && (fs::is_regular_file(root) || !fs::exists(root) ||
                                             std::any_of(fs::recursive_directory_iterator(root),
                                                         fs::recursive_directory_iterator(),
                                                         [](const auto &e) { return is_elites_file(e.path()); }));
            const auto files = plain ? collect(root, is_elites_file) : collect(root, is_verified_file);
            for (const auto &f : files)
            {
                const auto fn = f.parent_path().filename().string();
                if (out.empty() || out.back().first != fn)
                    out.push_back({fn, {}});
                for (auto &e : load_elites(f))
                    out.back().second.push_back(std::move(e));
            }
            return out;
        }
    }

    inline int cmd_verify(const VerifyArgs &a, std::ostream &out, std::ostream &err)
    {
        return guarded(err, [&] {
            const fs::path input(a.elites);
            const auto files = detail::collect(input, detail::is_elites_file);
            const auto manifest = detail::find_manifest(fs::is_directory(input) ? input : input.parent_path());

            const std::size_t dim = a.dim.value_or(manifest ? manifest->dim : 5);
            const std::uint64_t iid = a.iid.value_or(manifest ? manifest->iid : 1);
            const std::size_t budget = a.budget.value_or(manifest ? manifest->budget() : default_run_budget(dim));
            const std::size_t runs = a.runs.value_or(manifest ? manifest->verify_runs : 25);
            if (runs == 0)
                throw ConfigError("runs must be positive");

            struct Job
            {
                fs::path file;
                benchmarks::Function fid;
                std::vector<tuner::Elite> elites;
            };
            std::vector<Job> jobs;
            for (const auto &f : files)
            {
                const auto fn = a.function.empty() ? f.parent_path().filename().string() : a.function;
                auto elites = detail::load_elites(f);
                if (elites.empty())
                    throw ConfigError("elites file '" + f.string() + "' is empty");
                if (a.include_default &&
                    std::none_of(elites.begin(), elites.end(), [](const auto &e) { return e.config == Configuration{}; }))
                    elites.push_back({0, Configuration{}, kInf, {}, {}});
                jobs.push_back({f, benchmarks::parse_function(fn), std::move(elites)});
            }
            benchmarks::ProblemInstance(jobs.front().fid, dim, iid);

            for (auto &job : jobs)
            {
                const auto verified = tuner::verify(job.elites, make_runner(job.fid, dim, iid, budget), runs,
                                                    a.seed_base, a.jobs);
                const auto rel = fs::is_directory(input) ? fs::relative(job.file, input) : job.file.filename();
                const auto target = fs::path(a.out) / rel;
                const auto stem = target.stem().string();
                write_file(target.parent_path() / (stem + "_verified.json"), tuner::to_json(verified).dump(2) + "\n");
                for (std::size_t e = 0; e < verified.size(); ++e)
                    for (std::size_t r = 0; r < verified[e].traces.size(); ++r)
                    {
                        std::ostringstream csv;
                        metrics::write_trace_csv(csv, verified[e].traces[r]);
                        write_file(target.parent_path() / (stem + "_traces") /
                                       ("config" + std::to_string(verified[e].config_id) + "_seed" +
                                        std::to_string(a.seed_base + r) + ".csv"),
                                   csv.str());
                    }
                out << rel.string() << ": best verified AOC " << format_double(verified.front().verified_mean())
                    << '\n';
            }
            return static_cast<int>(ok);
        });
    }

    inline double best_verified(const std::vector<tuner::Elite> &elites)
    {
        double best = kInf;
        for (const auto &e : elites)
            best = std::min(best, e.verified_mean());
        return best;
    }

    inline int cmd_report(const ReportArgs &a, std::ostream &out, std::ostream &err)
    {
        return guarded(err, [&] {
            const fs::path dir(a.out);
            std::ostringstream csv;
            std::string name;
            auto need = [](const std::string &v, const char *flag) {
                if (v.empty())
                    throw MissingInput(std::string("missing ") + flag);
                return fs::path(v);
            };

            if (a.kind == "activation")
            {
                std::vector<std::pair<std::string, report::ActivationTable>> tables;
                for (const auto &[fn, elites] : detail::elites_by_function(need(a.input, "--input"), false))
                    tables.emplace_back(fn, report::activation_counts(report::configurations(elites)));
                report::write_activation_csv(csv, tables);
                name = "activation.csv";
            }
            else if (a.kind == "improvement")
            {
                const auto base = detail::elites_by_function(need(a.baseline, "--baseline"), true);
                const auto ext = detail::elites_by_function(need(a.experiment, "--experiment"), true);
                std::vector<std::pair<std::string, std::optional<double>>> rows;
                for (const auto &[fn, b] : base)
                    for (const auto &[fn2, e] : ext)
                        if (fn == fn2)
                            rows.emplace_back(fn, report::relative_improvement(best_verified(e), best_verified(b)));
                report::write_improvement_csv(csv, rows);
                name = "improvement.csv";
            }
            else if (a.kind == "delta")
            {
                std::vector<Configuration> base, ext;
                for (const auto &[fn, e] : detail::elites_by_function(need(a.baseline, "--baseline"), false))
                    for (const auto &x : report::configurations(e))
                        base.push_back(x);
                for (const auto &[fn, e] : detail::elites_by_function(need(a.experiment, "--experiment"), false))
                    for (const auto &x : report::configurations(e))
                        ext.push_back(x);
                report::write_delta_csv(csv, report::distribution_divergence(base, ext));
                name = "delta.csv";
            }
            else if (a.kind == "ecdf")
            {
                if (a.budget == 0)
                    throw ConfigError("--budget is required for ecdf reports");
                std::vector<metrics::RunTrace> traces;
                for (const auto &f : detail::collect(need(a.input, "--input"),
                                                     [](const fs::path &p) { return p.extension() == ".csv"; }))
                {
                    std::istringstream is(read_file(f));
                    traces.push_back(metrics::read_trace_csv(is, a.budget));
                    traces.back().evals_used = a.budget;
                }
                const auto data = report::export_ecdf_ert(traces, metrics::default_targets());
                std::ostringstream ert;
                report::write_ert_csv(ert, data);
                write_file(dir / "ert.csv", ert.str());
                report::write_ecdf_csv(csv, data);
                name = "ecdf.csv";
            }
            else if (a.kind == "initial")
            {
                csv << "function,repetition,config_id,n_seeds,relative_aoc\n";
                for (const auto &f : detail::collect(need(a.input, "--input"), [](const fs::path &p) {
                         return p.extension() == ".csv" && p.filename().string().rfind("runlog_", 0) == 0;
                     }))
                {
                    std::istringstream is(read_file(f));
                    const auto fn = f.parent_path().filename().string();
                    const auto rep = f.stem().string().substr(7);
                    for (const auto &r : report::initial_relative_aoc(report::read_log_csv(is)))
                        csv << fn << ',' << rep << ',' << r.config_id << ',' << r.n_seeds << ','
                            << (r.relative ? format_double(*r.relative) : std::string("undefined")) << '\n';
                }
                name = "initial.csv";
            }
            else
                throw ConfigError("unknown report kind '" + a.kind + "'");

            write_file(dir / name, csv.str());
            out << csv.str();
            return static_cast<int>(ok);
        });
    }
}
