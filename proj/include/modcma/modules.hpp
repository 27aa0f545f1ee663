#pragma once

#include "configuration.hpp"
#include "parameters.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace modcma::modules
{
    struct Module
    {
        std::string name;
        /// option names in Configuration JSON spelling; flags use "false"/"true"
        std::vector<std::string> options;

        bool binary() const { return options.size() == 2 && options[0] == "false"; }
    };

    namespace detail
    {
        template <typename E, std::size_t N>
        std::vector<std::string> option_names(const std::array<names::Option<E>, N> &table)
        {
            std::vector<std::string> out;
            for (const auto &o : table)
                out.emplace_back(o.name);
            return out;
        }
    }

    /// Every module with every option, in table order.
    inline const std::vector<Module> &all_modules()
    {
        static const std::vector<Module> mods = {
            {"active", {"false", "true"}},
            {"elitist", {"false", "true"}},
            {"orthogonal", {"false", "true"}},
            {"sequential", {"false", "true"}},
            {"threshold_convergence", {"false", "true"}},
            {"ssa", detail::option_names(names::ssa)},
            {"mirrored", detail::option_names(names::mirrored)},
            {"base_sampler", detail::option_names(names::base_sampler)},
            {"weights", detail::option_names(names::weights)},
            {"restart", detail::option_names(names::restart)},
            {"bound_correction", detail::option_names(names::bound_correction)},
        };
        return mods;
    }

    inline const std::vector<std::string> &continuous_names()
    {
        static const std::vector<std::string> names = {"c1", "c_mu", "c_c", "c_sigma"};
        return names;
    }

    inline std::string get_option(const Configuration &cfg, std::string_view module)
    {
        const auto j = to_json(cfg);
        const std::string key(module);
        if (!j.contains(key))
            throw ConfigError("unknown module '" + key + "'");
        const auto &v = j.at(key);
        if (v.is_boolean())
            return v.get<bool>() ? "true" : "false";
        return v.get<std::string>();
    }

    inline void set_option(Configuration &cfg, std::string_view module, std::string_view option)
    {
        auto j = to_json(cfg);
        const std::string key(module);
        if (!j.contains(key) || j.at(key).is_number())
            throw ConfigError("unknown module '" + key + "'");
        if (j.at(key).is_boolean())
        {
            if (option != "true" && option != "false")
                throw ConfigError("invalid value '" + std::string(option) + "' for '" + key + "'");
            j[key] = option == "true";
        }
        else
            j[key] = std::string(option);
        cfg = configuration_from_json(j);
    }

    inline std::optional<double> &continuous(Configuration &cfg, std::string_view name)
    {
        if (name == "c1")
            return cfg.c1;
        if (name == "c_mu")
            return cfg.c_mu;
        if (name == "c_c")
            return cfg.c_c;
        if (name == "c_sigma")
            return cfg.c_sigma;
        throw ConfigError("unknown hyperparameter '" + std::string(name) + "'");
    }

    inline const std::optional<double> &continuous(const Configuration &cfg, std::string_view name)
    {
        return continuous(const_cast<Configuration &>(cfg), name);
    }

    /// Value the run will use: the override if present, else the tutorial default.
    inline double effective_continuous(const Configuration &cfg, std::string_view name, std::size_t d)
    {
        const auto p = default_parameters(d, cfg);
        if (name == "c1")
            return p.c1;
        if (name == "c_mu")
            return p.c_mu;
        if (name == "c_c")
            return p.c_c;
        if (name == "c_sigma")
            return p.c_sigma;
        throw ConfigError("unknown hyperparameter '" + std::string(name) + "'");
    }

    /// Label used in report tables, e.g. "ssa=psr".
    inline std::string label(std::string_view module, std::string_view option)
    {
        return std::string(module) + "=" + std::string(option);
    }
}
