#pragma once

#include "boundary.hpp"
#include "common.hpp"
#include "sampling.hpp"

#include <json.hpp>

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace modcma
{
    using sampling::BaseSampler;
    using sampling::Mirrored;
    using BoundCorrection = boundary::Strategy;

    enum class Ssa
    {
        csa,
        tpa,
        msr,
        psr,
        xnes,
        m_xnes,
        p_xnes
    };

    enum class Weights
    {
        default_,
        equal,
        half_power_lambda
    };

    enum class Restart
    {
        off,
        ipop,
        bipop
    };

    namespace names
    {
        template <typename E>
        struct Option
        {
            E value;
            std::string_view name;
        };

        inline constexpr std::array<Option<Ssa>, 7> ssa = {{{Ssa::csa, "csa"},
                                                             {Ssa::tpa, "tpa"},
                                                             {Ssa::msr, "msr"},
                                                             {Ssa::psr, "psr"},
                                                             {Ssa::xnes, "xnes"},
                                                             {Ssa::m_xnes, "m-xnes"},
                                                             {Ssa::p_xnes, "p-xnes"}}};
        inline constexpr std::array<Option<Mirrored>, 3> mirrored = {{{Mirrored::off, "off"},
                                                                       {Mirrored::mirrored, "mirrored"},
                                                                       {Mirrored::mirrored_pairwise, "mirrored_pairwise"}}};
        inline constexpr std::array<Option<BaseSampler>, 3> base_sampler = {{{BaseSampler::gaussian, "gaussian"},
                                                                              {BaseSampler::sobol, "sobol"},
                                                                              {BaseSampler::halton, "halton"}}};
        inline constexpr std::array<Option<Weights>, 3> weights = {{{Weights::default_, "default"},
                                                                     {Weights::equal, "equal"},
                                                                     {Weights::half_power_lambda, "half_power_lambda"}}};
        inline constexpr std::array<Option<Restart>, 3> restart = {{{Restart::off, "off"},
                                                                     {Restart::ipop, "ipop"},
                                                                     {Restart::bipop, "bipop"}}};
        inline constexpr std::array<Option<BoundCorrection>, 6> bound_correction = {{{BoundCorrection::none, "none"},
                                                                                      {BoundCorrection::ur, "ur"},
                                                                                      {BoundCorrection::mcs, "mcs"},
                                                                                      {BoundCorrection::cotn, "cotn"},
                                                                                      {BoundCorrection::scs, "scs"},
                                                                                      {BoundCorrection::tcs, "tcs"}}};

        template <typename E, std::size_t N>
        std::string_view to_string(const std::array<Option<E>, N> &table, E value)
        {
            for (const auto &o : table)
                if (o.value == value)
                    return o.name;
            throw ConfigError("unnamed option value");
        }

        template <typename E, std::size_t N>
        E parse(const std::array<Option<E>, N> &table, std::string_view key, std::string_view name)
        {
            for (const auto &o : table)
                if (o.name == name)
                    return o.value;
            throw ConfigError("invalid value '" + std::string(name) + "' for '" + std::string(key) + "'");
        }
    }

    inline std::string_view to_string(Ssa v) { return names::to_string(names::ssa, v); }
    inline std::string_view to_string(Mirrored v) { return names::to_string(names::mirrored, v); }
    inline std::string_view to_string(BaseSampler v) { return names::to_string(names::base_sampler, v); }
    inline std::string_view to_string(Weights v) { return names::to_string(names::weights, v); }
    inline std::string_view to_string(Restart v) { return names::to_string(names::restart, v); }
    inline std::string_view to_string(BoundCorrection v) { return names::to_string(names::bound_correction, v); }

    /// One point of the module x hyperparameter space.
    struct Configuration
    {
        bool active = false;
        bool elitist = false;
        bool orthogonal = false;
        bool sequential = false;
        bool threshold_convergence = false;
        Ssa ssa = Ssa::csa;
        Mirrored mirrored = Mirrored::off;
        BaseSampler base_sampler = BaseSampler::gaussian;
        Weights weights = Weights::default_;
        Restart restart = Restart::off;
        BoundCorrection bound_correction = BoundCorrection::none;

        // absent -> tutorial default
        std::optional<double> c1;
        std::optional<double> c_mu;
        std::optional<double> c_c;
        std::optional<double> c_sigma;
        std::optional<int> lambda;

        bool operator==(const Configuration &) const = default;

        void validate() const
        {
            auto in_closed = [](const std::optional<double> &v, const char *key) {
                if (v && !(std::isfinite(*v) && *v >= 0.0 && *v <= 1.0))
                    throw ConfigError(std::string(key) + " must lie in [0, 1]");
            };
            auto in_half_open = [](const std::optional<double> &v, const char *key) {
                if (v && !(std::isfinite(*v) && *v > 0.0 && *v <= 1.0))
                    throw ConfigError(std::string(key) + " must lie in (0, 1]");
            };
            in_closed(c1, "c1");
            in_closed(c_mu, "c_mu");
            in_half_open(c_c, "c_c");
            in_half_open(c_sigma, "c_sigma");
            if (lambda && *lambda < 2)
                throw ConfigError("lambda must be at least 2");
        }
    };

    inline nlohmann::ordered_json to_json(const Configuration &cfg)
    {
        nlohmann::ordered_json j;
        j["active"] = cfg.active;
        j["elitist"] = cfg.elitist;
        j["orthogonal"] = cfg.orthogonal;
        j["sequential"] = cfg.sequential;
        j["threshold_convergence"] = cfg.threshold_convergence;
        j["ssa"] = to_string(cfg.ssa);
        j["mirrored"] = to_string(cfg.mirrored);
        j["base_sampler"] = to_string(cfg.base_sampler);
        j["weights"] = to_string(cfg.weights);
        j["restart"] = to_string(cfg.restart);
        j["bound_correction"] = to_string(cfg.bound_correction);
        if (cfg.c1)
            j["c1"] = *cfg.c1;
        if (cfg.c_mu)
            j["c_mu"] = *cfg.c_mu;
        if (cfg.c_c)
            j["c_c"] = *cfg.c_c;
        if (cfg.c_sigma)
            j["c_sigma"] = *cfg.c_sigma;
        if (cfg.lambda)
            j["lambda"] = *cfg.lambda;
        return j;
    }

    /// Strict parse: unknown keys, wrong types and unknown option names are rejected.
    template <typename Json>
    Configuration configuration_from_json(const Json &j)
    {
        if (!j.is_object())
            throw ConfigError("configuration must be a JSON object");
        Configuration cfg;
        for (auto it = j.begin(); it != j.end(); ++it)
        {
            const std::string &key = it.key();
            const auto &v = it.value();
            auto flag = [&](bool &out) {
                if (!v.is_boolean())
                    throw ConfigError("'" + key + "' must be a boolean");
                out = v.template get<bool>();
            };
            auto text = [&]() -> std::string {
                if (!v.is_string())
                    throw ConfigError("'" + key + "' must be a string");
                return v.template get<std::string>();
            };
            auto number = [&](std::optional<double> &out) {
                if (v.is_null())
                    return;
                if (!v.is_number())
                    throw ConfigError("'" + key + "' must be a number");
                out = v.template get<double>();
            };

            if (key == "active")
                flag(cfg.active);
            else if (key == "elitist")
                flag(cfg.elitist);
            else if (key == "orthogonal")
                flag(cfg.orthogonal);
            else if (key == "sequential")
                flag(cfg.sequential);
            else if (key == "threshold_convergence")
                flag(cfg.threshold_convergence);
            else if (key == "ssa")
                cfg.ssa = names::parse(names::ssa, key, text());
            else if (key == "mirrored")
                cfg.mirrored = names::parse(names::mirrored, key, text());
            else if (key == "base_sampler")
                cfg.base_sampler = names::parse(names::base_sampler, key, text());
            else if (key == "weights")
                cfg.weights = names::parse(names::weights, key, text());
            else if (key == "restart")
                cfg.restart = names::parse(names::restart, key, text());
            else if (key == "bound_correction")
                cfg.bound_correction = names::parse(names::bound_correction, key, text());
            else if (key == "c1")
                number(cfg.c1);
            else if (key == "c_mu")
                number(cfg.c_mu);
            else if (key == "c_c")
                number(cfg.c_c);
            else if (key == "c_sigma")
                number(cfg.c_sigma);
            else if (key == "lambda")
            {
                if (v.is_null())
                    continue;
                if (!v.is_number_integer())
                    throw ConfigError("'lambda' must be an integer");
                cfg.lambda = v.template get<int>();
            }
            else
                throw ConfigError("unknown configuration key '" + key + "'");
        }
        cfg.validate();
        return cfg;
    }

    inline Configuration parse_configuration(std::string_view text)
    {
        nlohmann::ordered_json j;
        try
        {
            j = nlohmann::ordered_json::parse(text);
        }
        catch (const nlohmann::json::parse_error &e)
        {
            throw ConfigError(std::string("malformed configuration JSON: ") + e.what());
        }
        return configuration_from_json(j);
    }

    inline std::string to_string(const Configuration &cfg) { return to_json(cfg).dump(); }
}
