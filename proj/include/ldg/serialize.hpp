#ifndef LDG_SERIALIZE_HPP
#define LDG_SERIALIZE_HPP

#include <fstream>
#include <string>

#include <json.hpp>

#include "ldg/errors.hpp"
#include "ldg/harness.hpp"
#include "ldg/mdp.hpp"

namespace ldg {

// JSON layout: scalars plus nested arrays, transition[s][a][s2] and
// reward[s][a]. Loaded models are validated before use.
inline nlohmann::json mdp_to_json(const TabularMdpT<double>& mdp) {
    nlohmann::json j;
    j["num_states"] = mdp.num_states;
    j["num_actions"] = mdp.num_actions;
    j["discount"] = mdp.discount;
    nlohmann::json trans = nlohmann::json::array();
    for (Index s = 0; s < mdp.num_states; ++s) {
        nlohmann::json per_state = nlohmann::json::array();
        for (Index a = 0; a < mdp.num_actions; ++a) {
            nlohmann::json row = nlohmann::json::array();
            for (Index s2 = 0; s2 < mdp.num_states; ++s2)
                row.push_back(mdp.transition(mdp.pair_index(s, a), s2));
            per_state.push_back(std::move(row));
        }
        trans.push_back(std::move(per_state));
    }
    j["transition"] = std::move(trans);
    nlohmann::json rew = nlohmann::json::array();
    for (Index s = 0; s < mdp.num_states; ++s) {
        nlohmann::json row = nlohmann::json::array();
        for (Index a = 0; a < mdp.num_actions; ++a)
            row.push_back(mdp.reward(s, a));
        rew.push_back(std::move(row));
    }
    j["reward"] = std::move(rew);
    nlohmann::json init = nlohmann::json::array();
    for (Index s = 0; s < mdp.num_states; ++s)
        init.push_back(mdp.initial_dist(s));
    j["initial_dist"] = std::move(init);
    return j;
}

inline TabularMdpT<double> mdp_from_json(const nlohmann::json& j) {
    try {
        TabularMdpT<double> mdp;
        mdp.num_states = j.at("num_states").get<Index>();
        mdp.num_actions = j.at("num_actions").get<Index>();
        if (mdp.num_states < 1 || mdp.num_actions < 1)
            throw ConfigError("model: state and action counts must be >= 1");
        mdp.discount = j.value("discount", 1.0);
        mdp.transition =
            MatrixX<double>::Zero(mdp.num_pairs(), mdp.num_states);
        const auto& trans = j.at("transition");
        if (static_cast<Index>(trans.size()) != mdp.num_states)
            throw ConfigError("model: transition outer size != num_states");
        for (Index s = 0; s < mdp.num_states; ++s) {
            const auto& per_state = trans.at(static_cast<std::size_t>(s));
            if (static_cast<Index>(per_state.size()) != mdp.num_actions)
                throw ConfigError("model: transition action size mismatch");
            for (Index a = 0; a < mdp.num_actions; ++a) {
                const auto& row = per_state.at(static_cast<std::size_t>(a));
                if (static_cast<Index>(row.size()) != mdp.num_states)
                    throw ConfigError("model: transition row size mismatch");
                for (Index s2 = 0; s2 < mdp.num_states; ++s2)
                    mdp.transition(mdp.pair_index(s, a), s2) =
                        row.at(static_cast<std::size_t>(s2)).get<double>();
            }
        }
        mdp.reward = MatrixX<double>::Zero(mdp.num_states, mdp.num_actions);
        const auto& rew = j.at("reward");
        if (static_cast<Index>(rew.size()) != mdp.num_states)
            throw ConfigError("model: reward outer size != num_states");
        for (Index s = 0; s < mdp.num_states; ++s) {
            const auto& row = rew.at(static_cast<std::size_t>(s));
            if (static_cast<Index>(row.size()) != mdp.num_actions)
                throw ConfigError("model: reward row size mismatch");
            for (Index a = 0; a < mdp.num_actions; ++a)
                mdp.reward(s, a) = row.at(static_cast<std::size_t>(a))
                                       .get<double>();
        }
        mdp.initial_dist = VectorX<double>::Zero(mdp.num_states);
        const auto& init = j.at("initial_dist");
        if (static_cast<Index>(init.size()) != mdp.num_states)
            throw ConfigError("model: initial_dist size != num_states");
        for (Index s = 0; s < mdp.num_states; ++s)
            mdp.initial_dist(s) =
                init.at(static_cast<std::size_t>(s)).get<double>();
        mdp.validate();
        return mdp;
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(std::string("model json: ") + ex.what());
    }
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["env"] = cfg.env;
    j["estimator"] = cfg.estimator;
    j["gamma_eval"] = cfg.gamma_eval;
    j["gamma_train"] = cfg.gamma_train;
    j["eta"] = cfg.eta;
    j["iterations"] = cfg.iterations;
    j["budget"] = cfg.budget;
    j["horizon"] = cfg.horizon;
    j["lambda"] = cfg.lambda;
    j["radius_scale"] = cfg.radius_scale;
    j["schedule"] = cfg.schedule;
    j["schedule_c"] = cfg.schedule_c;
    j["residual_correction"] = cfg.residual_correction;
    j["warm_start"] = cfg.warm_start;
    j["seeds"] = cfg.seeds;
    return j;
}

// Missing keys keep their defaults; unknown keys are rejected so typos in a
// config file fail loudly instead of silently running the default.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    static const char* known[] = {
        "env",          "estimator", "gamma_eval",   "gamma_train",
        "eta",          "iterations", "budget",      "horizon",
        "lambda",       "radius_scale", "schedule",  "schedule_c",
        "residual_correction", "warm_start", "seeds"};
    try {
        for (auto it = j.begin(); it != j.end(); ++it) {
            bool ok = false;
            for (const char* k : known)
                if (it.key() == k) ok = true;
            if (!ok) throw ConfigError("config: unknown key " + it.key());
        }
        ExperimentConfig cfg;
        cfg.env = j.value("env", cfg.env);
        cfg.estimator = j.value("estimator", cfg.estimator);
        cfg.gamma_eval = j.value("gamma_eval", cfg.gamma_eval);
        cfg.gamma_train = j.value("gamma_train", cfg.gamma_train);
        cfg.eta = j.value("eta", cfg.eta);
        cfg.iterations = j.value("iterations", cfg.iterations);
        cfg.budget = j.value("budget", cfg.budget);
        cfg.horizon = j.value("horizon", cfg.horizon);
        cfg.lambda = j.value("lambda", cfg.lambda);
        cfg.radius_scale = j.value("radius_scale", cfg.radius_scale);
        cfg.schedule = j.value("schedule", cfg.schedule);
        cfg.schedule_c = j.value("schedule_c", cfg.schedule_c);
        cfg.residual_correction =
            j.value("residual_correction", cfg.residual_correction);
        cfg.warm_start = j.value("warm_start", cfg.warm_start);
        cfg.seeds = j.value("seeds", cfg.seeds);
        return cfg;
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(std::string("config json: ") + ex.what());
    }
}

inline nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& ex) {
        throw ConfigError(path + ": " + ex.what());
    }
}

inline TabularMdpT<double> load_mdp_json(const std::string& path) {
    return mdp_from_json(load_json_file(path));
}

inline ExperimentConfig load_config_json(const std::string& path) {
    return config_from_json(load_json_file(path));
}

}  // namespace ldg

#endif
