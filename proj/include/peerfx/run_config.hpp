#pragma once
// Run configuration: one JSON document drives every subcommand. Flags
// override config keys; the effective config is hashed and embedded in every
// output file.

#include <json.hpp>
#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "peerfx/dgp.hpp"
#include "peerfx/employability.hpp"
#include "peerfx/filters.hpp"

namespace peerfx {

struct EstimationConfig {
    std::vector<std::string> specs = {"linear_in_means"};
    std::vector<std::string> outcomes = {"emp_days_60", "log_total_earn_60"};
    std::vector<ProgramType> program_types = {ProgramType::short_training,
                                              ProgramType::long_training,
                                              ProgramType::retraining};
    double fe_tol = 1e-8;
};

struct ValidityConfig {
    int n_sims = 500;
    double z_threshold = 3.0;
};

struct RunConfig {
    std::uint64_t seed = 42;
    int jobs = 1;
    std::string data_dir = "out";
    std::string out_dir = "out";
    DGPConfig dgp;
    FilterRules filters;
    ScoreConfig score;
    EstimationConfig estimation;
    ValidityConfig validity;
};

inline const std::vector<std::string>& known_specs() {
    static const std::vector<std::string> v = {
        "linear_in_means",       "monthly_dynamics",
        "heterogeneity_own",     "heterogeneity_female",
        "fractions_quintiles",   "fractions_thirds",
        "interacted_mean_sd",    "interacted_mean_sd_cross",
        "interacted_full",       "peer_ued",
        "other_peer_characteristics"};
    return v;
}

namespace config_detail {

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& slot) {
    if (j.contains(key)) slot = j.at(key).get<T>();
}

}  // namespace config_detail

inline DGPConfig dgp_from_json(const nlohmann::json& j) {
    using config_detail::read_if;
    DGPConfig d;
    read_if(j, "seed", d.seed);
    read_if(j, "n_providers", d.n_providers);
    read_if(j, "months_span", d.months_span);
    read_if(j, "mean_course_size", d.mean_course_size);
    read_if(j, "course_size_sd", d.course_size_sd);
    if (j.contains("course_size_range")) {
        d.course_size_min = j.at("course_size_range").at(0).get<int>();
        d.course_size_max = j.at("course_size_range").at(1).get<int>();
    }
    read_if(j, "n_nonparticipants", d.n_nonparticipants);
    read_if(j, "theta", d.theta);
    read_if(j, "gamma", d.gamma);
    read_if(j, "alpha", d.alpha);
    if (j.contains("pi"))
        d.pi = j.at("pi").get<std::map<std::string, double>>();
    read_if(j, "sigma_eps", d.sigma_eps);
    read_if(j, "sigma_provider", d.sigma_provider);
    read_if(j, "sigma_season", d.sigma_season);
    read_if(j, "sorting_strength", d.sorting_strength);
    if (j.contains("lockin_months")) {
        const auto& l = j.at("lockin_months");
        d.lockin_months = {l.at("short").get<double>(), l.at("long").get<double>(),
                           l.at("retraining").get<double>()};
    }
    if (j.contains("program_type_shares")) {
        const auto& s = j.at("program_type_shares");
        d.program_type_shares = {s.at("short").get<double>(), s.at("long").get<double>(),
                                 s.at("retraining").get<double>()};
    }
    read_if(j, "start_year", d.start_year);
    read_if(j, "provider_mix_sd", d.provider_mix_sd);
    read_if(j, "occupation_tilt", d.occupation_tilt);
    read_if(j, "n_occupations", d.n_occupations);
    read_if(j, "n_competence_levels", d.n_competence_levels);
    read_if(j, "same_firm_course_share", d.same_firm_course_share);
    return d;
}

inline nlohmann::json dgp_to_json(const DGPConfig& d) {
    nlohmann::json j;
    j["seed"] = d.seed;
    j["n_providers"] = d.n_providers;
    j["months_span"] = d.months_span;
    j["mean_course_size"] = d.mean_course_size;
    j["course_size_sd"] = d.course_size_sd;
    j["course_size_range"] = {d.course_size_min, d.course_size_max};
    j["n_nonparticipants"] = d.n_nonparticipants;
    j["theta"] = d.theta;
    j["gamma"] = d.gamma;
    j["alpha"] = d.alpha;
    j["pi"] = d.pi;
    j["sigma_eps"] = d.sigma_eps;
    j["sigma_provider"] = d.sigma_provider;
    j["sigma_season"] = d.sigma_season;
    j["sorting_strength"] = d.sorting_strength;
    j["lockin_months"] = {{"short", d.lockin_months[0]},
                          {"long", d.lockin_months[1]},
                          {"retraining", d.lockin_months[2]}};
    j["program_type_shares"] = {{"short", d.program_type_shares[0]},
                                {"long", d.program_type_shares[1]},
                                {"retraining", d.program_type_shares[2]}};
    j["start_year"] = d.start_year;
    j["provider_mix_sd"] = d.provider_mix_sd;
    j["occupation_tilt"] = d.occupation_tilt;
    j["n_occupations"] = d.n_occupations;
    j["n_competence_levels"] = d.n_competence_levels;
    j["same_firm_course_share"] = d.same_firm_course_share;
    return j;
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
    using config_detail::read_if;
    RunConfig c;
    read_if(j, "seed", c.seed);
    read_if(j, "jobs", c.jobs);
    if (j.contains("paths")) {
        read_if(j.at("paths"), "data_dir", c.data_dir);
        read_if(j.at("paths"), "out_dir", c.out_dir);
    }
    if (j.contains("dgp")) c.dgp = dgp_from_json(j.at("dgp"));
    if (j.contains("filters")) {
        const auto& f = j.at("filters");
        read_if(f, "min_course_size", c.filters.min_course_size);
        read_if(f, "max_course_size", c.filters.max_course_size);
        read_if(f, "exclude_prior_program", c.filters.exclude_prior_program);
        read_if(f, "exclude_same_firm", c.filters.exclude_same_firm);
        read_if(f, "require_monthly_frequency", c.filters.require_monthly_frequency);
    }
    if (j.contains("score")) {
        const auto& s = j.at("score");
        read_if(s, "k_neighbors", c.score.k_neighbors);
        if (s.contains("matching_scale")) {
            const std::string scale = s.at("matching_scale").get<std::string>();
            if (scale == "pscore") c.score.scale = MatchingScale::pscore;
            else if (scale == "logit") c.score.scale = MatchingScale::logit_pscore;
            else throw ConfigError("unknown matching_scale '" + scale + "'");
        }
        if (s.contains("joint_or_per_type")) {
            const std::string v = s.at("joint_or_per_type").get<std::string>();
            if (v == "joint") c.score.per_program_type = false;
            else if (v == "per_type") c.score.per_program_type = true;
            else throw ConfigError("unknown joint_or_per_type '" + v + "'");
        }
        read_if(s, "feature_schema", c.score.feature_schema);
    }
    if (j.contains("estimation")) {
        const auto& e = j.at("estimation");
        read_if(e, "specs", c.estimation.specs);
        read_if(e, "outcomes", c.estimation.outcomes);
        if (e.contains("program_types")) {
            c.estimation.program_types.clear();
            for (const auto& t : e.at("program_types"))
                c.estimation.program_types.push_back(
                    program_type_from(t.get<std::string>()));
        }
        read_if(e, "fe_tol", c.estimation.fe_tol);
    }
    if (j.contains("validity")) {
        read_if(j.at("validity"), "n_sims", c.validity.n_sims);
        read_if(j.at("validity"), "z_threshold", c.validity.z_threshold);
    }
    for (const auto& spec : c.estimation.specs) {
        const auto& known = known_specs();
        if (std::find(known.begin(), known.end(), spec) == known.end())
            throw ConfigError("unknown estimation spec '" + spec + "'");
    }
    return c;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    nlohmann::json j;
    in >> j;
    return run_config_from_json(j);
}

// Canonical serialization of the effective config; nlohmann orders object
// keys, so the dump is stable.
inline nlohmann::json run_config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["seed"] = c.seed;
    j["jobs"] = c.jobs;
    j["paths"] = {{"data_dir", c.data_dir}, {"out_dir", c.out_dir}};
    j["dgp"] = dgp_to_json(c.dgp);
    j["filters"] = {{"min_course_size", c.filters.min_course_size},
                    {"max_course_size", c.filters.max_course_size},
                    {"exclude_prior_program", c.filters.exclude_prior_program},
                    {"exclude_same_firm", c.filters.exclude_same_firm},
                    {"require_monthly_frequency", c.filters.require_monthly_frequency}};
    j["score"] = {{"k_neighbors", c.score.k_neighbors},
                  {"matching_scale",
                   c.score.scale == MatchingScale::pscore ? "pscore" : "logit"},
                  {"joint_or_per_type", c.score.per_program_type ? "per_type" : "joint"},
                  {"feature_schema", c.score.feature_schema}};
    nlohmann::json types = nlohmann::json::array();
    for (auto t : c.estimation.program_types) types.push_back(to_string(t));
    j["estimation"] = {{"specs", c.estimation.specs},
                       {"outcomes", c.estimation.outcomes},
                       {"program_types", types},
                       {"fe_tol", c.estimation.fe_tol}};
    j["validity"] = {{"n_sims", c.validity.n_sims},
                     {"z_threshold", c.validity.z_threshold}};
    return j;
}

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string config_hash(const RunConfig& c) {
    const std::uint64_t h = fnv1a64(run_config_to_json(c).dump());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace peerfx
