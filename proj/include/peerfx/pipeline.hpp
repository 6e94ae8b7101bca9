#pragma once
// File-level pipeline stages shared by the CLI and the test suites. Each
// stage reads only files written by earlier stages plus the config, so
// subcommands compose without hidden state, and every output embeds the
// config hash and seed.

#include <json.hpp>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "peerfx/dataset_io.hpp"
#include "peerfx/dgp.hpp"
#include "peerfx/models.hpp"
#include "peerfx/parallel.hpp"
#include "peerfx/run_config.hpp"
#include "peerfx/validity.hpp"

namespace peerfx {

namespace pipeline_detail {

inline void write_json(const std::string& path, nlohmann::json j,
                       const RunConfig& cfg) {
    j["meta"] = {{"config_hash", config_hash(cfg)}, {"seed", cfg.seed}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << j.dump(2) << "\n";
}

inline FileMeta meta_of(const RunConfig& cfg) {
    return FileMeta{config_hash(cfg), std::to_string(cfg.seed)};
}

inline nlohmann::json score_model_json(const ScoreModel& m) {
    nlohmann::json j;
    j["feature_schema"] = m.feature_schema;
    std::vector<double> beta(m.beta.data(), m.beta.data() + m.beta.size());
    j["beta"] = beta;
    j["fit_stats"] = {{"deviance", m.deviance},
                      {"iterations", m.iterations},
                      {"converged", m.converged}};
    j["accuracy_at_half"] = m.accuracy_at_half;
    return j;
}

inline nlohmann::json regression_json(const RegressionResult& r) {
    nlohmann::json j;
    nlohmann::json coefs;
    for (std::size_t i = 0; i < r.names.size(); ++i)
        coefs[r.names[i]] = {{"coef", r.coef[i]}, {"se", r.se[i]}, {"p", r.p[i]}};
    j["coefficients"] = coefs;
    j["residual_sds"] = r.residual_sd;
    j["nobs"] = r.nobs;
    j["n_clusters"] = r.n_clusters;
    j["dof_model"] = r.dof_model;
    j["dof_absorbed"] = r.dof_absorbed;
    j["r2_within"] = r.r2_within;
    j["dropped_columns"] = r.dropped;
    j["singleton_rows_dropped"] = r.singleton_rows_dropped;
    j["convergence"] = {{"iterations", r.absorb_info.iterations},
                        {"max_delta", r.absorb_info.max_delta},
                        {"converged", r.absorb_info.converged}};
    // the absorbed-dof convention matters for standard errors; flag it
    j["absorbed_dof_convention"] =
        "two-way exact via connected components, additional factors naive";
    return j;
}

}  // namespace pipeline_detail

// synth: persons.csv, courses.csv, ground_truth.json
inline void run_synth(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    if (!fs::exists(cfg.out_dir))
        throw Error("out_dir does not exist: " + cfg.out_dir);
    DGPConfig dgp_cfg = cfg.dgp;
    dgp_cfg.seed = cfg.seed;  // one master seed per run
    const SynthResult synth = generate(dgp_cfg);
    const auto meta = pipeline_detail::meta_of(cfg);
    write_dataset(synth.dataset, cfg.out_dir + "/persons.csv",
                  cfg.out_dir + "/courses.csv", meta);
    nlohmann::json gt;
    gt["theta"] = synth.truth.theta;
    gt["gamma"] = synth.truth.gamma;
    gt["alpha"] = synth.truth.alpha;
    gt["pi"] = synth.truth.pi;
    gt["seed"] = synth.truth.seed;
    pipeline_detail::write_json(cfg.out_dir + "/ground_truth.json", gt, cfg);
}

struct ScoreStage {
    Dataset dataset;  // filtered estimation sample
    std::vector<double> score;
    PeerStatsTable peers;
    ScoringResult scoring;
};

inline ScoreStage score_stage(const RunConfig& cfg) {
    ScoreStage st;
    const Dataset raw = load_dataset(cfg.data_dir + "/persons.csv",
                                     cfg.data_dir + "/courses.csv");
    st.dataset = filter_estimation_sample(raw, cfg.filters);
    if (cfg.score.per_program_type) {
        PerTypeScoring per = run_scoring_per_type(st.dataset, cfg.score);
        st.score = per.score;
        if (per.by_type.empty()) throw NumericalError("scoring produced no models");
        st.scoring = std::move(per.by_type.front().second);
    } else {
        st.scoring = run_scoring(st.dataset, cfg.score);
        st.score = st.scoring.score;
    }
    st.peers = compute_peer_stats(st.dataset, st.score);
    return st;
}

// score: score_model.json, balance.csv, scores.csv, peer_stats.csv,
// persons_scored.csv
inline void run_score(const RunConfig& cfg) {
    const ScoreStage st = score_stage(cfg);
    const auto meta = pipeline_detail::meta_of(cfg);
    const std::string meta_line = "config_hash=" + meta.config_hash +
                                  " seed=" + meta.seed;

    nlohmann::json sm;
    sm["propensity"] = pipeline_detail::score_model_json(st.scoring.propensity);
    sm["employability"] = pipeline_detail::score_model_json(st.scoring.employability);
    sm["ks_overlap"] = st.scoring.ks_overlap;
    sm["off_support_participants"] = st.scoring.off_support;
    pipeline_detail::write_json(cfg.out_dir + "/score_model.json", sm, cfg);

    {
        CsvWriter w(cfg.out_dir + "/balance.csv");
        w.comment(meta_line);
        w.row({"covariate", "mean_p", "mean_np", "diff", "sb"});
        for (const auto& r : st.scoring.balance.rows)
            w.row({r.covariate, format_double(r.mean_participants),
                   format_double(r.mean_matched), format_double(r.diff),
                   r.standardized_bias ? format_double(*r.standardized_bias)
                                       : std::string()});
    }
    {
        CsvWriter w(cfg.out_dir + "/scores.csv");
        w.comment(meta_line);
        w.row({"person_id", "p_score", "employability", "frequency_weight"});
        for (std::size_t k = 0; k < st.scoring.participant_rows.size(); ++k) {
            const auto row = st.scoring.participant_rows[k];
            w.row({std::to_string(st.dataset.persons[row].person_id),
                   format_double(st.scoring.p_participants[k]),
                   format_double(st.score[row]), ""});
        }
        for (std::size_t k = 0; k < st.scoring.pool_rows.size(); ++k) {
            const auto row = st.scoring.pool_rows[k];
            w.row({std::to_string(st.dataset.persons[row].person_id),
                   format_double(st.scoring.p_pool[k]), "",
                   format_double(st.scoring.match.frequency_weight[k])});
        }
    }
    {
        CsvWriter w(cfg.out_dir + "/peer_stats.csv");
        w.comment(meta_line);
        std::vector<std::string> header = {"person_id", "loo_mean", "loo_sd",
                                           "peer_count"};
        for (int q = 1; q <= 5; ++q) header.push_back("frac_q" + std::to_string(q));
        for (int t = 1; t <= 3; ++t) header.push_back("frac_t" + std::to_string(t));
        header.insert(header.end(), {"loo_mean_ued", "loo_mean_emp_2y",
                                     "loo_mean_emp_10y", "loo_mean_earnings_2y"});
        w.row(header);
        for (std::size_t k = 0; k < st.peers.person_row.size(); ++k) {
            const auto& ps = st.peers.stats[k];
            std::vector<std::string> cells = {
                std::to_string(st.dataset.persons[st.peers.person_row[k]].person_id),
                format_double(ps.loo_mean), format_double(ps.loo_sd),
                std::to_string(ps.peer_count)};
            for (double f : ps.frac_quintile) cells.push_back(format_double(f));
            for (double f : ps.frac_third) cells.push_back(format_double(f));
            cells.push_back(format_double(ps.loo_mean_ued));
            cells.push_back(format_double(ps.loo_mean_emp_2y));
            cells.push_back(format_double(ps.loo_mean_emp_10y));
            cells.push_back(format_double(ps.loo_mean_earnings_2y));
            w.row(cells);
        }
    }
    {
        // the filtered dataset with the employability score appended
        Dataset scored = st.dataset;
        scored.covariate_names.push_back("employability");
        for (std::size_t i = 0; i < scored.persons.size(); ++i)
            scored.persons[i].covariates.push_back(
                std::isnan(st.score[i]) ? 0.0 : st.score[i]);
        write_dataset(scored, cfg.out_dir + "/persons_scored.csv",
                      cfg.out_dir + "/courses_scored.csv", meta);
    }
}

// Loads the data and scores written by earlier stages.
inline ScoreStage load_scored_stage(const RunConfig& cfg) {
    ScoreStage st;
    const Dataset raw = load_dataset(cfg.data_dir + "/persons.csv",
                                     cfg.data_dir + "/courses.csv");
    st.dataset = filter_estimation_sample(raw, cfg.filters);
    const std::string scores_path = cfg.data_dir + "/scores.csv";
    if (!std::filesystem::exists(scores_path))
        throw LoadError("missing " + scores_path + "; run the score stage first");
    const CsvTable t = read_csv(scores_path);
    const auto cid = t.column("person_id", scores_path);
    const auto cemp = t.column("employability", scores_path);
    std::unordered_map<long, double> by_id;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (t.rows[r][cemp].empty()) continue;
        by_id[parse_long(t.rows[r][cid], scores_path, r, "person_id")] =
            parse_double(t.rows[r][cemp], scores_path, r, "employability");
    }
    st.score.assign(st.dataset.persons.size(),
                    std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < st.dataset.persons.size(); ++i) {
        const auto& p = st.dataset.persons[i];
        if (!p.is_participant()) continue;
        const auto it = by_id.find(p.person_id);
        if (it == by_id.end())
            throw LoadError("scores.csv lacks employability for person " +
                            std::to_string(p.person_id));
        st.score[i] = it->second;
    }
    st.peers = compute_peer_stats(st.dataset, st.score);
    return st;
}

struct EstimateJob {
    std::string spec;
    ProgramType type;
    std::string outcome;
};

inline std::string job_file_stem(const EstimateJob& j) {
    return j.spec + "_" + to_string(j.type) + "_" + j.outcome;
}

// estimate: effects_<spec>_<type>_<outcome>.csv + regression_... .json per
// job, plus a combined report.json
inline void run_estimate(const RunConfig& cfg, const ScoreStage& st) {
    const auto meta = pipeline_detail::meta_of(cfg);
    const std::string meta_line = "config_hash=" + meta.config_hash +
                                  " seed=" + meta.seed;
    const double tol = cfg.estimation.fe_tol;

    std::vector<EstimateJob> jobs;
    for (const auto& spec : cfg.estimation.specs)
        for (const auto type : cfg.estimation.program_types) {
            if (spec == "monthly_dynamics") {
                jobs.push_back({spec, type, "employed_month"});
                continue;
            }
            for (const auto& outcome : cfg.estimation.outcomes)
                jobs.push_back({spec, type, outcome});
        }

    struct JobOut {
        EstimateJob job;
        nlohmann::json summary;
    };
    std::vector<JobOut> outs(jobs.size());

    std::vector<TypeSample> samples;  // one per program type, shared
    for (const auto type : kAllProgramTypes) {
        try {
            samples.push_back(build_type_sample(st.dataset, st.score, st.peers, type));
        } catch (const EmptySampleError&) {
            samples.push_back(TypeSample{});  // type absent from the data
        }
    }

    parallel_for(jobs.size(), cfg.jobs, [&](std::size_t k) {
        const EstimateJob& job = jobs[k];
        const TypeSample& s = samples[static_cast<int>(job.type)];
        if (s.rows.empty())
            throw EmptySampleError("no sample for program type " +
                                   std::string(to_string(job.type)));
        const std::string stem = job_file_stem(job);
        nlohmann::json summary;
        summary["spec"] = job.spec;
        summary["program_type"] = to_string(job.type);
        summary["outcome"] = job.outcome;

        if (job.spec == "monthly_dynamics") {
            const DynamicProfile prof = monthly_dynamics(s, tol);
            CsvWriter w(cfg.out_dir + "/effects_" + stem + ".csv");
            w.comment(meta_line);
            w.row({"month", "effect_pp", "se_pp", "p", "significant_5pct", "flagged"});
            for (const auto& e : prof.months)
                w.row({std::to_string(e.month), format_double(e.effect_pp),
                       format_double(e.se_pp), format_double(e.p),
                       e.significant_5pct ? "1" : "0",
                       e.flagged_degenerate ? "1" : "0"});
            summary["months"] = static_cast<int>(prof.months.size());
            outs[k] = {job, summary};
            return;
        }

        EffectReport rep;
        if (job.spec == "linear_in_means") rep = linear_in_means(s, job.outcome, tol);
        else if (job.spec == "heterogeneity_own")
            rep = heterogeneity_split(s, job.outcome,
                                      HeterogeneitySplit::own_employability_median,
                                      false, tol);
        else if (job.spec == "heterogeneity_female")
            rep = heterogeneity_split(s, job.outcome, HeterogeneitySplit::female,
                                      false, tol);
        else if (job.spec == "fractions_quintiles")
            rep = fractions_model(s, job.outcome, FractionBins::quintiles, tol);
        else if (job.spec == "fractions_thirds")
            rep = fractions_model(s, job.outcome, FractionBins::thirds, tol);
        else if (job.spec == "interacted_mean_sd")
            rep = interacted_model(s, job.outcome, InteractionLevel::mean_sd, tol);
        else if (job.spec == "interacted_mean_sd_cross")
            rep = interacted_model(s, job.outcome, InteractionLevel::mean_sd_cross, tol);
        else if (job.spec == "interacted_full")
            rep = interacted_model(s, job.outcome, InteractionLevel::full, tol);
        else if (job.spec == "peer_ued")
            rep = peer_ued_model(s, job.outcome, tol);
        else if (job.spec == "other_peer_characteristics")
            rep = other_peer_characteristics(s, job.outcome, tol);
        else
            throw ConfigError("unknown estimation spec '" + job.spec + "'");

        {
            CsvWriter w(cfg.out_dir + "/effects_" + stem + ".csv");
            w.comment(meta_line);
            w.row({"term", "effect", "se", "p", "unit"});
            for (const auto& r : rep.rows)
                w.row({r.term, format_double(r.effect), format_double(r.se),
                       format_double(r.p), r.unit});
        }
        if (!rep.details.empty())
            pipeline_detail::write_json(cfg.out_dir + "/regression_" + stem + ".json",
                                        pipeline_detail::regression_json(rep.details[0]),
                                        cfg);
        summary["unit"] = rep.unit;
        summary["nobs"] = rep.nobs;
        summary["n_clusters"] = rep.n_clusters;
        if (!std::isnan(rep.joint_peer_p)) summary["joint_peer_p"] = rep.joint_peer_p;
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& r : rep.rows)
            rows.push_back({{"term", r.term}, {"effect", r.effect}, {"se", r.se},
                            {"p", r.p}, {"unit", r.unit}});
        summary["rows"] = rows;
        outs[k] = {job, summary};
    });

    nlohmann::json report;
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& o : outs) {
        nlohmann::json entry = o.summary;
        entry["file"] = "effects_" + job_file_stem(o.job) + ".csv";
        runs.push_back(entry);
    }
    report["runs"] = runs;
    pipeline_detail::write_json(cfg.out_dir + "/report.json", report, cfg);
}

// validate: validity_resampling.json, validity_guryan.json,
// sorting_diagnostics.csv, variance_decomposition.csv
inline void run_validate(const RunConfig& cfg, const ScoreStage& st) {
    const auto meta = pipeline_detail::meta_of(cfg);
    const std::string meta_line = "config_hash=" + meta.config_hash +
                                  " seed=" + meta.seed;
    const double tol = cfg.estimation.fe_tol;

    std::vector<TypeSample> samples;
    for (const auto type : kAllProgramTypes) {
        try {
            samples.push_back(build_type_sample(st.dataset, st.score, st.peers, type));
        } catch (const EmptySampleError&) {
        }
    }

    {
        nlohmann::json per_type;
        std::vector<nlohmann::json> slots(samples.size());
        parallel_for(samples.size(), cfg.jobs, [&](std::size_t i) {
            const auto rep = resampling_test(samples[i], cfg.validity.n_sims,
                                             derive_seed(cfg.seed, 1000 + i), tol);
            slots[i] = {{"program_type", to_string(samples[i].type)},
                        {"observed_sd_raw", rep.observed_sd_raw},
                        {"observed_sd_net", rep.observed_sd_net},
                        {"simulated_mean_sd_raw", rep.simulated_mean_sd_raw},
                        {"simulated_mean_sd_net", rep.simulated_mean_sd_net},
                        {"simulated_sd_of_sd_net", rep.simulated_sd_of_sd_net},
                        {"n_sims", rep.n_sims},
                        {"z_net", rep.z_net},
                        {"z_threshold", cfg.validity.z_threshold},
                        {"excess_variation_flag",
                         rep.z_net > cfg.validity.z_threshold},
                        {"classes_total", rep.classes_total},
                        {"classes_without_permutation",
                         rep.classes_without_permutation}};
        });
        per_type["by_type"] = slots;
        pipeline_detail::write_json(cfg.out_dir + "/validity_resampling.json",
                                    per_type, cfg);
    }
    {
        nlohmann::json per_type;
        std::vector<nlohmann::json> slots(samples.size());
        parallel_for(samples.size(), cfg.jobs, [&](std::size_t i) {
            const auto rep = guryan_test(samples[i], tol);
            slots[i] = {{"program_type", to_string(samples[i].type)},
                        {"coef_peer_mean", rep.coef_peer_mean},
                        {"se", rep.se},
                        {"p", rep.p},
                        {"coef_provider_mean", rep.coef_provider_mean},
                        {"coef_without_control", rep.coef_without_control},
                        {"se_without_control", rep.se_without_control},
                        {"n", rep.n}};
        });
        per_type["by_type"] = slots;
        pipeline_detail::write_json(cfg.out_dir + "/validity_guryan.json", per_type, cfg);
    }
    {
        const SortingDiagnostics diag = sorting_diagnostics(st.dataset, st.score);
        CsvWriter w(cfg.out_dir + "/sorting_diagnostics.csv");
        w.comment(meta_line);
        std::vector<std::string> header = {"grouping", "group", "n", "mean", "sd"};
        for (int d = 1; d <= 9; ++d) header.push_back("d" + std::to_string(d * 10));
        header.push_back("kw_h");
        header.push_back("kw_p");
        w.row(header);
        for (const auto& table : diag.tables)
            for (const auto& r : table.rows) {
                std::vector<std::string> cells = {table.grouping, r.group,
                                                  std::to_string(r.n),
                                                  format_double(r.mean),
                                                  format_double(r.sd)};
                for (double d : r.deciles) cells.push_back(format_double(d));
                cells.push_back(table.screen.defined ? format_double(table.screen.h)
                                                     : std::string());
                cells.push_back(table.screen.defined ? format_double(table.screen.p)
                                                     : std::string());
                w.row(cells);
            }
    }
    {
        CsvWriter w(cfg.out_dir + "/variance_decomposition.csv");
        w.comment(meta_line);
        w.row({"program_type", "variable", "sd_raw", "sd_net"});
        for (const auto& s : samples) {
            const auto dec = variance_decomposition(s, tol);
            for (const auto& r : dec.rows)
                w.row({to_string(s.type), r.variable, format_double(r.sd_raw),
                       format_double(r.sd_net)});
        }
    }
}

}  // namespace peerfx
