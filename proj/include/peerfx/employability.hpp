#pragma once
// The employability scoring stage: propensity-score matching of a
// non-participant pool to the participants, balance diagnostics, a
// frequency-weighted logit of the one-year job-finding outcome on the matched
// pool, and out-of-sample prediction for participants.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "peerfx/balance.hpp"
#include "peerfx/logit.hpp"
#include "peerfx/matching.hpp"
#include "peerfx/mathx.hpp"
#include "peerfx/types.hpp"

namespace peerfx {

enum class MatchingScale { pscore, logit_pscore };

struct ScoreConfig {
    int k_neighbors = 3;
    MatchingScale scale = MatchingScale::pscore;
    bool per_program_type = false;  // default: one joint score for all types
    std::vector<std::string> feature_schema;  // empty = all covariates
};

struct PropensityFit {
    ScoreModel model;
    Eigen::VectorXd p_participants;
    Eigen::VectorXd p_pool;
};

struct ScoringResult {
    ScoreModel propensity;
    ScoreModel employability;
    MatchResult match;
    BalanceReport balance;
    std::vector<std::size_t> participant_rows;  // rows into Dataset::persons
    std::vector<std::size_t> pool_rows;
    std::vector<double> p_participants;
    std::vector<double> p_pool;
    // employability score per Dataset person row; NaN for non-participants
    std::vector<double> score;
    double ks_overlap = 0.0;     // participants vs matched pool p-scores
    int off_support = 0;         // participants outside the pool p-score range
};

namespace score_detail {

inline Eigen::MatrixXd covariate_matrix(const Dataset& ds,
                                        const std::vector<std::size_t>& rows,
                                        const std::vector<std::size_t>& cols) {
    Eigen::MatrixXd X(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            X(i, j) = ds.persons[rows[i]].covariates[cols[j]];
    return X;
}

}  // namespace score_detail

// Propensity score: logit of the participant indicator on the stacked
// covariates, unit weights.
inline PropensityFit fit_propensity(const Dataset& ds,
                                    const std::vector<std::size_t>& participant_rows,
                                    const std::vector<std::size_t>& pool_rows,
                                    const std::vector<std::size_t>& feature_cols,
                                    const std::vector<std::string>& feature_names) {
    if (participant_rows.empty() || pool_rows.empty())
        throw NumericalError("fit_propensity: empty sample");
    const Eigen::MatrixXd Xp =
        score_detail::covariate_matrix(ds, participant_rows, feature_cols);
    const Eigen::MatrixXd Xn = score_detail::covariate_matrix(ds, pool_rows, feature_cols);
    Eigen::MatrixXd X(Xp.rows() + Xn.rows(), Xp.cols());
    X.topRows(Xp.rows()) = Xp;
    X.bottomRows(Xn.rows()) = Xn;
    Eigen::VectorXd y = Eigen::VectorXd::Zero(X.rows());
    y.head(Xp.rows()).setOnes();
    const Eigen::VectorXd w = Eigen::VectorXd::Ones(X.rows());

    PropensityFit fit;
    fit.model = fit_logit(X, y, w, feature_names);
    const Eigen::VectorXd p = predict_logit(fit.model, X);
    fit.p_participants = p.head(Xp.rows());
    fit.p_pool = p.tail(Xn.rows());
    return fit;
}

// Weighted logit of outcome_found_job_1y on the matched pool.
inline ScoreModel fit_employability(const Dataset& ds,
                                    const std::vector<std::size_t>& pool_rows,
                                    const std::vector<double>& frequency_weights,
                                    const std::vector<std::size_t>& feature_cols,
                                    const std::vector<std::string>& feature_names) {
    std::vector<std::size_t> used;
    std::vector<double> wts;
    for (std::size_t i = 0; i < pool_rows.size(); ++i) {
        if (frequency_weights[i] > 0.0) {
            used.push_back(pool_rows[i]);
            wts.push_back(frequency_weights[i]);
        }
    }
    if (used.empty()) throw NumericalError("fit_employability: no matched pool members");
    const Eigen::MatrixXd X = score_detail::covariate_matrix(ds, used, feature_cols);
    Eigen::VectorXd y(used.size()), w(used.size());
    for (std::size_t i = 0; i < used.size(); ++i) {
        const auto& person = ds.persons[used[i]];
        if (!person.outcome_found_job_1y)
            throw NumericalError("fit_employability: matched pool row lacks outcome");
        y[i] = *person.outcome_found_job_1y;
        w[i] = wts[i];
    }
    return fit_logit(X, y, w, feature_names);
}

inline std::vector<double> predict_employability(const ScoreModel& model,
                                                 const Dataset& ds,
                                                 const std::vector<std::size_t>& rows,
                                                 const std::vector<std::size_t>& feature_cols) {
    const Eigen::MatrixXd X = score_detail::covariate_matrix(ds, rows, feature_cols);
    const Eigen::VectorXd p = predict_logit(model, X);
    return std::vector<double>(p.data(), p.data() + p.size());
}

// Full scoring stage over one participant set (joint by default).
inline ScoringResult run_scoring(const Dataset& ds, const ScoreConfig& cfg = {}) {
    ScoringResult res;
    for (std::size_t i = 0; i < ds.persons.size(); ++i) {
        if (ds.persons[i].is_participant())
            res.participant_rows.push_back(i);
        else
            res.pool_rows.push_back(i);
    }
    if (res.participant_rows.empty()) throw NumericalError("scoring: no participants");
    if (res.pool_rows.empty()) throw NumericalError("scoring: no non-participant pool");

    std::vector<std::string> names =
        cfg.feature_schema.empty() ? ds.covariate_names : cfg.feature_schema;
    std::vector<std::size_t> cols;
    for (const auto& n : names) cols.push_back(ds.covariate_index(n));

    auto prop = fit_propensity(ds, res.participant_rows, res.pool_rows, cols, names);
    res.propensity = prop.model;
    res.p_participants.assign(prop.p_participants.data(),
                              prop.p_participants.data() + prop.p_participants.size());
    res.p_pool.assign(prop.p_pool.data(), prop.p_pool.data() + prop.p_pool.size());

    std::vector<double> match_part = res.p_participants;
    std::vector<double> match_pool = res.p_pool;
    if (cfg.scale == MatchingScale::logit_pscore) {
        const auto to_logit = [](double p) {
            const double pc = std::min(std::max(p, 1e-12), 1.0 - 1e-12);
            return std::log(pc / (1.0 - pc));
        };
        for (auto& v : match_part) v = to_logit(v);
        for (auto& v : match_pool) v = to_logit(v);
    }
    std::vector<long> pool_ids;
    pool_ids.reserve(res.pool_rows.size());
    for (auto r : res.pool_rows) pool_ids.push_back(ds.persons[r].person_id);
    res.match = match_nearest_neighbors(match_part, match_pool, pool_ids, cfg.k_neighbors);

    // common support is reported, not enforced
    const double pool_min = *std::min_element(res.p_pool.begin(), res.p_pool.end());
    const double pool_max = *std::max_element(res.p_pool.begin(), res.p_pool.end());
    for (double p : res.p_participants)
        if (p < pool_min || p > pool_max) ++res.off_support;

    {
        std::vector<std::vector<double>> part_cov(cols.size()), pool_cov(cols.size());
        for (std::size_t k = 0; k < cols.size(); ++k) {
            part_cov[k].reserve(res.participant_rows.size());
            for (auto r : res.participant_rows)
                part_cov[k].push_back(ds.persons[r].covariates[cols[k]]);
            pool_cov[k].reserve(res.pool_rows.size());
            for (auto r : res.pool_rows)
                pool_cov[k].push_back(ds.persons[r].covariates[cols[k]]);
        }
        res.balance = balance_report(names, part_cov, pool_cov, res.match.frequency_weight);
    }

    res.ks_overlap = ks_statistic(res.p_participants, res.p_pool,
                                  res.match.frequency_weight);

    res.employability = fit_employability(ds, res.pool_rows, res.match.frequency_weight,
                                          cols, names);
    const auto part_scores =
        predict_employability(res.employability, ds, res.participant_rows, cols);
    res.score.assign(ds.persons.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < res.participant_rows.size(); ++i)
        res.score[res.participant_rows[i]] = part_scores[i];
    return res;
}

// Per-type variant: each program type's participants get their own matching
// step and score model against the shared pool.
struct PerTypeScoring {
    std::vector<std::pair<ProgramType, ScoringResult>> by_type;
    std::vector<double> score;  // merged, per Dataset person row
};

inline PerTypeScoring run_scoring_per_type(const Dataset& ds, const ScoreConfig& cfg = {}) {
    PerTypeScoring out;
    out.score.assign(ds.persons.size(), std::numeric_limits<double>::quiet_NaN());
    for (ProgramType type : kAllProgramTypes) {
        Dataset sub;
        sub.covariate_names = ds.covariate_names;
        std::vector<std::size_t> orig_row;
        for (std::size_t i = 0; i < ds.persons.size(); ++i) {
            const auto& p = ds.persons[i];
            if (p.is_participant() && ds.course_of(p).program_type != type) continue;
            sub.persons.push_back(p);
            orig_row.push_back(i);
        }
        sub.courses = ds.courses;
        sub.rebuild_indices();
        if (sub.n_participants() == 0) continue;
        ScoringResult r = run_scoring(sub, cfg);
        for (std::size_t i = 0; i < r.score.size(); ++i)
            if (!std::isnan(r.score[i])) out.score[orig_row[i]] = r.score[i];
        out.by_type.emplace_back(type, std::move(r));
    }
    return out;
}

}  // namespace peerfx
