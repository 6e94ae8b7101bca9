#pragma once
// Named estimation specifications over the fixed-effects engine. Each recipe
// builds the regressor block for one program type, absorbs provider-month
// group, season, occupation and competence factors, clusters at the course
// level, and reports effects in interpretable units (per residual SD, per 10
// percentage points, per month of peer unemployment).

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "peerfx/fe.hpp"
#include "peerfx/mathx.hpp"
#include "peerfx/peer_stats.hpp"
#include "peerfx/types.hpp"

namespace peerfx {

struct EffectRow {
    std::string term;
    double effect = 0.0;
    double se = 0.0;
    double p = 1.0;
    std::string unit;
};

struct EffectReport {
    ProgramType program_type = ProgramType::short_training;
    std::string outcome;
    std::string specification;
    std::string unit;  // primary reporting unit
    std::vector<EffectRow> rows;
    double joint_peer_p = std::numeric_limits<double>::quiet_NaN();
    long nobs = 0;
    int n_clusters = 0;
    std::vector<RegressionResult> details;
};

struct DynamicEntry {
    int month = 0;
    double effect_pp = 0.0;  // percentage points per residual SD of peer mean
    double se_pp = 0.0;
    double p = 1.0;
    bool significant_5pct = false;
    bool flagged_degenerate = false;
};

struct DynamicProfile {
    ProgramType program_type = ProgramType::short_training;
    std::vector<DynamicEntry> months;  // exactly 60
};

// One program type's estimation rows with all derived variables attached.
struct TypeSample {
    ProgramType type = ProgramType::short_training;
    std::vector<std::size_t> rows;  // dataset person rows
    std::vector<double> own, loo, loo_sd, ued;
    std::vector<double> frac_q_bottom, frac_q_top, frac_t_bottom, frac_t_top;
    std::vector<double> loo_ued, loo_emp_2y, loo_emp_10y, loo_earnings_2y;
    std::vector<double> w_size, w_dur, w_weekly, w_practice, w_class;
    std::vector<int> pmg, season, occupation, competence;
    std::vector<long> course;
    const Dataset* ds = nullptr;

    std::size_t n() const { return rows.size(); }

    Eigen::VectorXd outcome(const std::string& name) const {
        Eigen::VectorXd y(rows.size());
        if (name.rfind("employed_m", 0) == 0) {
            const int m = std::stoi(name.substr(10));
            if (m < 1 || m > kPanelMonths)
                throw NumericalError("outcome month out of 1..60: " + name);
            for (std::size_t i = 0; i < rows.size(); ++i)
                y[i] = ds->persons[rows[i]].employed_month[m - 1];
            return y;
        }
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& p = ds->persons[rows[i]];
            if (name == "search_duration_days") y[i] = p.search_duration_days;
            else if (name == "emp_days_60") y[i] = p.emp_days_60;
            else if (name == "log_total_earn_60") y[i] = p.log_total_earn_60;
            else if (name == "log_first_job_earn") y[i] = p.log_first_job_earn;
            else throw NumericalError("unknown outcome '" + name + "'");
        }
        return y;
    }
};

inline TypeSample build_type_sample(const Dataset& ds, const std::vector<double>& scores,
                                    const PeerStatsTable& peers, ProgramType type) {
    TypeSample s;
    s.type = type;
    s.ds = &ds;
    for (std::size_t i = 0; i < ds.persons.size(); ++i) {
        const auto& p = ds.persons[i];
        if (!p.is_participant()) continue;
        const auto& c = ds.course_of(p);
        if (c.program_type != type) continue;
        const PeerStats& ps = peers.for_row(i);
        s.rows.push_back(i);
        s.own.push_back(scores[i]);
        s.loo.push_back(ps.loo_mean);
        s.loo_sd.push_back(ps.loo_sd);
        s.ued.push_back(p.ue_duration_at_start.value_or(0.0));
        s.frac_q_bottom.push_back(ps.frac_quintile[0]);
        s.frac_q_top.push_back(ps.frac_quintile[4]);
        s.frac_t_bottom.push_back(ps.frac_third[0]);
        s.frac_t_top.push_back(ps.frac_third[2]);
        s.loo_ued.push_back(ps.loo_mean_ued);
        s.loo_emp_2y.push_back(ps.loo_mean_emp_2y);
        s.loo_emp_10y.push_back(ps.loo_mean_emp_10y);
        s.loo_earnings_2y.push_back(ps.loo_mean_earnings_2y);
        s.w_size.push_back(c.course_size);
        s.w_dur.push_back(c.planned_duration_months);
        s.w_weekly.push_back(c.weekly_hours);
        s.w_practice.push_back(c.hours_practice);
        s.w_class.push_back(c.hours_class);
        s.pmg.push_back(c.provider_id * 4 + derive_month_group(c).group_index);
        const auto season = derive_season(c);
        s.season.push_back(season.year * 3 + season.third);
        s.occupation.push_back(c.target_occupation);
        s.competence.push_back(c.competence_level);
        s.course.push_back(c.course_id);
    }
    if (s.rows.empty())
        throw EmptySampleError("no participants of type " + std::string(to_string(type)));
    return s;
}

namespace model_detail {

inline FESpec standard_fe(const TypeSample& s, double tol = 1e-8, int max_iter = 10000) {
    FESpec spec;
    spec.absorb_factors = {make_factor("provider_month_group", s.pmg),
                           make_factor("season", s.season),
                           make_factor("occupation", s.occupation),
                           make_factor("competence", s.competence)};
    spec.cluster = make_factor("course", s.course);
    spec.tol = tol;
    spec.max_iter = max_iter;
    return spec;
}

struct Block {
    Eigen::MatrixXd X;
    std::vector<std::string> names;
    std::vector<int> control_cols;

    void add(const std::string& name, const std::vector<double>& col, bool is_control) {
        Eigen::MatrixXd next(col.size(), X.cols() + 1);
        if (X.cols() > 0) next.leftCols(X.cols()) = X;
        for (std::size_t i = 0; i < col.size(); ++i)
            next(i, X.cols()) = col[i];
        if (is_control) control_cols.push_back(static_cast<int>(X.cols()));
        X = std::move(next);
        names.push_back(name);
    }
};

// ued + course controls, the shared tail of every specification
inline void add_controls(Block& b, const TypeSample& s) {
    b.add("ued_at_start", s.ued, true);
    b.add("course_size", s.w_size, true);
    b.add("planned_duration_months", s.w_dur, true);
    b.add("weekly_hours", s.w_weekly, true);
    b.add("hours_practice", s.w_practice, true);
    b.add("hours_class", s.w_class, true);
}

inline EffectRow per_sd_row(const std::string& label, const RegressionResult& res,
                            const std::string& coef_name) {
    const auto eff = scale_to_sd_effect(res.coef_of(coef_name), res.se_of(coef_name),
                                        res.residual_sd.at(coef_name));
    return {label, eff.effect, eff.se, res.p_of(coef_name), "per_sd"};
}

}  // namespace model_detail

inline EffectReport linear_in_means(const TypeSample& s, const std::string& outcome,
                                    double fe_tol = 1e-8) {
    using namespace model_detail;
    Block b;
    b.add("own_employability", s.own, false);
    b.add("peer_mean_employability", s.loo, false);
    add_controls(b, s);
    AbsorbedDesign design(b.X, b.names, standard_fe(s, fe_tol), b.control_cols);
    RegressionResult res = design.estimate(s.outcome(outcome));

    EffectReport rep;
    rep.program_type = s.type;
    rep.outcome = outcome;
    rep.specification = "linear_in_means";
    rep.unit = "per_sd";
    rep.nobs = res.nobs;
    rep.n_clusters = res.n_clusters;
    rep.rows.push_back(per_sd_row("peer_mean_employability", res, "peer_mean_employability"));
    rep.rows.push_back(per_sd_row("own_employability", res, "own_employability"));
    rep.details.push_back(std::move(res));
    return rep;
}

inline DynamicProfile monthly_dynamics(const TypeSample& s, double fe_tol = 1e-8) {
    using namespace model_detail;
    Block b;
    b.add("own_employability", s.own, false);
    b.add("peer_mean_employability", s.loo, false);
    add_controls(b, s);
    AbsorbedDesign design(b.X, b.names, standard_fe(s, fe_tol), b.control_cols);

    DynamicProfile prof;
    prof.program_type = s.type;
    prof.months.resize(kPanelMonths);
    for (int m = 1; m <= kPanelMonths; ++m) {
        DynamicEntry& entry = prof.months[m - 1];
        entry.month = m;
        const Eigen::VectorXd y = s.outcome("employed_m" + std::to_string(m));
        if (y.maxCoeff() == y.minCoeff()) {  // degenerate month
            entry.flagged_degenerate = true;
            continue;
        }
        const RegressionResult res = design.estimate(y);
        if (!res.has("peer_mean_employability")) {
            entry.flagged_degenerate = true;
            continue;
        }
        const auto eff =
            scale_to_sd_effect(res.coef_of("peer_mean_employability"),
                               res.se_of("peer_mean_employability"),
                               res.residual_sd.at("peer_mean_employability"));
        entry.effect_pp = eff.effect * 100.0;
        entry.se_pp = eff.se * 100.0;
        entry.p = res.p_of("peer_mean_employability");
        entry.significant_5pct = entry.p < 0.05;
    }
    return prof;
}

enum class HeterogeneitySplit { own_employability_median, female };

inline EffectReport heterogeneity_split(const TypeSample& s, const std::string& outcome,
                                        HeterogeneitySplit split,
                                        bool separate_samples = false,
                                        double fe_tol = 1e-8) {
    using namespace model_detail;
    std::vector<double> low_flag(s.n());
    std::string low_label, high_label;
    if (split == HeterogeneitySplit::own_employability_median) {
        const double med = quantile_of(s.own, 0.5);
        for (std::size_t i = 0; i < s.n(); ++i) low_flag[i] = s.own[i] < med ? 1.0 : 0.0;
        low_label = "PE low employability";
        high_label = "PE high employability";
    } else {
        const std::size_t col = s.ds->covariate_index("female");
        for (std::size_t i = 0; i < s.n(); ++i)
            low_flag[i] = s.ds->persons[s.rows[i]].covariates[col];
        low_label = "PE females";
        high_label = "PE males";
    }
    std::size_t n_low = 0;
    for (double f : low_flag) n_low += f > 0.5;
    if (n_low == 0 || n_low == s.n())
        throw EmptySampleError("heterogeneity split has an empty side");

    EffectReport rep;
    rep.program_type = s.type;
    rep.outcome = outcome;
    rep.specification = "heterogeneity_split";
    rep.unit = "per_sd";

    // residual SD of the peer mean itself, for the per-SD scaling
    double rsd_peer = 0.0;
    {
        Block aux;
        aux.add("peer_mean_employability", s.loo, false);
        add_controls(aux, s);
        AbsorbedDesign d(aux.X, aux.names, standard_fe(s, fe_tol), aux.control_cols);
        rsd_peer = d.residual_sds().at("peer_mean_employability");
    }

    if (!separate_samples) {
        std::vector<double> peer_low(s.n()), peer_high(s.n());
        for (std::size_t i = 0; i < s.n(); ++i) {
            peer_low[i] = s.loo[i] * low_flag[i];
            peer_high[i] = s.loo[i] * (1.0 - low_flag[i]);
        }
        Block b;
        b.add("own_employability", s.own, false);
        b.add("low_side", low_flag, false);
        b.add("peer_mean_low", peer_low, false);
        b.add("peer_mean_high", peer_high, false);
        add_controls(b, s);
        AbsorbedDesign design(b.X, b.names, standard_fe(s, fe_tol), b.control_cols);
        RegressionResult res = design.estimate(s.outcome(outcome));
        rep.nobs = res.nobs;
        rep.n_clusters = res.n_clusters;
        rep.rows.push_back({low_label, res.coef_of("peer_mean_low") * rsd_peer,
                            res.se_of("peer_mean_low") * rsd_peer,
                            res.p_of("peer_mean_low"), "per_sd"});
        rep.rows.push_back({high_label, res.coef_of("peer_mean_high") * rsd_peer,
                            res.se_of("peer_mean_high") * rsd_peer,
                            res.p_of("peer_mean_high"), "per_sd"});
        const auto diff = wald_contrast(res, {{"peer_mean_low", 1.0},
                                              {"peer_mean_high", -1.0}});
        rep.rows.push_back({"P-value difference", diff.estimate * rsd_peer,
                            diff.se * rsd_peer, diff.p, "per_sd"});
        rep.details.push_back(std::move(res));
        return rep;
    }

    // fidelity variant: two separate regressions sharing nothing
    double est[2], sde[2], pv[2];
    double dof_sum = 0.0;
    for (int side = 0; side < 2; ++side) {
        TypeSample sub;
        sub.type = s.type;
        sub.ds = s.ds;
        for (std::size_t i = 0; i < s.n(); ++i) {
            const bool is_low = low_flag[i] > 0.5;
            if ((side == 0) != is_low) continue;
            sub.rows.push_back(s.rows[i]);
            sub.own.push_back(s.own[i]);
            sub.loo.push_back(s.loo[i]);
            sub.ued.push_back(s.ued[i]);
            sub.w_size.push_back(s.w_size[i]);
            sub.w_dur.push_back(s.w_dur[i]);
            sub.w_weekly.push_back(s.w_weekly[i]);
            sub.w_practice.push_back(s.w_practice[i]);
            sub.w_class.push_back(s.w_class[i]);
            sub.pmg.push_back(s.pmg[i]);
            sub.season.push_back(s.season[i]);
            sub.occupation.push_back(s.occupation[i]);
            sub.competence.push_back(s.competence[i]);
            sub.course.push_back(s.course[i]);
        }
        Block b;
        b.add("own_employability", sub.own, false);
        b.add("peer_mean_employability", sub.loo, false);
        add_controls(b, sub);
        AbsorbedDesign design(b.X, b.names, standard_fe(sub, fe_tol), b.control_cols);
        RegressionResult res = design.estimate(sub.outcome(outcome));
        est[side] = res.coef_of("peer_mean_employability") * rsd_peer;
        sde[side] = res.se_of("peer_mean_employability") * rsd_peer;
        pv[side] = res.p_of("peer_mean_employability");
        dof_sum += res.inference_dof();
        rep.nobs += res.nobs;
        rep.details.push_back(std::move(res));
    }
    rep.rows.push_back({low_label, est[0], sde[0], pv[0], "per_sd"});
    rep.rows.push_back({high_label, est[1], sde[1], pv[1], "per_sd"});
    const double se_diff = std::sqrt(sde[0] * sde[0] + sde[1] * sde[1]);
    const double t = se_diff > 0.0 ? (est[0] - est[1]) / se_diff : 0.0;
    rep.rows.push_back({"P-value difference", est[0] - est[1], se_diff,
                        t_pvalue(t, dof_sum), "per_sd"});
    return rep;
}

enum class FractionBins { quintiles, thirds };

inline EffectReport fractions_model(const TypeSample& s, const std::string& outcome,
                                    FractionBins bins, double fe_tol = 1e-8) {
    using namespace model_detail;
    const bool q = bins == FractionBins::quintiles;
    Block b;
    b.add("own_employability", s.own, false);
    b.add("frac_top", q ? s.frac_q_top : s.frac_t_top, false);
    b.add("frac_bottom", q ? s.frac_q_bottom : s.frac_t_bottom, false);
    add_controls(b, s);
    AbsorbedDesign design(b.X, b.names, standard_fe(s, fe_tol), b.control_cols);
    RegressionResult res = design.estimate(s.outcome(outcome));

    EffectReport rep;
    rep.program_type = s.type;
    rep.outcome = outcome;
    rep.specification = q ? "fractions_quintiles" : "fractions_thirds";
    rep.unit = "per_10pp";
    rep.nobs = res.nobs;
    rep.n_clusters = res.n_clusters;
    const std::string top_label = q ? "Fraction of peers in top quintile"
                                    : "Fraction of highly-employable peers";
    const std::string bot_label = q ? "Fraction of peers in bottom quintile"
                                    : "Fraction of low-employable peers";
    const std::string diff_label = q ? "Difference top - bottom quintile"
                                     : "Difference high - low";
    // 10 percentage points = 0.10 in fraction units
    rep.rows.push_back({top_label, res.coef_of("frac_top") * 0.10,
                        res.se_of("frac_top") * 0.10, res.p_of("frac_top"), "per_10pp"});
    rep.rows.push_back({bot_label, res.coef_of("frac_bottom") * 0.10,
                        res.se_of("frac_bottom") * 0.10, res.p_of("frac_bottom"),
                        "per_10pp"});
    const auto diff = wald_contrast(res, {{"frac_top", 1.0}, {"frac_bottom", -1.0}});
    rep.rows.push_back({diff_label, diff.estimate * 0.10, diff.se * 0.10, diff.p,
                        "per_10pp"});
    rep.details.push_back(std::move(res));
    return rep;
}

enum class InteractionLevel { mean_sd, mean_sd_cross, full };

inline EffectReport interacted_model(const TypeSample& s, const std::string& outcome,
                                     InteractionLevel level, double fe_tol = 1e-8) {
    using namespace model_detail;
    // Standardize so a unit coefficient reads as a one-residual-SD increase
    // evaluated at the sample average.
    double rsd_own = 0.0, rsd_loo = 0.0, rsd_sd = 0.0;
    {
        Block aux;
        aux.add("own", s.own, false);
        aux.add("loo", s.loo, false);
        aux.add("loosd", s.loo_sd, false);
        add_controls(aux, s);
        AbsorbedDesign d(aux.X, aux.names, standard_fe(s, fe_tol), aux.control_cols);
        rsd_own = d.residual_sds().at("own");
        rsd_loo = d.residual_sds().at("loo");
        rsd_sd = d.residual_sds().at("loosd");
    }
    if (rsd_own <= 0.0 || rsd_loo <= 0.0 || rsd_sd <= 0.0)
        throw NumericalError("interacted_model: degenerate residual SD");

    const double m_own = mean_of(s.own), m_loo = mean_of(s.loo), m_sd = mean_of(s.loo_sd);
    std::vector<double> z_own(s.n()), z_loo(s.n()), z_sd(s.n());
    for (std::size_t i = 0; i < s.n(); ++i) {
        z_own[i] = (s.own[i] - m_own) / rsd_own;
        z_loo[i] = (s.loo[i] - m_loo) / rsd_loo;
        z_sd[i] = (s.loo_sd[i] - m_sd) / rsd_sd;
    }
    const auto product = [&](const std::vector<double>& a, const std::vector<double>& b) {
        std::vector<double> out(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
        return out;
    };

    Block b;
    b.add("peer_mean", z_loo, false);
    b.add("peer_sd", z_sd, false);
    std::vector<std::string> peer_terms = {"peer_mean", "peer_sd"};
    if (level != InteractionLevel::mean_sd) {
        b.add("peer_mean_x_peer_sd", product(z_loo, z_sd), false);
        peer_terms.push_back("peer_mean_x_peer_sd");
    }
    b.add("own_emp", z_own, false);
    if (level == InteractionLevel::full) {
        b.add("own_x_peer_mean", product(z_own, z_loo), false);
        b.add("own_x_peer_sd", product(z_own, z_sd), false);
        b.add("own_x_peer_mean_x_peer_sd", product(product(z_own, z_loo), z_sd), false);
        peer_terms.push_back("own_x_peer_mean");
        peer_terms.push_back("own_x_peer_sd");
        peer_terms.push_back("own_x_peer_mean_x_peer_sd");
    }
    add_controls(b, s);
    AbsorbedDesign design(b.X, b.names, standard_fe(s, fe_tol), b.control_cols);
    RegressionResult res = design.estimate(s.outcome(outcome));

    EffectReport rep;
    rep.program_type = s.type;
    rep.outcome = outcome;
    rep.specification = level == InteractionLevel::mean_sd ? "interacted_mean_sd"
                        : level == InteractionLevel::mean_sd_cross
                            ? "interacted_mean_sd_cross"
                            : "interacted_full";
    rep.unit = "per_sd";
    rep.nobs = res.nobs;
    rep.n_clusters = res.n_clusters;
    for (const auto& name : res.names) {
        if (name == "ued_at_start" || name == "course_size" ||
            name == "planned_duration_months" || name == "weekly_hours" ||
            name == "hours_practice" || name == "hours_class")
            continue;
        rep.rows.push_back({name, res.coef_of(name), res.se_of(name), res.p_of(name),
                            "per_sd"});
    }
    std::vector<std::string> testable;
    for (const auto& t : peer_terms)
        if (res.has(t)) testable.push_back(t);
    if (!testable.empty()) rep.joint_peer_p = wald_joint(res, testable).p;
    rep.details.push_back(std::move(res));
    return rep;
}

inline EffectReport peer_ued_model(const TypeSample& s, const std::string& outcome,
                                   double fe_tol = 1e-8) {
    using namespace model_detail;
    Block b;
    b.add("own_employability", s.own, false);
    b.add("peer_mean_employability", s.loo, false);
    b.add("peer_mean_ued", s.loo_ued, false);
    add_controls(b, s);
    AbsorbedDesign design(b.X, b.names, standard_fe(s, fe_tol), b.control_cols);
    RegressionResult res = design.estimate(s.outcome(outcome));

    EffectReport rep;
    rep.program_type = s.type;
    rep.outcome = outcome;
    rep.specification = "peer_ued";
    rep.unit = "per_sd";
    rep.nobs = res.nobs;
    rep.n_clusters = res.n_clusters;
    rep.rows.push_back(per_sd_row("peer_mean_employability", res, "peer_mean_employability"));
    if (res.has("peer_mean_ued"))
        rep.rows.push_back({"peer_mean_ued", res.coef_of("peer_mean_ued"),
                            res.se_of("peer_mean_ued"), res.p_of("peer_mean_ued"),
                            "per_month_of_peer_ued"});
    rep.rows.push_back(per_sd_row("own_employability", res, "own_employability"));
    rep.details.push_back(std::move(res));
    return rep;
}

// Three separate models, one per directly observed peer characteristic, each
// with the individual-level control block instead of the employability score.
inline EffectReport other_peer_characteristics(const TypeSample& s,
                                               const std::string& outcome,
                                               double fe_tol = 1e-8) {
    using namespace model_detail;
    EffectReport rep;
    rep.program_type = s.type;
    rep.outcome = outcome;
    rep.specification = "other_peer_characteristics";
    rep.unit = "per_unit";

    struct Char {
        const char* label;
        const std::vector<double>* col;
        const char* unit;
    };
    const std::vector<Char> chars = {
        {"peer_months_employed_2y", &s.loo_emp_2y, "per_month"},
        {"peer_months_employed_10y", &s.loo_emp_10y, "per_month"},
        {"peer_earnings_2y", &s.loo_earnings_2y, "per_1000eur"},
    };
    const std::vector<std::string> own_controls = {
        "age", "female", "non_german", "highschool", "voc_training", "academic",
        "months_employed_2y", "months_employed_10y", "earnings_2y"};

    for (const auto& ch : chars) {
        Block b;
        b.add(ch.label, *ch.col, false);
        for (const auto& name : own_controls) {
            const std::size_t col = s.ds->covariate_index(name);
            std::vector<double> v(s.n());
            for (std::size_t i = 0; i < s.n(); ++i)
                v[i] = s.ds->persons[s.rows[i]].covariates[col];
            b.add("own_" + name, v, true);
        }
        add_controls(b, s);
        AbsorbedDesign design(b.X, b.names, standard_fe(s, fe_tol), b.control_cols);
        RegressionResult res = design.estimate(s.outcome(outcome));
        rep.nobs = res.nobs;
        rep.n_clusters = res.n_clusters;
        rep.rows.push_back({ch.label, res.coef_of(ch.label), res.se_of(ch.label),
                            res.p_of(ch.label), ch.unit});
        rep.details.push_back(std::move(res));
    }
    return rep;
}

}  // namespace peerfx
