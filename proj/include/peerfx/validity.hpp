#pragma once
// Identification diagnostics: the resampling test for idiosyncratic peer
// variation, the exogeneity test with a provider-level mean control, sorting
// screens over time and occupations, and the raw-vs-net variance
// decomposition.

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "peerfx/fe.hpp"
#include "peerfx/mathx.hpp"
#include "peerfx/models.hpp"
#include "peerfx/rng.hpp"

namespace peerfx {

// Demeans a column by the given factors and partials out the course-control
// block; the projection is fixed, so repeated netting of simulated columns is
// cheap.
class Residualizer {
  public:
    Residualizer(std::vector<Factor> factors, Eigen::MatrixXd controls,
                 double tol = 1e-8, int max_iter = 10000)
        : factors_(std::move(factors)), tol_(tol), max_iter_(max_iter) {
        if (controls.cols() > 0) {
            absorb(controls, factors_, tol_, max_iter_);
            // keep only control columns with within variation
            std::vector<int> keep;
            for (Eigen::Index j = 0; j < controls.cols(); ++j)
                if (controls.col(j).norm() > 1e-10) keep.push_back(static_cast<int>(j));
            controls_.resize(controls.rows(), keep.size());
            for (std::size_t k = 0; k < keep.size(); ++k)
                controls_.col(k) = controls.col(keep[k]);
            if (controls_.cols() > 0) qr_.compute(controls_);
        }
    }

    Eigen::VectorXd net(const Eigen::VectorXd& y) const {
        Eigen::MatrixXd m = y;
        absorb(m, factors_, tol_, max_iter_);
        Eigen::VectorXd r = m.col(0);
        if (controls_.cols() > 0) r -= controls_ * qr_.solve(r);
        return r;
    }

    double net_sd(const Eigen::VectorXd& y) const {
        const Eigen::VectorXd r = net(y);
        std::vector<double> v(r.data(), r.data() + r.size());
        return sd_of(v);
    }

  private:
    std::vector<Factor> factors_;
    Eigen::MatrixXd controls_;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
    double tol_;
    int max_iter_;
};

namespace validity_detail {

inline Eigen::MatrixXd control_block(const TypeSample& s) {
    Eigen::MatrixXd W(s.n(), 5);
    for (std::size_t i = 0; i < s.n(); ++i) {
        W(i, 0) = s.w_size[i];
        W(i, 1) = s.w_dur[i];
        W(i, 2) = s.w_weekly[i];
        W(i, 3) = s.w_practice[i];
        W(i, 4) = s.w_class[i];
    }
    return W;
}

inline std::vector<Factor> net_factors(const TypeSample& s) {
    return {make_factor("provider_month_group", s.pmg), make_factor("season", s.season),
            make_factor("occupation", s.occupation),
            make_factor("competence", s.competence)};
}

}  // namespace validity_detail

struct ResamplingReport {
    double observed_sd_raw = 0.0;
    double observed_sd_net = 0.0;
    double simulated_mean_sd_raw = 0.0;
    double simulated_mean_sd_net = 0.0;
    double simulated_sd_of_sd_net = 0.0;
    int n_sims = 0;
    double z_net = 0.0;
    // bookkeeping: (cell, size) classes that cannot be permuted (one course)
    int classes_total = 0;
    int classes_without_permutation = 0;
    double observed_grand_mean = 0.0;
    double simulated_grand_mean = 0.0;  // averaged over draws; equals observed
};

// Randomly reallocates participants across courses of the same size within
// each provider-month-group cell and compares the dispersion of the implied
// leave-one-out peer means, raw and net of fixed effects and course controls.
inline ResamplingReport resampling_test(const TypeSample& s, int n_sims = 500,
                                        std::uint64_t seed = 1, double fe_tol = 1e-8) {
    if (n_sims < 2) throw ConfigError("resampling_test: need at least 2 simulations");

    // course -> slot indices into the sample arrays
    std::map<long, std::vector<std::size_t>> course_slots;
    std::map<long, int> course_cell;
    for (std::size_t i = 0; i < s.n(); ++i) {
        course_slots[s.course[i]].push_back(i);
        course_cell[s.course[i]] = s.pmg[i];
    }
    // (cell, size) -> slot positions over which scores may be shuffled
    std::map<std::pair<int, int>, std::vector<std::size_t>> classes;
    std::map<std::pair<int, int>, int> class_courses;
    for (const auto& [cid, slots] : course_slots) {
        const std::pair<int, int> key{course_cell[cid], static_cast<int>(slots.size())};
        auto& v = classes[key];
        v.insert(v.end(), slots.begin(), slots.end());
        class_courses[key]++;
    }

    ResamplingReport rep;
    rep.n_sims = n_sims;
    for (const auto& [key, count] : class_courses) {
        ++rep.classes_total;
        if (count < 2) ++rep.classes_without_permutation;
    }

    const Residualizer resid(validity_detail::net_factors(s),
                             validity_detail::control_block(s), fe_tol);

    const auto loo_from = [&](const std::vector<double>& score) {
        Eigen::VectorXd loo(s.n());
        for (const auto& [cid, slots] : course_slots) {
            double sum = 0.0;
            for (auto i : slots) sum += score[i];
            const double denom = static_cast<double>(slots.size() - 1);
            for (auto i : slots) loo[i] = (sum - score[i]) / denom;
        }
        return loo;
    };

    {
        const Eigen::VectorXd obs = loo_from(s.own);
        std::vector<double> v(obs.data(), obs.data() + obs.size());
        rep.observed_sd_raw = sd_of(v);
        rep.observed_grand_mean = mean_of(v);
        rep.observed_sd_net = resid.net_sd(obs);
    }

    std::vector<double> sim_raw(n_sims), sim_net(n_sims), sim_mean(n_sims);
    std::vector<double> score = s.own;
    for (int sim = 0; sim < n_sims; ++sim) {
        auto rng = make_rng(seed, static_cast<std::uint64_t>(sim));
        score = s.own;
        for (const auto& [key, slots] : classes) {
            if (class_courses[key] < 2) continue;
            // Fisher-Yates over the scores occupying these slots
            for (std::size_t j = slots.size() - 1; j > 0; --j) {
                const std::size_t k = static_cast<std::size_t>(
                    draw_int(rng, 0, static_cast<int>(j)));
                std::swap(score[slots[j]], score[slots[k]]);
            }
        }
        const Eigen::VectorXd loo = loo_from(score);
        std::vector<double> v(loo.data(), loo.data() + loo.size());
        sim_raw[sim] = sd_of(v);
        sim_mean[sim] = mean_of(v);
        sim_net[sim] = resid.net_sd(loo);
    }
    rep.simulated_mean_sd_raw = mean_of(sim_raw);
    rep.simulated_mean_sd_net = mean_of(sim_net);
    rep.simulated_sd_of_sd_net = sd_of(sim_net);
    rep.simulated_grand_mean = mean_of(sim_mean);
    rep.z_net = rep.simulated_sd_of_sd_net > 0.0
                    ? (rep.observed_sd_net - rep.simulated_mean_sd_net) /
                          rep.simulated_sd_of_sd_net
                    : 0.0;
    return rep;
}

struct ExogeneityReport {
    double coef_peer_mean = 0.0;
    double se = 0.0;
    double p = 1.0;
    double coef_provider_mean = 0.0;
    double coef_without_control = 0.0;  // exclusion bias, uncorrected
    double se_without_control = 0.0;
    long n = 0;
};

// Regresses own employability on the course peer mean plus the leave-one-out
// provider-level mean; under idiosyncratic assignment the peer-mean
// coefficient is zero. The provider-mean control absorbs the mechanical
// negative correlation from drawing peers without replacement.
inline ExogeneityReport guryan_test(const TypeSample& s, double fe_tol = 1e-8,
                                    bool provider_mean_includes_self = false) {
    // provider sums over the estimation sample
    std::map<int, std::pair<double, int>> provider_sum;
    for (std::size_t i = 0; i < s.n(); ++i) {
        auto& agg = provider_sum[s.pmg[i] / 4];
        agg.first += s.own[i];
        agg.second += 1;
    }
    std::vector<double> provider_mean(s.n());
    for (std::size_t i = 0; i < s.n(); ++i) {
        const auto& agg = provider_sum.at(s.pmg[i] / 4);
        if (provider_mean_includes_self)
            provider_mean[i] = agg.first / agg.second;
        else {
            if (agg.second < 2)
                throw NumericalError("guryan_test: provider with a single participant");
            provider_mean[i] = (agg.first - s.own[i]) / (agg.second - 1);
        }
    }

    Eigen::VectorXd y(s.n());
    for (std::size_t i = 0; i < s.n(); ++i) y[i] = s.own[i];

    ExogeneityReport rep;
    rep.n = static_cast<long>(s.n());
    {
        model_detail::Block b;
        b.add("peer_mean_employability", s.loo, false);
        b.add("provider_mean_employability", provider_mean, false);
        model_detail::add_controls(b, s);
        AbsorbedDesign design(b.X, b.names, model_detail::standard_fe(s, fe_tol),
                              b.control_cols);
        const RegressionResult res = design.estimate(y);
        rep.coef_peer_mean = res.coef_of("peer_mean_employability");
        rep.se = res.se_of("peer_mean_employability");
        rep.p = res.p_of("peer_mean_employability");
        if (res.has("provider_mean_employability"))
            rep.coef_provider_mean = res.coef_of("provider_mean_employability");
    }
    {
        model_detail::Block b;
        b.add("peer_mean_employability", s.loo, false);
        model_detail::add_controls(b, s);
        AbsorbedDesign design(b.X, b.names, model_detail::standard_fe(s, fe_tol),
                              b.control_cols);
        const RegressionResult res = design.estimate(y);
        rep.coef_without_control = res.coef_of("peer_mean_employability");
        rep.se_without_control = res.se_of("peer_mean_employability");
    }
    return rep;
}

struct SortingGroupRow {
    std::string group;  // e.g. "entry_month=3"
    long n = 0;
    double mean = 0.0;
    double sd = 0.0;
    std::array<double, 9> deciles{};  // 10%..90%
};

struct SortingTable {
    std::string grouping;  // entry_month | start_month | target_occupation
    std::vector<SortingGroupRow> rows;
    KruskalWallis screen;  // rank test across groups; undefined for 1 group
};

struct SortingDiagnostics {
    std::vector<SortingTable> tables;
};

inline SortingDiagnostics sorting_diagnostics(const Dataset& ds,
                                              const std::vector<double>& scores) {
    struct Grouping {
        std::string name;
        std::map<int, std::vector<double>> values;
    };
    std::vector<Grouping> groupings(3);
    groupings[0].name = "entry_month";
    groupings[1].name = "start_month";
    groupings[2].name = "target_occupation";
    for (std::size_t i = 0; i < ds.persons.size(); ++i) {
        const auto& p = ds.persons[i];
        if (!p.is_participant()) continue;
        const auto& c = ds.course_of(p);
        groupings[0].values[month_of_year(p.entry_ue_month)].push_back(scores[i]);
        groupings[1].values[month_of_year(c.start_month)].push_back(scores[i]);
        groupings[2].values[c.target_occupation].push_back(scores[i]);
    }

    SortingDiagnostics out;
    for (auto& g : groupings) {
        SortingTable table;
        table.grouping = g.name;
        std::vector<std::vector<double>> kw_groups;
        for (auto& [key, vals] : g.values) {
            SortingGroupRow row;
            row.group = g.name + "=" + std::to_string(key);
            row.n = static_cast<long>(vals.size());
            row.mean = mean_of(vals);
            row.sd = sd_of(vals);
            std::sort(vals.begin(), vals.end());
            for (int d = 1; d <= 9; ++d)
                row.deciles[d - 1] = quantile_sorted(vals, d / 10.0);
            table.rows.push_back(row);
            kw_groups.push_back(vals);
        }
        table.screen = kruskal_wallis(kw_groups);
        out.tables.push_back(std::move(table));
    }
    return out;
}

struct VarianceRow {
    std::string variable;
    double sd_raw = 0.0;
    double sd_net = 0.0;
};

struct VarianceDecomposition {
    ProgramType program_type = ProgramType::short_training;
    std::vector<VarianceRow> rows;  // own, loo mean, loo sd
};

// SDs of the employability variables before and after residualizing on the
// fixed effects and course controls (Table-2-style panels). With
// net_against_fe = false the projection is the identity and net equals raw.
inline VarianceDecomposition variance_decomposition(const TypeSample& s,
                                                    double fe_tol = 1e-8,
                                                    bool net_against_fe = true) {
    VarianceDecomposition out;
    out.program_type = s.type;
    std::vector<Factor> factors;
    Eigen::MatrixXd controls(s.n(), 0);
    if (net_against_fe) {
        factors = validity_detail::net_factors(s);
        controls = validity_detail::control_block(s);
    }
    const Residualizer resid(factors, controls, fe_tol);
    const auto row = [&](const std::string& name, const std::vector<double>& v) {
        Eigen::VectorXd y(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) y[i] = v[i];
        VarianceRow r;
        r.variable = name;
        r.sd_raw = sd_of(v);
        r.sd_net = resid.net_sd(y);
        return r;
    };
    out.rows.push_back(row("own_employability", s.own));
    out.rows.push_back(row("peer_mean_employability", s.loo));
    out.rows.push_back(row("peer_sd_employability", s.loo_sd));
    return out;
}

}  // namespace peerfx
