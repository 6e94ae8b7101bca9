#pragma once
// Per-individual peer-group statistics over the course roster: leave-one-out
// mean and SD of employability, quintile/third fractions, and leave-one-out
// means of other peer characteristics.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "peerfx/errors.hpp"
#include "peerfx/mathx.hpp"
#include "peerfx/types.hpp"

namespace peerfx {

// The displayed formula in the source material divides the leave-one-out sum
// by n_g; its own summary statistics require n_g - 1. Default is n_g - 1, the
// literal variant stays available.
enum class LooDivisor { peers, group_size };

inline double loo_mean(const std::vector<double>& scores, std::size_t i,
                       LooDivisor div = LooDivisor::peers) {
    if (scores.size() < 2) throw NumericalError("loo_mean: singleton course");
    double s = 0.0;
    for (std::size_t j = 0; j < scores.size(); ++j)
        if (j != i) s += scores[j];
    const double denom = div == LooDivisor::peers
                             ? static_cast<double>(scores.size() - 1)
                             : static_cast<double>(scores.size());
    return s / denom;
}

inline double loo_sd(const std::vector<double>& scores, std::size_t i) {
    if (scores.size() < 3) throw NumericalError("loo_sd: fewer than 2 peers");
    double s = 0.0;
    for (std::size_t j = 0; j < scores.size(); ++j)
        if (j != i) s += scores[j];
    const double m = s / static_cast<double>(scores.size() - 1);
    double ss = 0.0;
    for (std::size_t j = 0; j < scores.size(); ++j)
        if (j != i) ss += (scores[j] - m) * (scores[j] - m);
    return std::sqrt(ss / static_cast<double>(scores.size() - 2));
}

// Bin thresholds over the pooled participant score distribution.
struct BinThresholds {
    std::vector<double> cuts;  // strictly increasing interior cut points
    std::string reference_population;

    void validate() const {
        for (std::size_t i = 1; i < cuts.size(); ++i)
            if (cuts[i - 1] >= cuts[i])
                throw NumericalError("bin thresholds must be strictly increasing");
    }
};

inline BinThresholds make_thresholds(std::vector<double> pooled_scores, int n_bins,
                                     std::string label) {
    std::sort(pooled_scores.begin(), pooled_scores.end());
    BinThresholds t;
    t.reference_population = std::move(label);
    for (int j = 1; j < n_bins; ++j)
        t.cuts.push_back(quantile_sorted(pooled_scores,
                                         static_cast<double>(j) / n_bins));
    t.validate();
    return t;
}

// A value equal to a cut goes to the lower bin of the pair.
inline std::size_t bin_of(double v, const BinThresholds& t) {
    std::size_t b = 0;
    while (b < t.cuts.size() && v > t.cuts[b]) ++b;
    return b;
}

inline std::vector<double> bin_fractions(const std::vector<double>& scores,
                                         std::size_t i, const BinThresholds& t) {
    t.validate();
    if (scores.size() < 2) throw NumericalError("bin_fractions: singleton course");
    std::vector<int> counts(t.cuts.size() + 1, 0);
    int n = 0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
        if (j == i) continue;
        ++counts[bin_of(scores[j], t)];
        ++n;
    }
    std::vector<double> frac(counts.size());
    for (std::size_t b = 0; b < counts.size(); ++b)
        frac[b] = static_cast<double>(counts[b]) / n;
    return frac;
}

struct PeerStats {
    double loo_mean = 0.0;
    double loo_sd = 0.0;
    int peer_count = 0;
    std::array<double, 5> frac_quintile{};
    std::array<double, 3> frac_third{};
    double loo_mean_ued = 0.0;
    double loo_mean_emp_2y = 0.0;
    double loo_mean_emp_10y = 0.0;
    double loo_mean_earnings_2y = 0.0;
};

struct PeerStatsTable {
    // parallel vectors over participant rows of the dataset
    std::vector<std::size_t> person_row;
    std::vector<PeerStats> stats;
    BinThresholds quintiles;
    BinThresholds thirds;

    // dense lookup: dataset person row -> index into stats (or npos)
    std::vector<std::size_t> row_lookup;

    const PeerStats& for_row(std::size_t dataset_row) const {
        const std::size_t k = row_lookup.at(dataset_row);
        if (k == static_cast<std::size_t>(-1))
            throw NumericalError("no peer stats for person row");
        return stats[k];
    }
};

// scores: employability per dataset person row (NaN for non-participants).
// Thresholds are pooled across program types unless per_type_thresholds.
inline PeerStatsTable compute_peer_stats(const Dataset& ds,
                                         const std::vector<double>& scores,
                                         LooDivisor div = LooDivisor::peers,
                                         bool per_type_thresholds = false) {
    PeerStatsTable table;
    table.row_lookup.assign(ds.persons.size(), static_cast<std::size_t>(-1));

    std::vector<double> pooled;
    for (std::size_t i = 0; i < ds.persons.size(); ++i)
        if (ds.persons[i].is_participant()) {
            if (std::isnan(scores[i]))
                throw NumericalError("participant row " + std::to_string(i) +
                                     " has no employability score");
            pooled.push_back(scores[i]);
        }
    if (pooled.empty()) throw NumericalError("compute_peer_stats: no participants");
    table.quintiles = make_thresholds(pooled, 5, "pooled participants");
    table.thirds = make_thresholds(pooled, 3, "pooled participants");

    const std::size_t c2y = ds.covariate_index("months_employed_2y");
    const std::size_t c10y = ds.covariate_index("months_employed_10y");
    const std::size_t cearn = ds.covariate_index("earnings_2y");

    for (const auto& course : ds.courses) {
        const long course_id = course.course_id;
        const auto it = ds.course_participants.find(course_id);
        if (it == ds.course_participants.end()) continue;
        const auto& rows = it->second;
        if (rows.size() < 2)
            throw NumericalError("course " + std::to_string(course_id) +
                                 " is a singleton; peer statistics undefined");
        BinThresholds quint = table.quintiles;
        BinThresholds third = table.thirds;
        if (per_type_thresholds) {
            const auto type = course.program_type;
            std::vector<double> type_pool;
            for (std::size_t i = 0; i < ds.persons.size(); ++i)
                if (ds.persons[i].is_participant() &&
                    ds.course_of(ds.persons[i]).program_type == type)
                    type_pool.push_back(scores[i]);
            quint = make_thresholds(type_pool, 5, std::string("participants ") +
                                                      to_string(type));
            third = make_thresholds(type_pool, 3, std::string("participants ") +
                                                      to_string(type));
        }

        std::vector<double> s(rows.size()), uedv(rows.size()), e2(rows.size()),
            e10(rows.size()), earn(rows.size());
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const auto& p = ds.persons[rows[k]];
            s[k] = scores[rows[k]];
            uedv[k] = p.ue_duration_at_start.value_or(0.0);
            e2[k] = p.covariates[c2y];
            e10[k] = p.covariates[c10y];
            earn[k] = p.covariates[cearn];
        }
        for (std::size_t k = 0; k < rows.size(); ++k) {
            PeerStats ps;
            ps.loo_mean = loo_mean(s, k, div);
            ps.loo_sd = loo_sd(s, k);
            ps.peer_count = static_cast<int>(rows.size()) - 1;
            const auto fq = bin_fractions(s, k, quint);
            std::copy(fq.begin(), fq.end(), ps.frac_quintile.begin());
            const auto ft = bin_fractions(s, k, third);
            std::copy(ft.begin(), ft.end(), ps.frac_third.begin());
            ps.loo_mean_ued = loo_mean(uedv, k);
            ps.loo_mean_emp_2y = loo_mean(e2, k);
            ps.loo_mean_emp_10y = loo_mean(e10, k);
            ps.loo_mean_earnings_2y = loo_mean(earn, k);
            table.row_lookup[rows[k]] = table.stats.size();
            table.person_row.push_back(rows[k]);
            table.stats.push_back(ps);
        }
    }
    return table;
}

}  // namespace peerfx
