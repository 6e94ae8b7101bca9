#pragma once
// Covariate balance diagnostics for the matched sample: standardized bias
// per covariate, SB = |E_cs(X) - E_p(X)| / sqrt((V_cs(X) + V_p(X)) / 2) * 100.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "peerfx/errors.hpp"

namespace peerfx {

struct BalanceRow {
    std::string covariate;
    double mean_participants = 0.0;
    double mean_matched = 0.0;
    double diff = 0.0;
    std::optional<double> standardized_bias;  // empty when both variances are 0
    bool flagged = false;                     // |SB| >= 25
};

struct BalanceReport {
    std::vector<BalanceRow> rows;
    double max_abs_sb = 0.0;
    double share_below_25 = 0.0;  // among covariates with a defined SB
};

namespace balance_detail {

struct Moments {
    double mean = 0.0;
    double var = 0.0;
};

inline Moments weighted_moments(const std::vector<double>& x,
                                const std::vector<double>& w) {
    double sw = 0.0, sx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        sx += w[i] * x[i];
    }
    Moments m;
    if (sw <= 0.0) return m;
    m.mean = sx / sw;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        ss += w[i] * (x[i] - m.mean) * (x[i] - m.mean);
    m.var = sw > 1.0 ? ss / (sw - 1.0) : 0.0;  // frequency-weight semantics
    return m;
}

}  // namespace balance_detail

// participants[k][i], matched[k][i]: covariate k over the two samples;
// weights are the matching frequency weights of the pool rows.
inline BalanceReport balance_report(const std::vector<std::string>& names,
                                    const std::vector<std::vector<double>>& participants,
                                    const std::vector<std::vector<double>>& matched,
                                    const std::vector<double>& weights) {
    if (names.size() != participants.size() || names.size() != matched.size())
        throw NumericalError("balance_report: covariate count mismatch");
    BalanceReport rep;
    const std::vector<double> unit(participants.empty() ? 0 : participants[0].size(), 1.0);
    int defined = 0, below = 0;
    for (std::size_t k = 0; k < names.size(); ++k) {
        const auto mp = balance_detail::weighted_moments(participants[k], unit);
        const auto mm = balance_detail::weighted_moments(matched[k], weights);
        BalanceRow row;
        row.covariate = names[k];
        row.mean_participants = mp.mean;
        row.mean_matched = mm.mean;
        row.diff = mm.mean - mp.mean;
        const double pooled = (mp.var + mm.var) / 2.0;
        if (pooled > 0.0) {
            row.standardized_bias = std::fabs(row.diff) / std::sqrt(pooled) * 100.0;
            row.flagged = *row.standardized_bias >= 25.0;
            ++defined;
            if (*row.standardized_bias < 25.0) ++below;
            rep.max_abs_sb = std::max(rep.max_abs_sb, *row.standardized_bias);
        }
        // zero variance in both groups: SB undefined, reported as n/a
        rep.rows.push_back(row);
    }
    rep.share_below_25 = defined > 0 ? static_cast<double>(below) / defined : 0.0;
    return rep;
}

}  // namespace peerfx
