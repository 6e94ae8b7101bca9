#pragma once
// Fixed-effects least squares: absorbs categorical factors by alternating
// projections, runs OLS on the residualized system, and provides CR1
// cluster-robust covariance and Wald tests.
//
// The absorbed design is reusable: demeaning the regressors is the expensive
// part and is independent of the outcome, so the 60 monthly regressions share
// one design.

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "peerfx/errors.hpp"
#include "peerfx/mathx.hpp"

namespace peerfx {

struct Factor {
    std::string name;
    int n_levels = 0;
    std::vector<std::int32_t> codes;  // one level per row
};

// Encodes raw ids into dense level codes, first appearance order.
template <typename T>
Factor make_factor(std::string name, const std::vector<T>& raw) {
    Factor f;
    f.name = std::move(name);
    f.codes.reserve(raw.size());
    std::unordered_map<T, std::int32_t> levels;
    for (const T& v : raw) {
        auto [it, inserted] = levels.emplace(v, static_cast<std::int32_t>(levels.size()));
        f.codes.push_back(it->second);
    }
    f.n_levels = static_cast<int>(levels.size());
    return f;
}

struct FESpec {
    std::vector<Factor> absorb_factors;
    Factor cluster;
    double tol = 1e-8;
    int max_iter = 10000;
};

struct AbsorbInfo {
    int iterations = 0;
    double max_delta = 0.0;
    bool converged = false;
};

// Alternating projections: sweep group means per factor until the largest
// adjustment in a full cycle drops below tol. A single factor is exact after
// one sweep.
inline AbsorbInfo absorb(Eigen::MatrixXd& M, const std::vector<Factor>& factors,
                         double tol = 1e-8, int max_iter = 10000) {
    AbsorbInfo info;
    if (factors.empty() || M.rows() == 0 || M.cols() == 0) {
        info.converged = true;
        return info;
    }
    const Eigen::Index n = M.rows();
    for (const auto& f : factors)
        if (static_cast<Eigen::Index>(f.codes.size()) != n)
            throw NumericalError("absorb: factor '" + f.name + "' length mismatch");

    std::vector<std::vector<double>> sums(factors.size());
    std::vector<std::vector<double>> counts(factors.size());
    for (std::size_t k = 0; k < factors.size(); ++k) {
        sums[k].resize(factors[k].n_levels);
        counts[k].assign(factors[k].n_levels, 0.0);
        for (auto c : factors[k].codes) counts[k][c] += 1.0;
    }

    for (int it = 1; it <= max_iter; ++it) {
        double cycle_delta = 0.0;
        for (std::size_t k = 0; k < factors.size(); ++k) {
            const auto& codes = factors[k].codes;
            auto& sum = sums[k];
            for (Eigen::Index j = 0; j < M.cols(); ++j) {
                std::fill(sum.begin(), sum.end(), 0.0);
                for (Eigen::Index i = 0; i < n; ++i) sum[codes[i]] += M(i, j);
                double local = 0.0;
                for (int l = 0; l < factors[k].n_levels; ++l) {
                    sum[l] /= counts[k][l];
                    local = std::max(local, std::fabs(sum[l]));
                }
                for (Eigen::Index i = 0; i < n; ++i) M(i, j) -= sum[codes[i]];
                cycle_delta = std::max(cycle_delta, local);
            }
        }
        info.iterations = it;
        info.max_delta = cycle_delta;
        if (cycle_delta < tol) {
            info.converged = true;
            return info;
        }
    }
    throw NumericalError("absorb: no convergence after " + std::to_string(max_iter) +
                         " cycles; attained max change " + std::to_string(info.max_delta));
}

namespace fe_detail {

// Connected components of the bipartite graph linking the first two factors;
// the standard two-way degrees-of-freedom correction.
inline int connected_components(const Factor& a, const Factor& b) {
    const int na = a.n_levels, nb = b.n_levels;
    std::vector<int> parent(na + nb);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t i = 0; i < a.codes.size(); ++i) {
        const int ra = find(a.codes[i]);
        const int rb = find(na + b.codes[i]);
        if (ra != rb) parent[ra] = rb;
    }
    std::vector<bool> seen(na + nb, false);
    int comps = 0;
    for (int x = 0; x < na + nb; ++x) {
        const int r = find(x);
        if (!seen[r]) {
            seen[r] = true;
            ++comps;
        }
    }
    return comps;
}

inline Factor reindex(const Factor& f, const std::vector<Eigen::Index>& rows) {
    std::vector<std::int32_t> raw;
    raw.reserve(rows.size());
    for (auto r : rows) raw.push_back(f.codes[r]);
    return make_factor<std::int32_t>(f.name, raw);
}

}  // namespace fe_detail

struct RegressionResult {
    std::vector<std::string> names;  // kept regressors
    Eigen::VectorXd coef;
    Eigen::MatrixXd vcov;  // cluster-robust
    std::vector<double> se;
    std::vector<double> p;
    long nobs = 0;
    int n_clusters = 0;
    int dof_model = 0;      // absorbed dof + kept regressors
    int dof_absorbed = 0;
    double r2_within = 0.0;
    std::map<std::string, double> residual_sd;
    std::vector<std::string> dropped;  // collinear with the absorbed space
    int singleton_rows_dropped = 0;
    AbsorbInfo absorb_info;

    int index_of(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return static_cast<int>(i);
        return -1;
    }
    bool has(const std::string& name) const { return index_of(name) >= 0; }
    double coef_of(const std::string& name) const {
        const int i = index_of(name);
        if (i < 0) throw NumericalError("no coefficient named '" + name + "'");
        return coef[i];
    }
    double se_of(const std::string& name) const {
        const int i = index_of(name);
        if (i < 0) throw NumericalError("no coefficient named '" + name + "'");
        return se[i];
    }
    double p_of(const std::string& name) const {
        const int i = index_of(name);
        if (i < 0) throw NumericalError("no coefficient named '" + name + "'");
        return p[i];
    }
    double inference_dof() const { return static_cast<double>(n_clusters - 1); }
};

// CR1 sandwich: c * (X'X)^-1 [ sum_g (X_g'e_g)(X_g'e_g)' ] (X'X)^-1 with
// c = G/(G-1) * (N-1)/(N-K); K counts absorbed dof.
inline Eigen::MatrixXd cluster_vcov(const Eigen::MatrixXd& X, const Eigen::VectorXd& e,
                                    const Factor& cluster, int dof_model) {
    const int g = cluster.n_levels;
    if (g < 2) throw NumericalError("cluster_vcov: need at least 2 clusters");
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(p, p);
    Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(g, p);
    for (Eigen::Index i = 0; i < n; ++i)
        scores.row(cluster.codes[i]) += e[i] * X.row(i);
    for (int gi = 0; gi < g; ++gi)
        meat += scores.row(gi).transpose() * scores.row(gi);
    const Eigen::MatrixXd bread = (X.transpose() * X).ldlt().solve(
        Eigen::MatrixXd::Identity(p, p));
    const double dn = static_cast<double>(n);
    const double dk = static_cast<double>(dof_model);
    if (dn - dk <= 0.0)
        throw NumericalError("cluster_vcov: nonpositive residual dof");
    const double c = (static_cast<double>(g) / (g - 1.0)) * ((dn - 1.0) / (dn - dk));
    return c * bread * meat * bread;
}

class AbsorbedDesign {
  public:
    // X: full regressor matrix (no intercept; the absorbed space carries it).
    // control_cols: columns partialled out when computing residual SDs of the
    // other regressors (the course-control block).
    AbsorbedDesign(const Eigen::MatrixXd& X, std::vector<std::string> names,
                   FESpec spec, std::vector<int> control_cols = {})
        : names_all_(std::move(names)), spec_(std::move(spec)), n_input_rows_(X.rows()) {
        if (static_cast<Eigen::Index>(spec_.cluster.codes.size()) != X.rows())
            throw NumericalError("design: cluster factor length mismatch");
        if (spec_.absorb_factors.empty()) {
            // no absorbed factors: sweep the grand mean, i.e. a plain intercept
            Factor intercept;
            intercept.name = "(intercept)";
            intercept.n_levels = 1;
            intercept.codes.assign(X.rows(), 0);
            spec_.absorb_factors.push_back(std::move(intercept));
        }

        // drop rows that are singletons within any absorbed level; they have
        // no within variation and distort the small-sample correction
        std::vector<Eigen::Index> rows(X.rows());
        std::iota(rows.begin(), rows.end(), 0);
        bool changed = true;
        while (changed) {
            changed = false;
            for (const auto& f : spec_.absorb_factors) {
                std::unordered_map<std::int32_t, int> counts;
                for (auto r : rows) counts[f.codes[r]]++;
                std::vector<Eigen::Index> keep;
                keep.reserve(rows.size());
                for (auto r : rows)
                    if (counts[f.codes[r]] > 1) keep.push_back(r);
                if (keep.size() != rows.size()) {
                    rows.swap(keep);
                    changed = true;
                }
            }
        }
        if (rows.empty())
            throw NumericalError("design: all rows dropped as singleton groups");
        rows_ = rows;
        singleton_rows_dropped_ = static_cast<int>(X.rows() - rows.size());

        for (const auto& f : spec_.absorb_factors)
            factors_.push_back(fe_detail::reindex(f, rows_));
        cluster_ = fe_detail::reindex(spec_.cluster, rows_);

        Xd_.resize(rows_.size(), X.cols());
        for (std::size_t i = 0; i < rows_.size(); ++i) Xd_.row(i) = X.row(rows_[i]);
        orig_norm_.resize(X.cols());
        for (Eigen::Index j = 0; j < X.cols(); ++j) orig_norm_[j] = Xd_.col(j).norm();
        absorb_info_ = absorb(Xd_, factors_, spec_.tol, spec_.max_iter);

        // columns constant within the absorbed space carry no information
        std::vector<int> candidates;
        for (Eigen::Index j = 0; j < Xd_.cols(); ++j) {
            if (Xd_.col(j).norm() <= 1e-8 * (1.0 + orig_norm_[j]))
                dropped_.push_back(names_all_[j]);
            else
                candidates.push_back(static_cast<int>(j));
        }
        // rank-revealing QR over the surviving columns
        if (!candidates.empty()) {
            Eigen::MatrixXd Xc(Xd_.rows(), candidates.size());
            for (std::size_t k = 0; k < candidates.size(); ++k)
                Xc.col(k) = Xd_.col(candidates[k]);
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xc);
            qr.setThreshold(1e-10);
            const int rank = static_cast<int>(qr.rank());
            std::vector<int> pivot(candidates.size());
            for (std::size_t k = 0; k < candidates.size(); ++k)
                pivot[k] = qr.colsPermutation().indices()[k];
            std::vector<bool> keep_col(candidates.size(), false);
            for (int k = 0; k < rank; ++k) keep_col[pivot[k]] = true;
            for (std::size_t k = 0; k < candidates.size(); ++k) {
                if (keep_col[k])
                    kept_cols_.push_back(candidates[k]);
                else
                    dropped_.push_back(names_all_[candidates[k]]);
            }
        }

        Xk_.resize(Xd_.rows(), kept_cols_.size());
        for (std::size_t k = 0; k < kept_cols_.size(); ++k)
            Xk_.col(k) = Xd_.col(kept_cols_[k]);
        if (Xk_.cols() > 0) {
            xtx_ = Xk_.transpose() * Xk_;
            xtx_solver_.compute(xtx_);
        }

        dof_absorbed_ = absorbed_dof();
        compute_residual_sds(control_cols);
    }

    RegressionResult estimate(const Eigen::VectorXd& y_full) const {
        if (y_full.size() != n_input_rows_)
            throw NumericalError("estimate: outcome length does not match design input");
        Eigen::MatrixXd y(rows_.size(), 1);
        for (std::size_t i = 0; i < rows_.size(); ++i) y(i, 0) = y_full[rows_[i]];
        absorb(y, factors_, spec_.tol, spec_.max_iter);

        RegressionResult res;
        res.singleton_rows_dropped = singleton_rows_dropped_;
        res.absorb_info = absorb_info_;
        res.dropped = dropped_;
        res.nobs = static_cast<long>(rows_.size());
        res.n_clusters = cluster_.n_levels;
        res.dof_absorbed = dof_absorbed_;
        res.dof_model = dof_absorbed_ + static_cast<int>(kept_cols_.size());
        for (int j : kept_cols_) res.names.push_back(names_all_[j]);

        const Eigen::Index n = Xk_.rows();
        if (res.n_clusters < 2)
            throw NumericalError("estimate: need at least 2 clusters");
        if (n <= res.dof_model)
            throw NumericalError("estimate: no residual degrees of freedom");

        if (kept_cols_.empty()) {
            res.coef.resize(0);
            res.vcov.resize(0, 0);
            res.r2_within = 0.0;
            return res;
        }
        res.coef = xtx_solver_.solve(Xk_.transpose() * y.col(0));
        const Eigen::VectorXd resid = y.col(0) - Xk_ * res.coef;
        const double sst = y.col(0).squaredNorm();
        const double ssr = resid.squaredNorm();
        res.r2_within = sst > 0.0 ? 1.0 - ssr / sst : 0.0;
        res.vcov = cluster_vcov(Xk_, resid, cluster_, res.dof_model);
        const double dof = res.inference_dof();
        for (Eigen::Index j = 0; j < res.coef.size(); ++j) {
            const double sd = std::sqrt(std::max(res.vcov(j, j), 0.0));
            res.se.push_back(sd);
            res.p.push_back(sd > 0.0 ? t_pvalue(res.coef[j] / sd, dof) : 1.0);
        }
        for (const auto& [name, sd] : residual_sd_) res.residual_sd[name] = sd;
        return res;
    }

    const std::vector<Eigen::Index>& rows() const { return rows_; }
    const Eigen::MatrixXd& demeaned_X() const { return Xk_; }
    const Factor& cluster() const { return cluster_; }
    const std::map<std::string, double>& residual_sds() const { return residual_sd_; }
    int n_kept() const { return static_cast<int>(kept_cols_.size()); }

  private:
    int absorbed_dof() const {
        if (factors_.empty()) return 0;
        if (factors_.size() == 1) return factors_[0].n_levels;
        int dof = factors_[0].n_levels + factors_[1].n_levels -
                  fe_detail::connected_components(factors_[0], factors_[1]);
        // the two-way count is exact; extra factors are counted naively
        for (std::size_t k = 2; k < factors_.size(); ++k)
            dof += factors_[k].n_levels - 1;
        return dof;
    }

    void compute_residual_sds(const std::vector<int>& control_cols) {
        const Eigen::Index n = Xd_.rows();
        for (std::size_t k = 0; k < kept_cols_.size(); ++k) {
            const int j = kept_cols_[k];
            std::vector<int> ctrl;
            for (int c : control_cols) {
                if (c == j) continue;
                if (std::find(kept_cols_.begin(), kept_cols_.end(), c) !=
                    kept_cols_.end())
                    ctrl.push_back(c);
            }
            Eigen::VectorXd r = Xd_.col(j);
            if (!ctrl.empty()) {
                Eigen::MatrixXd C(n, ctrl.size());
                for (std::size_t m = 0; m < ctrl.size(); ++m) C.col(m) = Xd_.col(ctrl[m]);
                const Eigen::VectorXd b =
                    (C.transpose() * C).ldlt().solve(C.transpose() * r);
                r -= C * b;
            }
            residual_sd_[names_all_[j]] =
                n > 1 ? std::sqrt(r.squaredNorm() / static_cast<double>(n - 1)) : 0.0;
        }
    }

    std::vector<std::string> names_all_;
    FESpec spec_;
    std::vector<Eigen::Index> rows_;
    std::vector<Factor> factors_;
    Factor cluster_;
    Eigen::MatrixXd Xd_;  // demeaned, all columns
    Eigen::MatrixXd Xk_;  // demeaned, kept columns
    Eigen::MatrixXd xtx_;
    Eigen::LDLT<Eigen::MatrixXd> xtx_solver_;
    std::vector<double> orig_norm_;
    std::vector<int> kept_cols_;
    std::vector<std::string> dropped_;
    std::map<std::string, double> residual_sd_;
    AbsorbInfo absorb_info_;
    int dof_absorbed_ = 0;
    int singleton_rows_dropped_ = 0;
    Eigen::Index n_input_rows_ = 0;
};

inline RegressionResult ols_absorbed(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                                     const std::vector<std::string>& names,
                                     const FESpec& spec,
                                     const std::vector<int>& control_cols = {}) {
    AbsorbedDesign design(X, names, spec, control_cols);
    return design.estimate(y);
}

struct WaldTest {
    double f = 0.0;
    double p = 1.0;
    int q = 0;
};

inline WaldTest wald_joint(const RegressionResult& res,
                           const std::vector<std::string>& names) {
    std::vector<int> idx;
    for (const auto& n : names) {
        const int i = res.index_of(n);
        if (i < 0) throw NumericalError("wald_joint: unknown coefficient '" + n + "'");
        idx.push_back(i);
    }
    const int q = static_cast<int>(idx.size());
    Eigen::VectorXd b(q);
    Eigen::MatrixXd v(q, q);
    for (int a = 0; a < q; ++a) {
        b[a] = res.coef[idx[a]];
        for (int c = 0; c < q; ++c) v(a, c) = res.vcov(idx[a], idx[c]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(v);
    if (!lu.isInvertible())
        throw NumericalError("wald_joint: singular restricted covariance block");
    WaldTest t;
    t.q = q;
    t.f = (b.transpose() * lu.solve(b)).value() / q;
    t.p = 1.0 - f_cdf(t.f, q, res.inference_dof());
    return t;
}

struct ContrastTest {
    double estimate = 0.0;
    double se = 0.0;
    double p = 1.0;
};

// Linear combination sum_k w_k * coef_k, tested against zero.
inline ContrastTest wald_contrast(const RegressionResult& res,
                                  const std::vector<std::pair<std::string, double>>& weights) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(res.coef.size());
    for (const auto& [name, wt] : weights) {
        const int i = res.index_of(name);
        if (i < 0) throw NumericalError("wald_contrast: unknown coefficient '" + name + "'");
        w[i] = wt;
    }
    ContrastTest t;
    t.estimate = w.dot(res.coef);
    const double var = (w.transpose() * res.vcov * w).value();
    t.se = std::sqrt(std::max(var, 0.0));
    t.p = t.se > 0.0 ? t_pvalue(t.estimate / t.se, res.inference_dof()) : 1.0;
    return t;
}

struct SdEffect {
    double effect = 0.0;
    double se = 0.0;
    bool degenerate = false;  // residual SD was zero
};

// Reported effect of a one-residual-SD increase: coef * residual_sd, the SE
// scaled identically.
inline SdEffect scale_to_sd_effect(double coef, double se, double residual_sd) {
    SdEffect e;
    e.effect = coef * residual_sd;
    e.se = se * residual_sd;
    e.degenerate = residual_sd == 0.0;
    return e;
}

}  // namespace peerfx
