#pragma once
// Weighted logistic regression via iteratively reweighted least squares.
// Used twice in the pipeline: the propensity score and the employability
// score, both with frequency weights.

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "peerfx/errors.hpp"

namespace peerfx {

struct ScoreModel {
    std::vector<std::string> feature_schema;  // excludes the intercept
    Eigen::VectorXd beta;                     // [intercept, features...]
    double deviance = 0.0;
    int iterations = 0;
    bool converged = false;
    double accuracy_at_half = 0.0;
};

namespace logit_detail {

inline Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X) {
    Eigen::MatrixXd D(X.rows(), X.cols() + 1);
    D.col(0).setOnes();
    D.rightCols(X.cols()) = X;
    return D;
}

}  // namespace logit_detail

// Weighted log-likelihood at beta; beta includes the intercept.
inline double logit_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& w, const Eigen::VectorXd& beta) {
    const Eigen::MatrixXd D = logit_detail::with_intercept(X);
    const Eigen::VectorXd eta = D * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        // y*eta - log(1+exp(eta)), evaluated stably
        const double e = eta[i];
        const double log1pexp = e > 30.0 ? e : std::log1p(std::exp(e));
        ll += w[i] * (y[i] * e - log1pexp);
    }
    return ll;
}

// Analytic gradient of the weighted log-likelihood.
inline Eigen::VectorXd logit_score(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& w, const Eigen::VectorXd& beta) {
    const Eigen::MatrixXd D = logit_detail::with_intercept(X);
    const Eigen::VectorXd eta = D * beta;
    Eigen::VectorXd r(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i)
        r[i] = w[i] * (y[i] - 1.0 / (1.0 + std::exp(-eta[i])));
    return D.transpose() * r;
}

inline ScoreModel fit_logit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            const Eigen::VectorXd& w,
                            std::vector<std::string> feature_names = {}) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    if (y.size() != n || w.size() != n)
        throw NumericalError("fit_logit: size mismatch");
    if (n <= p + 1) throw NumericalError("fit_logit: more features than observations");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (y[i] != 0.0 && y[i] != 1.0) throw NumericalError("fit_logit: y must be 0/1");
        if (w[i] < 0.0) throw NumericalError("fit_logit: negative weight");
    }
    for (Eigen::Index j = 0; j < p; ++j) {
        const double span = X.col(j).maxCoeff() - X.col(j).minCoeff();
        if (span == 0.0)
            throw NumericalError("fit_logit: feature " + std::to_string(j) +
                                 " is constant; only the intercept may be constant");
    }

    const Eigen::MatrixXd D = logit_detail::with_intercept(X);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);
    double dev_prev = std::numeric_limits<double>::infinity();
    constexpr double kDevTol = 1e-8;
    constexpr int kMaxIter = 100;
    constexpr double kBetaCap = 30.0;  // quasi-separation guard

    ScoreModel model;
    model.feature_schema = feature_names.empty()
                               ? std::vector<std::string>(p, std::string())
                               : std::move(feature_names);

    for (int it = 1; it <= kMaxIter; ++it) {
        const Eigen::VectorXd eta = D * beta;
        Eigen::VectorXd mu(n), irls_w(n), z(n);
        double dev = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double m = 1.0 / (1.0 + std::exp(-eta[i]));
            const double mc = std::min(std::max(m, 1e-12), 1.0 - 1e-12);
            mu[i] = mc;
            const double v = std::max(mc * (1.0 - mc), 1e-10);
            irls_w[i] = w[i] * v;
            z[i] = eta[i] + (y[i] - mc) / v;
            dev -= 2.0 * w[i] * (y[i] * std::log(mc) + (1.0 - y[i]) * std::log(1.0 - mc));
        }
        const Eigen::MatrixXd Dw = irls_w.asDiagonal() * D;
        const Eigen::MatrixXd xtwx = D.transpose() * Dw;
        const Eigen::VectorXd xtwz = Dw.transpose() * z;
        beta = xtwx.ldlt().solve(xtwz);

        if (beta.cwiseAbs().maxCoeff() > kBetaCap)
            throw NumericalError("fit_logit: coefficient exceeded " +
                                 std::to_string(kBetaCap) +
                                 "; data look (quasi-)separated");
        model.iterations = it;
        if (std::fabs(dev - dev_prev) < kDevTol) {
            model.converged = true;
            model.deviance = dev;
            break;
        }
        dev_prev = dev;
        model.deviance = dev;
    }
    if (!model.converged)
        throw NumericalError("fit_logit: no convergence in " + std::to_string(kMaxIter) +
                             " iterations; last deviance " + std::to_string(model.deviance));
    model.beta = beta;

    // weighted share of correct classifications at threshold 0.5
    const Eigen::VectorXd eta = D * beta;
    double correct = 0.0, total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double m = 1.0 / (1.0 + std::exp(-eta[i]));
        const double pred = m >= 0.5 ? 1.0 : 0.0;
        correct += w[i] * (pred == y[i] ? 1.0 : 0.0);
        total += w[i];
    }
    model.accuracy_at_half = total > 0.0 ? correct / total : 0.0;
    return model;
}

inline Eigen::VectorXd predict_logit(const ScoreModel& model, const Eigen::MatrixXd& X) {
    if (!model.converged)
        throw NumericalError("predict_logit: model did not converge");
    if (X.cols() + 1 != model.beta.size())
        throw NumericalError("predict_logit: feature width mismatch");
    const Eigen::VectorXd eta = logit_detail::with_intercept(X) * model.beta;
    Eigen::VectorXd out(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i)
        out[i] = 1.0 / (1.0 + std::exp(-eta[i]));
    return out;
}

}  // namespace peerfx
