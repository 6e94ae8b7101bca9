#pragma once
// Small numerical helpers: distribution tail areas, quantiles, descriptive
// statistics. The continued-fraction incomplete beta/gamma routines follow
// the standard Lentz scheme.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace peerfx {

namespace detail {

inline double betacf(double a, double b, double x) {
    constexpr int max_iter = 300;
    constexpr double eps = 3e-14;
    constexpr double fpmin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double betainc(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                         a * std::log(x) + b * std::log1p(-x);
    const double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0))
        return bt * detail::betacf(a, b, x) / a;
    return 1.0 - bt * detail::betacf(b, a, 1.0 - x) / b;
}

// Regularized lower incomplete gamma P(a, x).
inline double gammainc_lower(double a, double x) {
    if (x <= 0.0) return 0.0;
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int n = 0; n < 500; ++n) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 3e-14) break;
        }
        return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    // continued fraction for Q(a, x)
    constexpr double fpmin = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / fpmin, d = 1.0 / b, h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = b + an / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 3e-14) break;
    }
    return 1.0 - std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

inline double f_cdf(double f, double d1, double d2) {
    if (f <= 0.0) return 0.0;
    return betainc(d1 / 2.0, d2 / 2.0, d1 * f / (d1 * f + d2));
}

// Two-sided p-value of a t statistic with df degrees of freedom.
inline double t_pvalue(double t, double df) {
    if (!std::isfinite(t)) return std::numeric_limits<double>::quiet_NaN();
    return 1.0 - f_cdf(t * t, 1.0, df);
}

inline double chi2_sf(double x, double df) {
    return 1.0 - gammainc_lower(df / 2.0, x / 2.0);
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Sample SD, divisor n-1.
inline double sd_of(const std::vector<double>& v) {
    const std::size_t n = v.size();
    if (n < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(n - 1));
}

// Linear-interpolation quantile on a sorted vector (R type 7).
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile of empty vector");
    if (sorted.size() == 1) return sorted[0];
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double quantile_of(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    return quantile_sorted(v, p);
}

// Two-sample Kolmogorov-Smirnov statistic; the second sample may be weighted.
inline double ks_statistic(std::vector<double> a,
                           std::vector<double> b,
                           std::vector<double> wb = {}) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks: empty sample");
    if (wb.empty()) wb.assign(b.size(), 1.0);
    std::vector<std::size_t> order(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return b[i] < b[j]; });
    std::sort(a.begin(), a.end());
    double wtot = 0.0;
    for (double w : wb) wtot += w;

    double dmax = 0.0, fb = 0.0;
    std::size_t ia = 0;
    const double na = static_cast<double>(a.size());
    for (std::size_t k = 0; k < order.size();) {
        const double x = b[order[k]];
        while (k < order.size() && b[order[k]] == x) {
            fb += wb[order[k]] / wtot;
            ++k;
        }
        while (ia < a.size() && a[ia] <= x) ++ia;
        dmax = std::max(dmax, std::fabs(static_cast<double>(ia) / na - fb));
    }
    // sweep the other direction: evaluate at a-sample points
    fb = 0.0;
    std::size_t ib = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        while (ib < order.size() && b[order[ib]] <= a[k]) {
            fb += wb[order[ib]] / wtot;
            ++ib;
        }
        const double fa = static_cast<double>(k + 1) / na;
        dmax = std::max(dmax, std::fabs(fa - fb));
    }
    return dmax;
}

// Kruskal-Wallis rank statistic with midranks and tie correction.
// Returns {H, p} where p uses the chi-square approximation with g-1 dof.
struct KruskalWallis {
    double h = std::numeric_limits<double>::quiet_NaN();
    double p = std::numeric_limits<double>::quiet_NaN();
    bool defined = false;
};

inline KruskalWallis kruskal_wallis(const std::vector<std::vector<double>>& groups) {
    std::size_t g = 0;
    std::size_t n = 0;
    for (const auto& grp : groups) {
        if (!grp.empty()) ++g;
        n += grp.size();
    }
    KruskalWallis out;
    if (g < 2 || n < 3) return out;

    struct Item { double value; std::size_t group; };
    std::vector<Item> items;
    items.reserve(n);
    for (std::size_t gi = 0; gi < groups.size(); ++gi)
        for (double v : groups[gi]) items.push_back({v, gi});
    std::sort(items.begin(), items.end(),
              [](const Item& a, const Item& b) { return a.value < b.value; });

    std::vector<double> rank_sum(groups.size(), 0.0);
    double tie_sum = 0.0;
    std::size_t i = 0;
    while (i < items.size()) {
        std::size_t j = i;
        while (j < items.size() && items[j].value == items[i].value) ++j;
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        const double t = static_cast<double>(j - i);
        tie_sum += t * t * t - t;
        for (std::size_t k = i; k < j; ++k) rank_sum[items[k].group] += midrank;
        i = j;
    }
    const double dn = static_cast<double>(n);
    double h = 0.0;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        if (groups[gi].empty()) continue;
        const double ng = static_cast<double>(groups[gi].size());
        h += rank_sum[gi] * rank_sum[gi] / ng;
    }
    h = 12.0 / (dn * (dn + 1.0)) * h - 3.0 * (dn + 1.0);
    const double correction = 1.0 - tie_sum / (dn * dn * dn - dn);
    if (correction <= 0.0) return out;  // all values tied
    out.h = h / correction;
    out.p = chi2_sf(out.h, static_cast<double>(g - 1));
    out.defined = true;
    return out;
}

}  // namespace peerfx
