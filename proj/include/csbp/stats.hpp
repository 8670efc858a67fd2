#ifndef CSBP_STATS_HPP
#define CSBP_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "csbp/path.hpp"
#include "csbp/simulate.hpp"

namespace csbp {

struct Estimate {
    double value = 0.0;
    double stderr_ = 0.0;  // sample std / sqrt(n)
    std::size_t n = 0;
};

namespace detail {

// Numerically stable pairwise reduction.
inline double pairwise_sum(const double* x, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

}  // namespace detail

/// Sample mean with its standard error.
inline Estimate mean_estimate(const std::vector<double>& xs) {
    if (xs.empty()) throw std::invalid_argument("mean_estimate: empty sample");
    const std::size_t n = xs.size();
    const double mean = detail::pairwise_sum(xs.data(), n) / static_cast<double>(n);
    if (n < 2) return {mean, 0.0, n};
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = (xs[i] - mean) * (xs[i] - mean);
    const double var = detail::pairwise_sum(sq.data(), n) / static_cast<double>(n - 1);
    return {mean, std::sqrt(var / static_cast<double>(n)), n};
}

/// Monte Carlo estimate of E e^{-lambda Z_t} over the ensemble, with the
/// convention e^{-lambda * inf} = 0.
inline Estimate empirical_laplace(const PathEnsemble& ens, double t, double lambda) {
    if (ens.paths.empty()) throw std::invalid_argument("empirical_laplace: empty ensemble");
    if (lambda < 0.0) throw std::domain_error("empirical_laplace: lambda must be nonnegative");
    std::vector<double> xs;
    xs.reserve(ens.paths.size());
    for (const CadlagPath& p : ens.paths) {
        const ExtReal z = eval(p, t);
        xs.push_back(z.is_infinite() ? 0.0 : std::exp(-lambda * z.get()));
    }
    return mean_estimate(xs);
}

/// Tail of the Kolmogorov distribution: P(K > x) = 2 sum (-1)^{k-1} e^{-2k^2x^2}.
inline double kolmogorov_tail(double x) {
    if (x <= 0.0) return 1.0;
    if (x > 10.0) return 0.0;
    double s = 0.0;
    for (int k = 1; k <= 101; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        s += (k % 2 == 1) ? term : -term;
        if (term < 1e-18) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

struct KsResult {
    double d = 0.0;  // sup |F_a - F_b|
    double p = 1.0;  // asymptotic p-value
};

/// Two-sample Kolmogorov-Smirnov test. Inputs must be sorted ascending;
/// +inf entries are legal (the compactified state space) and sit above all
/// finite values. p-value via the asymptotic tail with the effective-sample
/// correction sqrt(ne) + 0.12 + 0.11/sqrt(ne).
inline KsResult ks_two_sample(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 10 || b.size() < 10)
        throw std::invalid_argument("ks_two_sample: need at least 10 points per sample");
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    d = std::max(d, std::abs(1.0 - static_cast<double>(j) / nb));
    d = std::max(d, std::abs(static_cast<double>(i) / na - 1.0));
    const double ne = na * nb / (na + nb);
    const double sq = std::sqrt(ne);
    return {d, kolmogorov_tail((sq + 0.12 + 0.11 / sq) * d)};
}

/// One-sample KS test against a given CDF. Sample must be sorted.
inline KsResult ks_one_sample(const std::vector<double>& xs,
                              const std::function<double(double)>& cdf) {
    if (xs.size() < 10)
        throw std::invalid_argument("ks_one_sample: need at least 10 points");
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    }
    const double sq = std::sqrt(n);
    return {d, kolmogorov_tail((sq + 0.12 + 0.11 / sq) * d)};
}

/// Fraction of paths with terminal value 0, binomial standard error.
/// Truncated (censored) paths count as non-extinct; the bias is the caller's
/// to bound via a tail estimate.
inline Estimate extinction_estimate(const PathEnsemble& ens) {
    if (ens.paths.empty()) throw std::invalid_argument("extinction_estimate: empty ensemble");
    std::size_t extinct = 0;
    for (const CadlagPath& p : ens.paths)
        if (!p.truncated() && p.terminal.is_zero()) ++extinct;
    const double n = static_cast<double>(ens.paths.size());
    const double ph = static_cast<double>(extinct) / n;
    return {ph, std::sqrt(ph * (1.0 - ph) / n), ens.paths.size()};
}

/// Collects holding intervals of Event paths at states accepted by the
/// filter (censored final intervals excluded) and tests them against the
/// exponential law with the state-dependent rate, by mapping each interval
/// h at state v to rate(v) * h and comparing with Exp(1).
inline KsResult holding_time_test(const std::vector<CadlagPath>& paths,
                                  const std::function<bool(double)>& state_filter,
                                  const std::function<double(double)>& rate_of_state) {
    std::vector<double> scaled;
    for (const CadlagPath& p : paths) {
        if (p.kind != PathKind::Event)
            throw std::invalid_argument("holding_time_test: Event paths only");
        for (std::size_t i = 0; i + 1 < p.values.size(); ++i) {
            const ExtReal v = p.values[i];
            if (v.is_infinite() || !state_filter(v.get())) continue;
            scaled.push_back(rate_of_state(v.get()) * (p.times[i + 1] - p.times[i]));
        }
        // the interval after the last breakpoint is censored by the horizon
        // (truncated paths) or infinite (absorbed paths); skip either way
    }
    if (scaled.size() < 10)
        throw std::invalid_argument("holding_time_test: fewer than 10 holding intervals");
    std::sort(scaled.begin(), scaled.end());
    return ks_one_sample(scaled, [](double x) { return -std::expm1(-x); });
}

}  // namespace csbp

#endif  // CSBP_STATS_HPP
