#ifndef CSBP_LAMPERTI_HPP
#define CSBP_LAMPERTI_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "csbp/path.hpp"

namespace csbp {

inline constexpr double kValueFloor = 1e-300;  // below this, treat as 0 when dividing

/// A nondecreasing piecewise-linear function of time (an additive functional
/// of a path, or its right-inverse). Slopes may be 0 (flat stretch) or
/// +inf (instant saturation to infinity).
struct TimeChange {
    std::vector<double> knots;   // increasing, knots[0] == 0
    std::vector<double> vals;    // function value at each knot
    std::vector<double> slopes;  // slopes[i] on [knots[i], knots[i+1]) or beyond the last knot
    double domain_end = std::numeric_limits<double>::infinity();

    double value(double u) const {
        if (u < 0.0) throw std::domain_error("TimeChange: negative time");
        if (u > domain_end + 1e-12)
            throw std::domain_error("TimeChange: time beyond domain");
        auto it = std::upper_bound(knots.begin(), knots.end(), u);
        std::size_t i = static_cast<std::size_t>(it - knots.begin());
        if (i == 0) return vals.front();
        --i;
        const double base = vals[i];
        const double du = u - knots[i];
        if (std::isinf(base)) return base;
        if (du == 0.0) return base;
        if (std::isinf(slopes[i])) return std::numeric_limits<double>::infinity();
        return base + slopes[i] * du;
    }

    /// Value at the end of the domain (the total limit; may be +inf).
    double limit() const {
        if (std::isinf(domain_end)) {
            if (std::isinf(vals.back()) || std::isinf(slopes.back()))
                return std::numeric_limits<double>::infinity();
            if (slopes.back() > 0.0) return std::numeric_limits<double>::infinity();
            return vals.back();
        }
        return value(domain_end);
    }

    /// inf{u >= 0 : value(u) > t}, with inf(empty) = +inf. Only meaningful on
    /// the full half-line; for a finite domain a query past limit() throws.
    /// vals is nondecreasing, so the crossing segment is found by bisection.
    double right_inverse(double t) const {
        // last knot with vals[j] <= t; the crossing lies in segment j or later
        auto it = std::upper_bound(vals.begin(), vals.end(), t);
        std::size_t j = (it == vals.begin()) ? 0
                                             : static_cast<std::size_t>(it - vals.begin()) - 1;
        for (std::size_t i = j; i < knots.size(); ++i) {
            if (std::isinf(vals[i])) return knots[i] == 0.0 ? 0.0 : knots[i];
            const double s = slopes[i];
            const double seg_end = (i + 1 < knots.size()) ? knots[i + 1] : domain_end;
            if (std::isinf(s)) {
                // function jumps to +inf immediately after knots[i]
                if (t >= vals[i]) return knots[i];
                continue;  // t < vals[i] handled by earlier segments
            }
            if (s > 0.0) {
                const double seg_val_end =
                    std::isinf(seg_end) ? std::numeric_limits<double>::infinity()
                                        : vals[i] + s * (seg_end - knots[i]);
                if (t < seg_val_end) {
                    const double u = knots[i] + std::max(0.0, (t - vals[i])) / s;
                    if (u <= seg_end) return std::min(u, seg_end);
                }
            }
        }
        if (std::isinf(domain_end)) return std::numeric_limits<double>::infinity();
        // t == limit() on a truncated domain: the strict crossing never happens
        // inside the domain, so the inverse saturates at the end.
        if (t <= limit()) return domain_end;
        throw std::domain_error("TimeChange: inverse query beyond truncated domain");
    }
};

namespace detail {

inline double slope_of(ExtReal v) {
    return v.is_infinite() ? std::numeric_limits<double>::infinity() : v.get();
}

inline double reciprocal_slope_of(ExtReal v) {
    if (v.is_infinite()) return 0.0;
    if (v.get() < kValueFloor) return std::numeric_limits<double>::infinity();
    return 1.0 / v.get();
}

template <class SlopeFn>
TimeChange accumulate_event(const CadlagPath& p, SlopeFn slope_fn) {
    TimeChange tc;
    tc.domain_end = p.domain_end();
    tc.knots = p.times;
    tc.slopes.resize(p.values.size());
    tc.vals.resize(p.values.size());
    double cum = 0.0;
    for (std::size_t i = 0; i < p.values.size(); ++i) {
        tc.vals[i] = cum;
        tc.slopes[i] = slope_fn(p.values[i]);
        if (i + 1 < p.values.size()) {
            const double h = p.times[i + 1] - p.times[i];
            cum = std::isinf(tc.slopes[i]) ? std::numeric_limits<double>::infinity()
                                           : cum + tc.slopes[i] * h;
        }
    }
    return tc;
}

// Trapezoid accumulation on grid nodes. When the integrand saturates at one
// node (infinite slope), the increment uses the left value only so that a
// drop to an absorbing state counts as a jump, not a divergent average.
template <class SlopeFn>
TimeChange accumulate_grid(const CadlagPath& p, SlopeFn slope_fn) {
    TimeChange tc;
    tc.domain_end = p.domain_end();
    const std::size_t m = p.values.size();
    tc.knots.resize(m);
    tc.vals.resize(m);
    tc.slopes.resize(m);
    double cum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        tc.knots[i] = p.step * static_cast<double>(i);
        tc.vals[i] = cum;
        const double a = slope_fn(p.values[i]);
        if (i + 1 < m) {
            const double b = slope_fn(p.values[i + 1]);
            double s;
            if (std::isinf(a))
                s = std::numeric_limits<double>::infinity();
            else if (std::isinf(b))
                s = a;  // rectangle up to the saturating node, then saturate there
            else
                s = 0.5 * (a + b);
            tc.slopes[i] = s;
            cum = std::isinf(s) ? std::numeric_limits<double>::infinity()
                                : cum + s * p.step;
            // saturation begins exactly at the node where the integrand blew up
            if (!std::isinf(a) && std::isinf(b) && i + 2 <= m) {
                // next vals entry gets cum; slope there will be inf
            }
        } else {
            tc.slopes[i] = a;
        }
    }
    return tc;
}

}  // namespace detail

/// The additive functional of a path: t -> integral of f over [0, t].
inline TimeChange additive_functional(const CadlagPath& f) {
    return f.kind == PathKind::Event ? detail::accumulate_event(f, detail::slope_of)
                                     : detail::accumulate_grid(f, detail::slope_of);
}

/// t -> integral of 1/f over [0, t]; values below the floor count as 0
/// (infinite slope), infinity contributes slope 0.
inline TimeChange reciprocal_functional(const CadlagPath& f) {
    return f.kind == PathKind::Event
               ? detail::accumulate_event(f, detail::reciprocal_slope_of)
               : detail::accumulate_grid(f, detail::reciprocal_slope_of);
}

inline ExtReal theta(const CadlagPath& f, double t) {
    const double v = additive_functional(f).value(t);
    return std::isinf(v) ? ExtReal::infinity() : ExtReal(v);
}

inline ExtReal kappa(const CadlagPath& f, double t) {
    const double u = additive_functional(f).right_inverse(t);
    return std::isinf(u) ? ExtReal::infinity() : ExtReal(u);
}

namespace detail {

// Linear interpolation between grid nodes; right-continuous fallback when a
// neighbor is infinite or past the end.
inline ExtReal grid_interp(const CadlagPath& f, double u) {
    const double x = u / f.step;
    std::size_t i = static_cast<std::size_t>(std::floor(x));
    if (i >= f.values.size() - 1) return f.values.back();
    const ExtReal a = f.values[i], b = f.values[i + 1];
    if (a.is_infinite() || b.is_infinite()) return a;
    const double frac = x - static_cast<double>(i);
    return ExtReal(a.get() + frac * (b.get() - a.get()));
}

inline bool absorbing(ExtReal v) { return v.is_zero() || v.is_infinite(); }

// Event-kind time change: each holding interval of length h at value v is
// replaced by one of length h * scale(v); visited values are untouched.
template <class ScaleFn>
CadlagPath event_time_change(const CadlagPath& f, ScaleFn scale) {
    require_valid(f);
    const std::size_t m = f.values.size();
    std::vector<double> out_times;
    out_times.reserve(m);
    out_times.push_back(0.0);
    double cum = 0.0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const double h = f.times[i + 1] - f.times[i];
        cum += scale(f.values[i]) * h;  // finite positive value on non-final segments
        out_times.push_back(cum);
    }
    CadlagPath out = CadlagPath::event(std::move(out_times), f.values, f.terminal);
    if (f.truncated()) {
        const ExtReal last = f.values.back();
        if (absorbing(last)) {
            // already absorbed; the truncation marker is moot
        } else {
            const double tail = *f.horizon - f.times.back();
            const double s = scale(last);
            double h_out;
            if (std::isinf(s))
                h_out = std::numeric_limits<double>::infinity();
            else
                h_out = cum + s * tail;
            if (std::isinf(h_out)) {
                // time change stretches the truncated tail forever: the output
                // is constant at `last` on [cum, inf), but last is not a legal
                // terminal; keep a conservative finite marker.
                h_out = std::numeric_limits<double>::max();
            }
            out.horizon = h_out;
        }
    }
    return out;
}

// Grid-kind composition: out(t) = f(W(t)) where W is the right-inverse of A.
inline CadlagPath grid_compose(const CadlagPath& f, const TimeChange& A,
                               std::size_t max_nodes) {
    require_valid(f);
    const double step = f.step;
    const double t_out_end = A.limit();  // may be inf
    std::vector<ExtReal> vals;
    std::optional<double> out_horizon;
    if (f.truncated() && !absorbing(f.values.back()))
        out_horizon = std::isinf(t_out_end) ? std::numeric_limits<double>::max()
                                            : t_out_end;

    for (std::size_t j = 0;; ++j) {
        if (j > max_nodes)
            throw std::length_error("grid time change output exceeds node cap");
        const double s = step * static_cast<double>(j);
        if (out_horizon && s > *out_horizon + 0.5 * step) break;
        double u;
        if (!out_horizon && s > t_out_end)
            u = std::numeric_limits<double>::infinity();
        else
            u = A.right_inverse(std::min(s, t_out_end));
        ExtReal v;
        if (std::isinf(u)) {
            v = f.terminal;  // W(t) = inf means out(t) = f(inf)
        } else {
            v = grid_interp(f, std::min(u, f.last_time()));
        }
        vals.push_back(v);
        if (!out_horizon && absorbing(v)) break;
    }
    if (vals.empty()) vals.push_back(f.values.front());
    CadlagPath out = CadlagPath::grid(step, std::move(vals), f.terminal, out_horizon);
    if (out_horizon) out.horizon = std::max(*out_horizon, out.last_time());
    return out;
}

}  // namespace detail

/// The Lamperti transformation L(f) = f o kappa. Exact on Event paths
/// (holding length h at value v becomes v*h); resampled on Grid paths.
inline CadlagPath transform(const CadlagPath& f,
                            std::size_t max_nodes = (std::size_t{1} << 26)) {
    if (f.kind == PathKind::Event)
        return detail::event_time_change(f, [](ExtReal v) { return v.get(); });
    require_valid(f);
    return detail::grid_compose(f, additive_functional(f), max_nodes);
}

/// The inverse transformation: holding length h at value v becomes h/v;
/// reaching infinity in finite inverse time is an explosion.
inline CadlagPath inverse_transform(const CadlagPath& g,
                                    std::size_t max_nodes = (std::size_t{1} << 26)) {
    if (g.kind == PathKind::Event)
        return detail::event_time_change(
            g, [](ExtReal v) { return detail::reciprocal_slope_of(v); });
    require_valid(g);
    return detail::grid_compose(g, reciprocal_functional(g), max_nodes);
}

/// Max discrepancy, over breakpoints and values, of inverse_transform(transform(f))
/// against f. Zero up to floating-point rounding for Event paths in the
/// absorbed path space.
inline double roundtrip_check(const CadlagPath& f) {
    if (f.kind != PathKind::Event)
        throw std::invalid_argument("roundtrip_check: Event paths only");
    require_valid(f);
    const CadlagPath back = inverse_transform(transform(f));
    if (back.values.size() != f.values.size())
        return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        worst = std::max(worst, std::abs(back.times[i] - f.times[i]));
        const ExtReal a = f.values[i], b = back.values[i];
        if (a.is_infinite() != b.is_infinite())
            return std::numeric_limits<double>::infinity();
        if (!a.is_infinite()) worst = std::max(worst, std::abs(a.get() - b.get()));
    }
    return worst;
}

}  // namespace csbp

#endif  // CSBP_LAMPERTI_HPP
