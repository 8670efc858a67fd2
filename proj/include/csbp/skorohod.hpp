#ifndef CSBP_SKOROHOD_HPP
#define CSBP_SKOROHOD_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "csbp/lamperti.hpp"
#include "csbp/path.hpp"

namespace csbp {

/// h(x) = x / (1 + x), the fixed homeomorphism of [0, inf] onto [0, 1].
inline double squash(ExtReal x) {
    if (x.is_infinite()) return 1.0;
    return x.get() / (1.0 + x.get());
}

/// The state metric rho(x, y) = |h(x) - h(y)|; rho(0, inf) = 1.
inline double rho(ExtReal x, ExtReal y) { return std::abs(squash(x) - squash(y)); }

/// Converts a Grid path to an Event path by change-point thinning: a node
/// becomes a breakpoint when it moves more than `threshold` in rho from the
/// last kept value (absorbing values are always kept). Event input is
/// returned unchanged.
inline CadlagPath to_event(const CadlagPath& p, double threshold = 1e-6) {
    require_valid(p);
    if (p.kind == PathKind::Event) return p;
    std::vector<double> ts{0.0};
    std::vector<ExtReal> vs{p.values.front()};
    for (std::size_t i = 1; i < p.values.size(); ++i) {
        const ExtReal v = p.values[i];
        const bool absorbing = v.is_zero() || v.is_infinite();
        if (rho(v, vs.back()) > threshold || (absorbing && v != vs.back())) {
            ts.push_back(p.step * static_cast<double>(i));
            vs.push_back(v);
        }
    }
    CadlagPath out = CadlagPath::event(std::move(ts), std::move(vs), p.terminal, p.horizon);
    if (out.horizon) out.horizon = std::max(*out.horizon, out.last_time());
    return out;
}

/// Certified lower/upper bounds on a Skorohod-type distance. The warning is
/// raised when the time-warp search was cut short and the bounds stayed
/// loose.
struct Bounds {
    double lower = 0.0;
    double upper = 0.0;
    bool gap_warning = false;
};

namespace skdetail {

// A step function on [0, t_cap]: segment i holds on [ts[i], ts[i+1]).
struct Steps {
    std::vector<double> ts;  // segment starts; ts[0] == 0
    std::vector<double> hv;  // squash(value) per segment
    double t_cap = 0.0;

    std::size_t idx(double s) const {
        auto it = std::upper_bound(ts.begin(), ts.end(), s);
        const std::size_t i = static_cast<std::size_t>(it - ts.begin());
        return i == 0 ? 0 : i - 1;
    }
    double h_at(double s) const { return hv[idx(s)]; }
};

inline Steps make_steps(const CadlagPath& p, double t_cap) {
    const CadlagPath e = to_event(p);
    if (e.truncated() && *e.horizon < t_cap - 1e-12)
        throw std::domain_error("metric: path truncated before the comparison window");
    Steps st;
    st.t_cap = t_cap;
    for (std::size_t i = 0; i < e.values.size(); ++i) {
        if (e.times[i] > t_cap) break;
        st.ts.push_back(e.times[i]);
        st.hv.push_back(squash(e.values[i]));
    }
    return st;
}

// Piecewise-linear warp through strictly increasing anchors with fixed
// endpoints (0,0) and (t,t).
struct Warp {
    std::vector<double> s;  // domain anchors
    std::vector<double> u;  // image anchors

    double fwd(double x) const { return interp(s, u, x); }
    double inv(double y) const { return interp(u, s, y); }
    double displacement() const {
        double d = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) d = std::max(d, std::abs(u[i] - s[i]));
        return d;
    }

private:
    static double interp(const std::vector<double>& xs, const std::vector<double>& ys,
                         double x) {
        if (x <= xs.front()) return ys.front();
        if (x >= xs.back()) return ys.back();
        auto it = std::upper_bound(xs.begin(), xs.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - xs.begin()) - 1;
        const double w = (x - xs[i]) / (xs[i + 1] - xs[i]);
        return ys[i] + w * (ys[i + 1] - ys[i]);
    }
};

// Exact cost of a concrete warp: max of its displacement and the sup of
// rho(f(s), g(warp(s))) over [0, t] (both step functions, so the sup is
// attained on the merged-breakpoint partition).
inline double warp_cost(const Steps& F, const Steps& G, const Warp& w, double t) {
    std::vector<double> pts;
    pts.reserve(F.ts.size() + G.ts.size() + w.s.size() + 2);
    for (double a : F.ts) pts.push_back(a);
    for (double b : G.ts) pts.push_back(w.inv(b));
    for (double a : w.s) pts.push_back(a);
    pts.push_back(0.0);
    pts.push_back(t);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    double sup = 0.0;
    auto look = [&](double s) {
        s = std::clamp(s, 0.0, t);
        const double u = std::clamp(w.fwd(s), 0.0, t);
        sup = std::max(sup, std::abs(F.h_at(s) - G.h_at(u)));
    };
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (pts[i] < 0.0 || pts[i] > t) continue;
        look(pts[i]);
        if (i + 1 < pts.size()) look(0.5 * (pts[i] + pts[i + 1]));
    }
    look(t);
    return std::max(w.displacement(), sup);
}

// Necessary condition for a warp of cost <= c to exist: every point of one
// path must see a c-close value of the other within a c-window in time.
// Returning true certifies dist > c. The scan expands outward from the
// window center so matching values on near-identical stretches exit fast.
inline bool window_violated_one(const Steps& F, const Steps& G, double c, double t) {
    const double slack = c + 1e-12;
    const std::size_t mf = F.ts.size();
    for (std::size_t i = 0; i < mf; ++i) {
        const double s0 = F.ts[i];
        if (s0 > t) break;
        const double s1 = std::min(i + 1 < mf ? F.ts[i + 1] : t, t);
        for (int k = -1; k < 6; ++k) {
            const double s = (k < 0) ? s0 : s0 + (k + 0.5) / 6.0 * (s1 - s0);
            const double fv = F.hv[i];
            const double lo = std::max(0.0, s - c), hi = std::min(t, s + c);
            const std::size_t j0 = G.idx(std::clamp(s, lo, hi));
            std::size_t jl = j0, jr = j0;
            bool ok = std::abs(fv - G.hv[j0]) <= slack;
            while (!ok) {
                bool moved = false;
                if (jr + 1 < G.ts.size() && G.ts[jr + 1] <= hi) {
                    ++jr;
                    moved = true;
                    if (std::abs(fv - G.hv[jr]) <= slack) { ok = true; break; }
                }
                if (jl > 0 && (jl >= G.ts.size() || (jl < G.ts.size() && G.ts[jl] > lo))) {
                    --jl;
                    moved = true;
                    if (std::abs(fv - G.hv[jl]) <= slack) { ok = true; break; }
                }
                if (!moved) break;
            }
            if (!ok) return true;
        }
    }
    return false;
}

inline bool window_violated(const Steps& F, const Steps& G, double c, double t) {
    return window_violated_one(F, G, c, t) || window_violated_one(G, F, c, t);
}

// Min-max dynamic program over monotone jump matchings; returns the matched
// (f-time, g-time) anchor pairs of the best alignment.
inline std::vector<std::pair<double, double>> best_matching(const Steps& F,
                                                            const Steps& G) {
    const std::size_t mf = F.ts.size(), mg = G.ts.size();
    std::vector<double> dp(mf * mg, std::numeric_limits<double>::infinity());
    std::vector<unsigned char> par(mf * mg, 0);  // 1: from left, 2: from up, 3: diag
    auto cell = [&](std::size_t i, std::size_t j) { return std::abs(F.hv[i] - G.hv[j]); };
    dp[0] = cell(0, 0);
    for (std::size_t i = 0; i < mf; ++i) {
        for (std::size_t j = 0; j < mg; ++j) {
            if (i == 0 && j == 0) continue;
            const double c = cell(i, j);
            double best = std::numeric_limits<double>::infinity();
            unsigned char from = 0;
            if (j > 0) {
                const double v = std::max(dp[i * mg + j - 1], c);
                if (v < best) { best = v; from = 1; }
            }
            if (i > 0) {
                const double v = std::max(dp[(i - 1) * mg + j], c);
                if (v < best) { best = v; from = 2; }
            }
            if (i > 0 && j > 0) {
                const double v = std::max(
                    {dp[(i - 1) * mg + j - 1], std::abs(F.ts[i] - G.ts[j]), c});
                if (v < best) { best = v; from = 3; }
            }
            dp[i * mg + j] = best;
            par[i * mg + j] = from;
        }
    }
    std::vector<std::pair<double, double>> matches;
    std::size_t i = mf - 1, j = mg - 1;
    while (i > 0 || j > 0) {
        const unsigned char from = par[i * mg + j];
        if (from == 3) {
            matches.emplace_back(F.ts[i], G.ts[j]);
            --i;
            --j;
        } else if (from == 2) {
            --i;
        } else {
            --j;
        }
    }
    std::reverse(matches.begin(), matches.end());
    return matches;
}

inline Warp anchored_warp(const std::vector<std::pair<double, double>>& matches, double t) {
    Warp w;
    w.s.push_back(0.0);
    w.u.push_back(0.0);
    for (const auto& [a, b] : matches) {
        if (a <= w.s.back() || b <= w.u.back()) continue;
        if (a >= t || b >= t) break;
        w.s.push_back(a);
        w.u.push_back(b);
    }
    w.s.push_back(t);
    w.u.push_back(t);
    return w;
}

// Coordinate-descent golden-section refinement of interior anchor images.
inline double refine_warp(const Steps& F, const Steps& G, Warp& w, double t,
                          double current) {
    constexpr double kGolden = 0.6180339887498949;
    for (std::size_t k = 1; k + 1 < w.u.size(); ++k) {
        double lo = w.u[k - 1] + 1e-12 * t, hi = w.u[k + 1] - 1e-12 * t;
        if (!(hi > lo)) continue;
        double x1 = hi - kGolden * (hi - lo), x2 = lo + kGolden * (hi - lo);
        auto eval_at = [&](double u) {
            const double saved = w.u[k];
            w.u[k] = u;
            const double c = warp_cost(F, G, w, t);
            w.u[k] = saved;
            return c;
        };
        double f1 = eval_at(x1), f2 = eval_at(x2);
        for (int it = 0; it < 24; ++it) {
            if (f1 < f2) {
                hi = x2; x2 = x1; f2 = f1;
                x1 = hi - kGolden * (hi - lo);
                f1 = eval_at(x1);
            } else {
                lo = x1; x1 = x2; f1 = f2;
                x2 = lo + kGolden * (hi - lo);
                f2 = eval_at(x2);
            }
        }
        const double cand = std::min(f1, f2);
        if (cand < current) {
            w.u[k] = (f1 < f2) ? x1 : x2;
            current = cand;
        }
    }
    return current;
}

}  // namespace skdetail

/// Certified bounds on the Skorohod distance restricted to [0, t]:
/// d_t(f,g) = inf over time warps of (sup rho) v (warp displacement).
/// The upper bound is the exact cost of the best concrete warp found
/// (identity, the min-max jump-matching alignment, and a golden-section
/// refinement of its anchors); the lower bound comes from bisecting the
/// window-feasibility condition.
inline Bounds dist_t(const CadlagPath& f, const CadlagPath& g, double t,
                     std::size_t search_depth = 1500) {
    if (!(t > 0.0)) throw std::domain_error("dist_t: t must be positive");
    const skdetail::Steps F = skdetail::make_steps(f, t);
    const skdetail::Steps G = skdetail::make_steps(g, t);

    skdetail::Warp id;
    id.s = {0.0, t};
    id.u = {0.0, t};
    double upper = skdetail::warp_cost(F, G, id, t);
    bool dp_skipped = false;
    if (upper > 0.0) {
        if (std::max(F.ts.size(), G.ts.size()) <= search_depth) {
            skdetail::Warp w =
                skdetail::anchored_warp(skdetail::best_matching(F, G), t);
            double c = skdetail::warp_cost(F, G, w, t);
            if (w.s.size() <= 14) c = skdetail::refine_warp(F, G, w, t, c);
            upper = std::min(upper, c);
        } else {
            dp_skipped = true;
        }
    }

    double lower = 0.0;
    if (skdetail::window_violated(F, G, 0.0, t)) {
        double lo = 0.0, hi = upper;
        if (skdetail::window_violated(F, G, hi, t)) {
            lower = hi;  // numerical edge: bounds meet
        } else {
            for (int it = 0; it < 40 && hi - lo > 1e-12; ++it) {
                const double mid = 0.5 * (lo + hi);
                (skdetail::window_violated(F, G, mid, t) ? lo : hi) = mid;
            }
            lower = lo;
        }
    }
    lower = std::min(lower, upper);
    return {lower, upper, dp_skipped && (upper - lower) > 0.05};
}

/// d(f,g) = integral of e^{-t} d_t(f,g) dt, by adaptive quadrature of the
/// bound midpoints on [t_split, T] where t_split is the first time the paths
/// differ (d_t vanishes before it) and e^{-T} <= quad_tol bounds the tail.
inline double dist_usual(const CadlagPath& f, const CadlagPath& g,
                         double quad_tol = 1e-3, std::size_t search_depth = 1500) {
    if (!(quad_tol > 0.0) || quad_tol >= 1.0)
        throw std::domain_error("dist_usual: quad_tol must be in (0,1)");
    const double T = -std::log(quad_tol);
    const CadlagPath fe = to_event(f), ge = to_event(g);

    // first time the paths differ
    double t_split = std::numeric_limits<double>::infinity();
    {
        std::vector<double> merged;
        merged.reserve(fe.times.size() + ge.times.size());
        merged.insert(merged.end(), fe.times.begin(), fe.times.end());
        merged.insert(merged.end(), ge.times.begin(), ge.times.end());
        std::sort(merged.begin(), merged.end());
        merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
        for (double s : merged) {
            if (eval(fe, s) != eval(ge, s)) {
                t_split = s;
                break;
            }
        }
    }
    if (t_split >= T) return 0.0;

    auto integrand = [&](double s) {
        const Bounds b = dist_t(fe, ge, s, search_depth);
        return std::exp(-s) * 0.5 * (b.lower + b.upper);
    };
    // adaptive Simpson on [a, b]
    struct Quad {
        const decltype(integrand)& fn;
        double simpson(double a, double b, double fa, double fm, double fb) const {
            return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        }
        double run(double a, double b, double fa, double fm, double fb, double whole,
                   double tol, int depth) const {
            const double m = 0.5 * (a + b);
            const double lm = fn(0.5 * (a + m)), rm = fn(0.5 * (m + b));
            const double left = simpson(a, m, fa, lm, fm);
            const double right = simpson(m, b, fm, rm, fb);
            if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
                return left + right + (left + right - whole) / 15.0;
            return run(a, m, fa, lm, fm, left, 0.5 * tol, depth - 1) +
                   run(m, b, fm, rm, fb, right, 0.5 * tol, depth - 1);
        }
    } quad{integrand};
    const double a = std::max(t_split, 1e-9), b = T;
    const double fa = integrand(a), fb = integrand(b), fm = integrand(0.5 * (a + b));
    const double whole = quad.simpson(a, b, fa, fm, fb);
    return quad.run(a, b, fa, fm, fb, whole, 0.5 * quad_tol, 16);
}

/// Bounds on d_inf(f,g) = 1 ^ inf over warps of [0, inf): terminal-
/// mismatched paths are at the cap exactly (the tail discrepancy approaches
/// rho(0, inf) = 1 under every warp); otherwise both paths are eventually
/// constant and the distance reduces to d_T at the last breakpoint.
inline Bounds dist_inf(const CadlagPath& f, const CadlagPath& g,
                       std::size_t search_depth = 1500) {
    if (f.truncated() || g.truncated())
        throw std::invalid_argument("dist_inf: truncated paths are not elements of D");
    require_valid(f);
    require_valid(g);
    if (f.terminal != g.terminal) return {1.0, 1.0, false};
    const CadlagPath fe = to_event(f), ge = to_event(g);
    const double T = std::max({fe.last_time(), ge.last_time(), 1.0});
    Bounds b = dist_t(fe, ge, T, search_depth);
    b.upper = std::min(b.upper, 1.0);
    b.lower = std::min(b.lower, b.upper);
    return b;
}

/// One row of the blow-up discontinuity study: the truncations f_n of
/// f(s) = (1+s)^2 approach f in d but not in d_inf, and their inverse
/// time-changed paths stay uniformly separated on [0, 1].
struct Example1Row {
    int n = 0;
    double d_usual = 0.0;
    double d_inf_lower = 0.0;
    double d_inf_upper = 0.0;
    double transform_gap = 0.0;  // sup rho(Linv(f_n), Linv(f)) on [0, 1]
};

struct Example1Report {
    double kappa_inf = 0.0;  // total integral of 1/f = explosion time of Linv(f)
    std::vector<Example1Row> rows;
};

namespace skdetail {

// integral of 1/(1+s)^2 over [0, inf) by graded-block trapezoid: block k
// covers [2^k - 1, 2^{k+1} - 1] with step step0 * 2^k; the tail beyond the
// last block is bounded by 1/2^{K+1} and dropped below the tolerance.
inline double graded_reciprocal_integral(double step0 = 5e-4, int blocks = 26) {
    double total = 0.0;
    for (int k = 0; k < blocks; ++k) {
        const double lo = std::pow(2.0, k) - 1.0;
        const double hi = std::pow(2.0, k + 1) - 1.0;
        const double h = step0 * std::pow(2.0, k);
        const std::size_t n = static_cast<std::size_t>(std::llround((hi - lo) / h));
        double prev = 1.0 / ((1.0 + lo) * (1.0 + lo));
        for (std::size_t i = 1; i <= n; ++i) {
            const double s = lo + h * static_cast<double>(i);
            const double cur = 1.0 / ((1.0 + s) * (1.0 + s));
            total += 0.5 * (prev + cur) * h;
            prev = cur;
        }
    }
    total += 1.0 / std::pow(2.0, blocks);  // exact tail: 1/(1 + (2^K - 1))
    return total;
}

inline CadlagPath example1_full_path(double step, double span) {
    const std::size_t n = static_cast<std::size_t>(std::llround(span / step));
    std::vector<ExtReal> vs;
    vs.reserve(n + 2);
    for (std::size_t i = 0; i <= n; ++i) {
        const double s = step * static_cast<double>(i);
        vs.push_back(ExtReal((1.0 + s) * (1.0 + s)));
    }
    vs.push_back(ExtReal::infinity());
    return CadlagPath::grid(step, std::move(vs), ExtReal::infinity());
}

inline CadlagPath example1_truncation(double step, double span, double cut) {
    const std::size_t n = static_cast<std::size_t>(std::llround(span / step));
    const std::size_t n_cut = static_cast<std::size_t>(std::floor(cut / step + 1e-9));
    std::vector<ExtReal> vs;
    vs.reserve(n + 1);
    for (std::size_t i = 0; i <= std::min(n_cut, n); ++i) {
        const double s = step * static_cast<double>(i);
        vs.push_back(ExtReal((1.0 + s) * (1.0 + s)));
    }
    vs.push_back(ExtReal(0.0));
    return CadlagPath::grid(step, std::move(vs), ExtReal(0.0));
}

}  // namespace skdetail

/// Runs the discontinuity study for each cut n: d(f_n, f) decays like
/// e^{-n} while d_inf(f_n, f) stays at the cap, and the inverse
/// time-changed paths differ by a uniform margin on [0, 1] because
/// Linv(f) blows up at kappa_inf = 1 while every Linv(f_n) dies.
inline Example1Report example1_demo(const std::vector<int>& n_list,
                                    double metric_step = 0.01,
                                    double transform_step = 1e-4,
                                    double quad_tol = 5e-4) {
    Example1Report rep;
    rep.kappa_inf = skdetail::graded_reciprocal_integral();

    const double metric_span = 12.0;
    const double transform_span = 99.0;
    const CadlagPath f_metric = skdetail::example1_full_path(metric_step, metric_span);
    const CadlagPath f_fine = skdetail::example1_full_path(transform_step, transform_span);
    const CadlagPath zf = inverse_transform(f_fine);

    for (int n : n_list) {
        if (n <= 0 || static_cast<double>(n) >= metric_span)
            throw std::invalid_argument("example1_demo: cuts must lie inside the window");
        Example1Row row;
        row.n = n;
        const CadlagPath fn_metric =
            skdetail::example1_truncation(metric_step, metric_span, n);
        row.d_usual = dist_usual(fn_metric, f_metric, quad_tol);
        const Bounds di = dist_inf(fn_metric, f_metric);
        row.d_inf_lower = di.lower;
        row.d_inf_upper = di.upper;

        const CadlagPath fn_fine =
            skdetail::example1_truncation(transform_step, transform_span, n);
        const CadlagPath zfn = inverse_transform(fn_fine);
        double gap = 0.0;
        for (double t = 0.0; t <= 1.0 + 1e-12; t += transform_step)
            gap = std::max(gap, rho(eval(zf, std::min(t, 1.0)), eval(zfn, std::min(t, 1.0))));
        row.transform_gap = gap;
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace csbp

#endif  // CSBP_SKOROHOD_HPP
