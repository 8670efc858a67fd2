#ifndef CSBP_MECHANISM_HPP
#define CSBP_MECHANISM_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace csbp {

/// Characteristics of a spectrally positive Levy process with finite jump
/// activity: X_t = x + a t + sigma B_t + jumps. Atoms with finite positive
/// size r carry rate Lambda({r}); an atom at +inf is killing with mass q.
///
/// Atoms with negative size are admitted as an extension for lattice
/// skeleton exponents (a -1 down-jump); they enter psi uncompensated and
/// are outside the spectrally positive class proper.
struct LevyTriplet {
    struct Atom {
        double size;  // > 0, +inf (killing), or negative lattice step
        double rate;  // > 0
    };

    double drift = 0.0;  // a
    double sigma = 0.0;
    std::vector<Atom> atoms;
    double small_jump_cutoff = 0.0;  // set when the triplet came from truncation

    double killing_mass() const {
        double q = 0.0;
        for (const Atom& at : atoms)
            if (std::isinf(at.size)) q += at.rate;
        return q;
    }

    double total_rate() const {
        double m = 0.0;
        for (const Atom& at : atoms) m += at.rate;
        return m;
    }

    void check() const {
        if (sigma < 0.0) throw std::invalid_argument("triplet: sigma must be >= 0");
        bool seen_inf = false;
        for (const Atom& at : atoms) {
            if (!(at.rate > 0.0))
                throw std::invalid_argument("triplet: atom rates must be positive");
            if (at.size == 0.0 || std::isnan(at.size))
                throw std::invalid_argument("triplet: atom size must be nonzero");
            if (std::isinf(at.size)) {
                if (at.size < 0.0)
                    throw std::invalid_argument("triplet: no atom at -inf");
                if (seen_inf)
                    throw std::invalid_argument("triplet: at most one atom at inf");
                seen_inf = true;
            }
        }
    }
};

// Closed-form test mechanisms with analytic flows/roots where known.
struct QuadraticMech {
    double c = 1.0;  // psi(u) = c u^2
};
struct LogisticMech {};  // psi(u) = u^2 - u
struct LinearMech {
    double c = 1.0;  // psi(u) = c u
};
struct ConstantMech {
    double q = 0.0;  // psi(u) = -q (pure killing)
};
struct BirthDeathMech {
    double b = 0.0;  // rate of +1 jumps
    double d = 0.0;  // rate of -1 jumps; psi(u) = b(e^{-u}-1) + d(e^{u}-1)
};

using Mechanism = std::variant<LevyTriplet, QuadraticMech, LogisticMech, LinearMech,
                               ConstantMech, BirthDeathMech>;

/// psi(lambda) = -q - a*lambda + sigma^2 lambda^2 / 2
///             + sum_atoms rate * (e^{-lambda r} - 1 + lambda r 1_{0<r<1}),
/// matching E_x e^{-lambda X_t} = e^{-lambda x + t psi(lambda)}.
inline double psi(const Mechanism& m, double lambda) {
    if (lambda < 0.0 || std::isnan(lambda))
        throw std::domain_error("psi: lambda must be nonnegative");
    struct V {
        double l;
        double operator()(const LevyTriplet& t) const {
            double s = -t.drift * l + 0.5 * t.sigma * t.sigma * l * l;
            for (const LevyTriplet::Atom& at : t.atoms) {
                if (std::isinf(at.size)) {
                    s -= at.rate;  // killing: e^{-l*inf} - 1 = -1
                } else {
                    double term = std::expm1(-l * at.size);
                    if (at.size > 0.0 && at.size < 1.0) term += l * at.size;
                    s += at.rate * term;
                }
            }
            return s;
        }
        double operator()(const QuadraticMech& q) const { return q.c * l * l; }
        double operator()(const LogisticMech&) const { return l * l - l; }
        double operator()(const LinearMech& c) const { return c.c * l; }
        double operator()(const ConstantMech& c) const { return -c.q; }
        double operator()(const BirthDeathMech& bd) const {
            return bd.b * std::expm1(-l) + bd.d * std::expm1(l);
        }
    };
    return std::visit(V{lambda}, m);
}

struct FlowResult {
    double value = 0.0;              // u_t(lambda); +inf if the flow blew up
    std::optional<double> blowup_time;
    bool blew_up() const { return blowup_time.has_value(); }
};

namespace detail {

// One Cash-Karp RK45 step for u' = F(u); returns (u5, |u5 - u4|).
template <class F>
std::pair<double, double> rk45_step(F&& f, double u, double h) {
    const double k1 = f(u);
    const double k2 = f(u + h * (k1 / 5.0));
    const double k3 = f(u + h * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2));
    const double k4 = f(u + h * (3.0 / 10.0 * k1 - 9.0 / 10.0 * k2 + 6.0 / 5.0 * k3));
    const double k5 = f(u + h * (-11.0 / 54.0 * k1 + 5.0 / 2.0 * k2 -
                                 70.0 / 27.0 * k3 + 35.0 / 27.0 * k4));
    const double k6 =
        f(u + h * (1631.0 / 55296.0 * k1 + 175.0 / 512.0 * k2 + 575.0 / 13824.0 * k3 +
                   44275.0 / 110592.0 * k4 + 253.0 / 4096.0 * k5));
    const double u5 = u + h * (37.0 / 378.0 * k1 + 250.0 / 621.0 * k3 +
                               125.0 / 594.0 * k4 + 512.0 / 1771.0 * k6);
    const double u4 = u + h * (2825.0 / 27648.0 * k1 + 18575.0 / 48384.0 * k3 +
                               13525.0 / 55296.0 * k4 + 277.0 / 14336.0 * k5 +
                               1.0 / 4.0 * k6);
    return {u5, std::abs(u5 - u4)};
}

inline constexpr double kBlowupLevel = 1e12;

}  // namespace detail

/// Solves du/dt = -psi(u), u_0 = lambda, by adaptive embedded Runge-Kutta
/// with local error <= tol (mixed absolute/relative); the result is clamped
/// to [0, inf). A solution escaping to +inf is reported with its escape time.
inline FlowResult flow_full(const Mechanism& m, double lambda, double t,
                            double tol = 1e-10) {
    if (lambda < 0.0) throw std::domain_error("flow: lambda must be nonnegative");
    if (t < 0.0) throw std::domain_error("flow: t must be nonnegative");
    if (!(tol > 0.0)) throw std::domain_error("flow: tol must be positive");
    auto F = [&m](double u) { return -psi(m, std::max(u, 0.0)); };
    double u = lambda, s = 0.0;
    if (t == 0.0) return {u, std::nullopt};
    double h = std::min(t, 0.01);
    const double h_min = t * 1e-14 + 1e-300;
    while (s < t) {
        h = std::min(h, t - s);
        auto [u_new, err] = detail::rk45_step(F, u, h);
        const double scale = tol * (1.0 + std::max(std::abs(u), std::abs(u_new)));
        if (!std::isfinite(u_new) || u_new > detail::kBlowupLevel)
            return {std::numeric_limits<double>::infinity(), s};
        if (err <= scale) {
            s += h;
            u = std::max(u_new, 0.0);
            const double grow = (err == 0.0) ? 5.0 : 0.9 * std::pow(scale / err, 0.2);
            h *= std::clamp(grow, 0.2, 5.0);
        } else {
            h *= std::max(0.2, 0.9 * std::pow(scale / err, 0.25));
            if (h < h_min)
                return {std::numeric_limits<double>::infinity(), s};
        }
    }
    return {u, std::nullopt};
}

/// u_t(lambda); +inf on blow-up.
inline double flow(const Mechanism& m, double lambda, double t, double tol = 1e-10) {
    return flow_full(m, lambda, t, tol).value;
}

/// |u_{t+s}(lambda) - u_t(u_s(lambda))| — zero for the exact semigroup.
inline double semigroup_defect(const Mechanism& m, double lambda, double s, double t,
                               double tol = 1e-10) {
    const double lhs = flow(m, lambda, t + s, tol);
    const double inner = flow(m, lambda, s, tol);
    if (std::isinf(inner) || std::isinf(lhs))
        return std::isinf(inner) && std::isinf(lhs) ? 0.0
                                                    : std::numeric_limits<double>::infinity();
    return std::abs(lhs - flow(m, inner, t, tol));
}

struct RootResult {
    double value = 0.0;
    bool at_infinity = false;  // psi stays nonpositive on the whole search range
};

/// The largest root Phi of psi. When psi never becomes positive on the
/// search range [0, 1e8] the supercritical root is effectively infinite
/// (killed subordinator case), except for psi identically ~0 where 0 is
/// returned.
inline RootResult largest_root(const Mechanism& m, double tol = 1e-12) {
    double lo = 0.0, hi = 1e-8;
    bool any_negative = psi(m, 0.0) < -1e-14;
    while (hi <= 1e8 && psi(m, hi) <= 0.0) {
        if (psi(m, hi) < -1e-14) any_negative = true;
        lo = hi;
        hi *= 2.0;
    }
    if (hi > 1e8) {
        if (any_negative) return {std::numeric_limits<double>::infinity(), true};
        return {0.0, false};  // psi vanishes identically on the range
    }
    // psi(lo) <= 0 < psi(hi); by convexity psi <= 0 on [0, Phi]
    for (int i = 0; i < 200 && hi - lo > tol; ++i) {
        const double mid = 0.5 * (lo + hi);
        (psi(m, mid) <= 0.0 ? lo : hi) = mid;
    }
    return {0.5 * (lo + hi), false};
}

/// The inverse of psi on [Phi, inf): the unique x >= Phi with psi(x) = lambda.
inline double phi(const Mechanism& m, double lambda, double tol = 1e-12) {
    if (lambda < 0.0) throw std::domain_error("phi: lambda must be nonnegative");
    const RootResult root = largest_root(m, tol);
    if (root.at_infinity)
        throw std::domain_error("phi: psi has no finite largest root");
    double lo = root.value;
    if (psi(m, lo) >= lambda) return lo;  // lambda == 0 (up to root tolerance)
    double hi = std::max(1.0, 2.0 * lo);
    while (psi(m, hi) < lambda) {
        hi *= 2.0;
        if (hi > 1e12)
            throw std::domain_error("phi: lambda out of range of psi on [Phi, inf)");
    }
    for (int i = 0; i < 200 && hi - lo > tol * std::max(1.0, lo); ++i) {
        const double mid = 0.5 * (lo + hi);
        (psi(m, mid) < lambda ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// u_t(lambda) tabulated over a (t, lambda) grid; rows indexed by t.
struct FlowTable {
    std::vector<double> lambdas;
    std::vector<double> times;
    std::vector<std::vector<double>> u;  // u[i][j] = u_{times[i]}(lambdas[j])
    double tol = 0.0;
};

inline FlowTable flow_table(const Mechanism& m, std::vector<double> lambdas,
                            std::vector<double> times, double tol = 1e-10) {
    FlowTable tab;
    tab.lambdas = std::move(lambdas);
    tab.times = std::move(times);
    tab.tol = tol;
    tab.u.resize(tab.times.size());
    for (std::size_t i = 0; i < tab.times.size(); ++i) {
        tab.u[i].resize(tab.lambdas.size());
        for (std::size_t j = 0; j < tab.lambdas.size(); ++j)
            tab.u[i][j] = flow(m, tab.lambdas[j], tab.times[i], tol);
    }
    return tab;
}

/// Deletes atoms with size below eps, recording the cutoff. Atoms below 1
/// are compensated in the exponent (their first-order mass cancels), so they
/// are dropped outright and only the curvature rate * (e^{-lr} - 1 + lr) is
/// lost; an uncompensated atom (size >= 1) has its mean folded into the
/// drift instead.
inline LevyTriplet truncate_small_jumps(LevyTriplet t, double eps) {
    if (!(eps >= 0.0)) throw std::invalid_argument("truncate_small_jumps: eps >= 0");
    double added_drift = 0.0;
    std::vector<LevyTriplet::Atom> kept;
    kept.reserve(t.atoms.size());
    for (const LevyTriplet::Atom& at : t.atoms) {
        if (at.size > 0.0 && at.size < eps) {
            if (at.size >= 1.0) added_drift += at.size * at.rate;
        } else {
            kept.push_back(at);
        }
    }
    t.atoms = std::move(kept);
    t.drift += added_drift;
    t.small_jump_cutoff = std::max(t.small_jump_cutoff, eps);
    return t;
}

/// Discretizes a continuous jump density on [lo, hi] into n_atoms atoms at
/// quantile midpoints (equal-mass bins, atom placed at the bin's mass
/// centroid approximated by its median).
inline std::vector<LevyTriplet::Atom> quantile_atomize(
    const std::function<double(double)>& density, double lo, double hi,
    std::size_t n_atoms, std::size_t quad_points = 4096) {
    if (!(hi > lo) || n_atoms == 0)
        throw std::invalid_argument("quantile_atomize: bad bin parameters");
    // cumulative mass by trapezoid on a fine grid
    const double dx = (hi - lo) / static_cast<double>(quad_points);
    std::vector<double> cum(quad_points + 1, 0.0);
    double prev = density(lo);
    for (std::size_t i = 1; i <= quad_points; ++i) {
        const double x = lo + dx * static_cast<double>(i);
        const double cur = density(x);
        cum[i] = cum[i - 1] + 0.5 * (prev + cur) * dx;
        prev = cur;
    }
    const double total = cum.back();
    if (!(total > 0.0)) throw std::invalid_argument("quantile_atomize: zero mass");
    std::vector<LevyTriplet::Atom> atoms;
    atoms.reserve(n_atoms);
    std::size_t k = 0;
    for (std::size_t b = 0; b < n_atoms; ++b) {
        const double target = total * (static_cast<double>(b) + 0.5) /
                              static_cast<double>(n_atoms);
        while (k < quad_points && cum[k + 1] < target) ++k;
        const double frac = (cum[k + 1] > cum[k])
                                ? (target - cum[k]) / (cum[k + 1] - cum[k])
                                : 0.5;
        const double x = lo + dx * (static_cast<double>(k) + frac);
        atoms.push_back({x, total / static_cast<double>(n_atoms)});
    }
    return atoms;
}

}  // namespace csbp

#endif  // CSBP_MECHANISM_HPP
