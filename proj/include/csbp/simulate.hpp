#ifndef CSBP_SIMULATE_HPP
#define CSBP_SIMULATE_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "csbp/mechanism.hpp"
#include "csbp/path.hpp"
#include "csbp/rng.hpp"

namespace csbp {

/// Reproduction measure of a discrete-state branching process: an individual
/// is replaced by k individuals at rate mu_k (k = 1 excluded by definition;
/// k = infinity is killing). The chain jumps from i to i + (k-1) at rate
/// i * mu_k.
struct DsbpSpec {
    double mu0 = 0.0;                                     // death: jump -1
    std::vector<std::pair<std::uint64_t, double>> births; // (k, mu_k), k >= 2
    double mu_inf = 0.0;                                  // killing: jump to inf

    double total() const {
        double s = mu0 + mu_inf;
        for (const auto& [k, mu] : births) s += mu;
        return s;
    }

    void check() const {
        if (mu0 < 0.0 || mu_inf < 0.0)
            throw std::invalid_argument("dsbp: rates must be nonnegative");
        for (const auto& [k, mu] : births) {
            if (k < 2) throw std::invalid_argument(
                "dsbp: offspring count must be 0 or >= 2 (mu_1 = 0 by definition)");
            if (mu < 0.0) throw std::invalid_argument("dsbp: rates must be nonnegative");
        }
        if (!(total() > 0.0)) throw std::invalid_argument("dsbp: total rate must be positive");
    }
};

namespace detail {

struct DrawnJump {
    bool to_infinity = false;
    std::int64_t delta = 0;  // k - 1
};

inline DrawnJump draw_jump(const DsbpSpec& spec, double total, RngStream& rng) {
    double u = rng.uniform() * total;
    if (u <= spec.mu0) return {false, -1};
    u -= spec.mu0;
    for (const auto& [k, mu] : spec.births) {
        if (u <= mu) return {false, static_cast<std::int64_t>(k) - 1};
        u -= mu;
    }
    return {true, 0};
}

inline constexpr std::size_t kEventCap = 200'000'000;

}  // namespace detail

/// Exact continuous-time simulation of the branching chain: at state i wait
/// Exp(i * total), then jump by k-1 with probability mu_k / total.
inline CadlagPath sample_dsbp(const DsbpSpec& spec, std::uint64_t i0, double horizon,
                              RngStream& rng) {
    spec.check();
    if (!(horizon > 0.0)) throw std::invalid_argument("sample_dsbp: horizon must be positive");
    const double total = spec.total();
    std::vector<double> times{0.0};
    std::vector<ExtReal> vals{ExtReal(static_cast<double>(i0))};
    std::uint64_t i = i0;
    double t = 0.0;
    ExtReal terminal(0.0);
    bool complete = (i == 0);
    while (!complete) {
        t += rng.exponential(static_cast<double>(i) * total);
        if (t >= horizon) break;
        const detail::DrawnJump j = detail::draw_jump(spec, total, rng);
        if (j.to_infinity) {
            times.push_back(t);
            vals.push_back(ExtReal::infinity());
            terminal = ExtReal::infinity();
            complete = true;
            break;
        }
        i = static_cast<std::uint64_t>(static_cast<std::int64_t>(i) + j.delta);
        times.push_back(t);
        vals.push_back(ExtReal(static_cast<double>(i)));
        if (i == 0) {
            terminal = ExtReal(0.0);
            complete = true;
        }
        if (times.size() > detail::kEventCap)
            throw std::runtime_error("sample_dsbp: event cap exceeded");
    }
    return CadlagPath::event(std::move(times), std::move(vals), terminal,
                             complete ? std::nullopt : std::optional<double>(horizon));
}

/// The skeleton walk with the same jump-size law but state-independent
/// Exp(total) holding times, stopped on first hit of 0.
inline CadlagPath sample_compound_poisson(const DsbpSpec& spec, std::uint64_t x0,
                                          double horizon, RngStream& rng) {
    spec.check();
    if (!(horizon > 0.0))
        throw std::invalid_argument("sample_compound_poisson: horizon must be positive");
    const double total = spec.total();
    std::vector<double> times{0.0};
    std::vector<ExtReal> vals{ExtReal(static_cast<double>(x0))};
    std::int64_t x = static_cast<std::int64_t>(x0);
    double t = 0.0;
    ExtReal terminal(0.0);
    bool complete = (x == 0);
    while (!complete) {
        t += rng.exponential(total);
        if (t >= horizon) break;
        const detail::DrawnJump j = detail::draw_jump(spec, total, rng);
        if (j.to_infinity) {
            times.push_back(t);
            vals.push_back(ExtReal::infinity());
            terminal = ExtReal::infinity();
            complete = true;
            break;
        }
        x += j.delta;
        times.push_back(t);
        vals.push_back(ExtReal(static_cast<double>(x)));
        if (x <= 0) {
            terminal = ExtReal(0.0);
            complete = true;
        }
        if (times.size() > detail::kEventCap)
            throw std::runtime_error("sample_compound_poisson: event cap exceeded");
    }
    return CadlagPath::event(std::move(times), std::move(vals), terminal,
                             complete ? std::nullopt : std::optional<double>(horizon));
}

namespace detail {

// Draws an atom index proportionally to rates; total must be > 0.
inline const LevyTriplet::Atom& draw_atom(const LevyTriplet& tr, double total,
                                          RngStream& rng) {
    double u = rng.uniform() * total;
    for (const LevyTriplet::Atom& at : tr.atoms) {
        if (u <= at.rate) return at;
        u -= at.rate;
    }
    return tr.atoms.back();
}

// Drift with the r < 1 compensation folded in, so the sampler's law matches
// the psi assembly (compensated small jumps = raw jumps minus their mean).
inline double effective_drift(const LevyTriplet& tr) {
    double a = tr.drift;
    for (const LevyTriplet::Atom& at : tr.atoms)
        if (at.size > 0.0 && at.size < 1.0) a -= at.size * at.rate;
    return a;
}

}  // namespace detail

/// Spectrally positive Levy path from x0, stopped on reaching 0, truncated
/// at the horizon. Pure-jump triplets (sigma = 0, zero effective drift)
/// yield exact Event paths; anything else is Euler-discretized on the grid
/// with exact compound-Poisson jump times folded into the containing step.
inline CadlagPath sample_levy(const LevyTriplet& tr, double x0, double horizon,
                              double grid_step, RngStream& rng) {
    tr.check();
    if (x0 < 0.0) throw std::invalid_argument("sample_levy: x0 must be nonnegative");
    if (!(horizon > 0.0)) throw std::invalid_argument("sample_levy: horizon must be positive");
    const double a_eff = detail::effective_drift(tr);
    const double m = tr.total_rate();

    if (tr.sigma == 0.0 && a_eff == 0.0) {
        // exact event-driven compound Poisson
        std::vector<double> times{0.0};
        std::vector<ExtReal> vals{ExtReal(x0)};
        double x = x0, t = 0.0;
        ExtReal terminal(0.0);
        bool complete = (x == 0.0);
        while (!complete && m > 0.0) {
            t += rng.exponential(m);
            if (t >= horizon) break;
            const LevyTriplet::Atom& at = detail::draw_atom(tr, m, rng);
            times.push_back(t);
            if (std::isinf(at.size)) {
                vals.push_back(ExtReal::infinity());
                terminal = ExtReal::infinity();
                complete = true;
                break;
            }
            x = std::max(0.0, x + at.size);
            vals.push_back(ExtReal(x));
            if (x == 0.0) complete = true;
            if (times.size() > detail::kEventCap)
                throw std::runtime_error("sample_levy: event cap exceeded");
        }
        return CadlagPath::event(std::move(times), std::move(vals), terminal,
                                 complete ? std::nullopt : std::optional<double>(horizon));
    }

    if (!(grid_step > 0.0)) throw std::invalid_argument("sample_levy: grid step must be positive");
    std::vector<ExtReal> vals{ExtReal(x0)};
    double x = x0;
    double next_jump = (m > 0.0) ? rng.exponential(m) : std::numeric_limits<double>::infinity();
    const std::size_t n_steps = static_cast<std::size_t>(std::ceil(horizon / grid_step - 1e-9));
    bool absorbed0 = (x == 0.0), killed = false;
    for (std::size_t s = 0; s < n_steps && !absorbed0 && !killed; ++s) {
        const double t_end = grid_step * static_cast<double>(s + 1);
        x += a_eff * grid_step;
        if (tr.sigma > 0.0) x += tr.sigma * std::sqrt(grid_step) * rng.normal();
        while (next_jump <= t_end) {
            const LevyTriplet::Atom& at = detail::draw_atom(tr, m, rng);
            if (std::isinf(at.size)) {
                killed = true;
                break;
            }
            x += at.size;
            next_jump += rng.exponential(m);
        }
        if (killed) {
            vals.push_back(ExtReal::infinity());
        } else if (x <= 0.0) {
            // first grid crossing of 0; the sub-step crossing time is not
            // representable on the grid, so absorb at this node
            x = 0.0;
            absorbed0 = true;
            vals.push_back(ExtReal(0.0));
        } else {
            vals.push_back(ExtReal(x));
        }
    }
    ExtReal terminal = killed ? ExtReal::infinity() : ExtReal(0.0);
    const bool complete = absorbed0 || killed;
    return CadlagPath::grid(grid_step, std::move(vals), terminal,
                            complete ? std::nullopt : std::optional<double>(horizon));
}

/// Branching diffusion with jumps: between jumps Euler-Maruyama for
/// dZ = a_eff Z dt + sigma sqrt(Z) dB; jumps arrive at rate Z_{t-} Lambda(dr),
/// realized by thinning against a per-interval bound that is doubled and the
/// interval re-simulated whenever it is violated.
inline CadlagPath sample_csbp_sde(const LevyTriplet& tr, double x0, double horizon,
                                  double step, RngStream& rng) {
    tr.check();
    if (x0 < 0.0) throw std::invalid_argument("sample_csbp_sde: x0 must be nonnegative");
    if (!(horizon > 0.0) || !(step > 0.0))
        throw std::invalid_argument("sample_csbp_sde: horizon and step must be positive");
    const double a_eff = detail::effective_drift(tr);
    const double m = tr.total_rate();
    const double sqrt_dt = std::sqrt(step);
    const std::size_t n_steps = static_cast<std::size_t>(std::ceil(horizon / step - 1e-9));

    std::vector<ExtReal> vals;
    vals.reserve(n_steps + 1);
    vals.push_back(ExtReal(x0));
    double z = x0;
    bool absorbed0 = (z == 0.0), killed = false;
    for (std::size_t s = 0; s < n_steps && !absorbed0 && !killed; ++s) {
        double bound = z * (1.0 + 10.0 * sqrt_dt) + 1.0;
        for (;;) {  // re-simulated with a doubled bound on violation
            double zl = z;
            bool kill_local = false, violated = false;
            if (m > 0.0) {
                double t_loc = rng.exponential(bound * m);
                while (t_loc < step) {
                    if (rng.uniform() * bound <= zl) {  // accept proposal
                        const LevyTriplet::Atom& at = detail::draw_atom(tr, m, rng);
                        if (std::isinf(at.size)) {
                            kill_local = true;
                            break;
                        }
                        zl = std::max(0.0, zl + at.size);
                        if (zl > bound) {
                            violated = true;
                            break;
                        }
                    }
                    t_loc += rng.exponential(bound * m);
                }
            }
            if (violated) {
                bound *= 2.0;
                continue;
            }
            if (kill_local) {
                killed = true;
                break;
            }
            double z_new = zl + a_eff * zl * step +
                           tr.sigma * std::sqrt(std::max(zl, 0.0)) * sqrt_dt * rng.normal();
            if (z_new > bound) {
                bound *= 2.0;
                continue;
            }
            z = std::max(z_new, 0.0);
            break;
        }
        if (killed) {
            vals.push_back(ExtReal::infinity());
        } else {
            if (z == 0.0) absorbed0 = true;
            vals.push_back(ExtReal(z));
        }
    }
    ExtReal terminal = killed ? ExtReal::infinity() : ExtReal(0.0);
    const bool complete = absorbed0 || killed;
    return CadlagPath::grid(step, std::move(vals), terminal,
                            complete ? std::nullopt : std::optional<double>(horizon));
}

/// The scaling operator: f |-> t -> f(a*t) / b. Time compresses by a, values
/// shrink by b; infinity is fixed.
inline CadlagPath rescale(const CadlagPath& f, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("rescale: a, b must be positive");
    CadlagPath out = f;
    if (out.kind == PathKind::Event) {
        for (double& t : out.times) t /= a;
    } else {
        out.step /= a;
    }
    for (ExtReal& v : out.values)
        if (!v.is_infinite()) v = ExtReal(v.get() / b);
    if (out.horizon) out.horizon = *out.horizon / a;
    return out;
}

/// Lattice skeleton approximating a mechanism at resolution n: rates nu_j of
/// jumps j in {-1} u N u {inf} such that the rescaled exponent
/// psi_n(lambda) = n^2 sum_j nu_j (e^{-lambda j / n} - 1) approaches psi.
struct DsbpApprox {
    DsbpSpec spec;       // mu_0 = nu_{-1}, mu_{j+1} = nu_j, mu_inf = nu_inf
    double a_n = 0.0;    // time scaling; value scaling is n
    std::int64_t x_n = 0;
    Mechanism psi_n;     // the rescaled skeleton exponent, exactly assembled
};

/// Builds the skeleton: killing mass maps to nu_inf = q/n^2; the Gaussian
/// part to a +-1 pair at rate sigma^2/2 each; drift to a single lattice step
/// at rate |a|/n; each finite atom (r, rate) to the nearest lattice jump
/// j = round(n r) at rate/n^2, with its r < 1 compensation emulated by
/// additional -1 jumps. The resulting exponent matches psi to O(1/n) (O(1/n^2)
/// when drift-free with lattice-exact atoms).
inline DsbpApprox dsbp_approximation(const Mechanism& m, std::uint64_t n, double x) {
    if (n == 0) throw std::invalid_argument("dsbp_approximation: n must be >= 1");
    if (x < 0.0) throw std::invalid_argument("dsbp_approximation: x must be nonnegative");
    // normalize every mechanism to triplet data (a, sigma, atoms, q)
    LevyTriplet tr;
    if (const auto* t = std::get_if<LevyTriplet>(&m)) {
        tr = *t;
    } else if (const auto* q = std::get_if<QuadraticMech>(&m)) {
        tr.sigma = std::sqrt(2.0 * q->c);
    } else if (std::get_if<LogisticMech>(&m)) {
        tr.sigma = std::sqrt(2.0);
        tr.drift = 1.0;  // psi = u^2 - u has the -a lambda term with a = 1
    } else if (const auto* lin = std::get_if<LinearMech>(&m)) {
        tr.drift = -lin->c;
    } else if (const auto* c = std::get_if<ConstantMech>(&m)) {
        tr.atoms.push_back({std::numeric_limits<double>::infinity(), c->q});
    } else if (const auto* bd = std::get_if<BirthDeathMech>(&m)) {
        if (bd->b > 0.0) tr.atoms.push_back({1.0, bd->b});
        if (bd->d > 0.0) tr.atoms.push_back({-1.0, bd->d});
    }
    tr.check();

    const double nn = static_cast<double>(n);
    double nu_down = 0.0, nu_inf = 0.0;
    std::vector<std::pair<std::uint64_t, double>> nu_up;  // (j, rate), j >= 1
    auto add_up = [&nu_up](std::uint64_t j, double rate) {
        for (auto& [jj, r] : nu_up)
            if (jj == j) {
                r += rate;
                return;
            }
        nu_up.emplace_back(j, rate);
    };

    if (tr.sigma > 0.0) {
        const double half = 0.5 * tr.sigma * tr.sigma;
        add_up(1, half);
        nu_down += half;
    }
    if (tr.drift > 0.0)
        add_up(1, tr.drift / nn);
    else if (tr.drift < 0.0)
        nu_down += -tr.drift / nn;
    for (const LevyTriplet::Atom& at : tr.atoms) {
        if (std::isinf(at.size)) {
            nu_inf += at.rate / (nn * nn);
        } else if (at.size > 0.0) {
            const std::uint64_t j =
                std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(nn * at.size)));
            add_up(j, at.rate / (nn * nn));
            if (at.size < 1.0)  // compensation: +lambda r rate, to first order
                nu_down += static_cast<double>(j) * at.rate / (nn * nn);
        } else {
            // lattice admits only -1; exact only when n * |size| rounds to 1
            if (std::llround(nn * -at.size) != 1)
                throw std::invalid_argument(
                    "dsbp_approximation: negative jump of size " + std::to_string(at.size) +
                    " is not representable by the -1 lattice step at n = " + std::to_string(n));
            nu_down += at.rate / (nn * nn);
        }
    }

    DsbpApprox out;
    out.spec.mu0 = nu_down;
    for (const auto& [j, rate] : nu_up) out.spec.births.emplace_back(j + 1, rate);
    out.spec.mu_inf = nu_inf;
    out.a_n = nn * nn;
    out.x_n = std::llround(nn * x);

    // exact exponent of the rescaled skeleton, expressed as a triplet whose
    // drift cancels the r < 1 compensation terms of the psi assembly
    LevyTriplet pn;
    double comp = 0.0;
    for (const auto& [j, rate] : nu_up) {
        const double r = static_cast<double>(j) / nn;
        pn.atoms.push_back({r, nn * nn * rate});
        if (r < 1.0) comp += r * nn * nn * rate;
    }
    if (nu_down > 0.0) pn.atoms.push_back({-1.0 / nn, nn * nn * nu_down});
    if (nu_inf > 0.0)
        pn.atoms.push_back({std::numeric_limits<double>::infinity(), nn * nn * nu_inf});
    pn.drift = comp;
    out.psi_n = pn;
    return out;
}

/// A seeded batch of independently sampled paths; path i came from stream i.
struct PathEnsemble {
    std::string config_digest;
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> stream_ids;
    std::vector<CadlagPath> paths;
};

/// Runs `sampler(rng)` once per path, each path on its own stream id
/// (0..n_paths-1), split across `threads` workers. The result is identical
/// for every thread count.
inline PathEnsemble generate_ensemble(
    std::size_t n_paths, std::uint64_t seed,
    const std::function<CadlagPath(RngStream&)>& sampler, unsigned threads = 1,
    std::string config_digest = {}) {
    PathEnsemble ens;
    ens.config_digest = std::move(config_digest);
    ens.seed = seed;
    ens.stream_ids.resize(n_paths);
    ens.paths.resize(n_paths);
    if (threads == 0) threads = 1;
    auto work = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            RngStream rng(seed, i);
            ens.stream_ids[i] = i;
            ens.paths[i] = sampler(rng);
        }
    };
    if (threads == 1 || n_paths < 2) {
        work(0, n_paths);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n_paths + threads - 1) / threads;
        for (unsigned w = 0; w < threads; ++w) {
            const std::size_t lo = std::min<std::size_t>(n_paths, w * chunk);
            const std::size_t hi = std::min<std::size_t>(n_paths, lo + chunk);
            if (lo < hi) pool.emplace_back(work, lo, hi);
        }
        for (std::thread& th : pool) th.join();
    }
    return ens;
}

}  // namespace csbp

#endif  // CSBP_SIMULATE_HPP
