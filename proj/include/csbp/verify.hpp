#ifndef CSBP_VERIFY_HPP
#define CSBP_VERIFY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "csbp/lamperti.hpp"
#include "csbp/mechanism.hpp"
#include "csbp/path.hpp"
#include "csbp/rng.hpp"
#include "csbp/simulate.hpp"
#include "csbp/skorohod.hpp"
#include "csbp/stats.hpp"

namespace csbp {

struct CheckRow {
    std::string id;
    double statistic = 0.0;
    double p = std::numeric_limits<double>::quiet_NaN();  // NaN = not a test
    bool pass = false;
    int seed_block = -1;  // -1 = not block-specific
};

struct SuiteReport {
    std::string suite;
    std::vector<CheckRow> rows;

    bool pass() const {
        for (const CheckRow& r : rows)
            if (!r.pass) return false;
        return !rows.empty();
    }

    std::string to_csv() const {
        std::ostringstream out;
        out << "test-id,statistic,p,pass,seed-block\n";
        for (const CheckRow& r : rows) {
            out << r.id << ',' << r.statistic << ',';
            if (std::isnan(r.p))
                out << '-';
            else
                out << r.p;
            out << ',' << (r.pass ? "pass" : "fail") << ',';
            if (r.seed_block < 0)
                out << '-';
            else
                out << r.seed_block;
            out << '\n';
        }
        return out.str();
    }
};

inline constexpr std::uint64_t kMasterSeed = 42;
inline constexpr double kAlpha = 0.001;

namespace verify_detail {

inline std::uint64_t block_seed(std::uint64_t base, int block) {
    return base + 1000003ull * static_cast<std::uint64_t>(block);
}

/// value[i] = fn(stream i), split over threads; deterministic in the seed.
inline std::vector<double> parallel_values(std::size_t n, std::uint64_t seed,
                                           const std::function<double(RngStream&)>& fn,
                                           unsigned threads) {
    std::vector<double> out(n);
    if (threads == 0) threads = 1;
    auto work = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            RngStream rng(seed, i);
            out[i] = fn(rng);
        }
    };
    if (threads == 1 || n < 2) {
        work(0, n);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n + threads - 1) / threads;
        for (unsigned w = 0; w < threads; ++w) {
            const std::size_t lo = std::min(n, w * chunk);
            const std::size_t hi = std::min(n, lo + chunk);
            if (lo < hi) pool.emplace_back(work, lo, hi);
        }
        for (std::thread& th : pool) th.join();
    }
    return out;
}

/// Random member of the absorbed path space: finite positive values on a
/// handful of holding intervals, ending in absorption at 0 (mostly) or a
/// jump to infinity.
inline CadlagPath random_event_path(RngStream& rng) {
    const std::size_t segments = 1 + static_cast<std::size_t>(rng.below(49));
    std::vector<double> ts{0.0};
    std::vector<ExtReal> vs;
    double last = -1.0;
    for (std::size_t i = 0; i < segments; ++i) {
        double v;
        do {
            v = 0.1 + 9.9 * rng.uniform();
        } while (v == last);
        last = v;
        vs.push_back(ExtReal(v));
        ts.push_back(ts.back() + 0.01 + 2.0 * rng.uniform());
    }
    if (rng.uniform() < 0.2) {
        vs.push_back(ExtReal::infinity());
        return CadlagPath::event(std::move(ts), std::move(vs), ExtReal::infinity());
    }
    vs.push_back(ExtReal(0.0));
    return CadlagPath::event(std::move(ts), std::move(vs), ExtReal(0.0));
}

/// Negative jumps other than -1 are forbidden on skeleton paths (and the
/// only ones that can occur at all in this harness); returns the count of
/// offenders.
inline std::size_t negative_jump_violations(const CadlagPath& p) {
    std::size_t bad = 0;
    for (const Jump& j : jumps(p))
        if (j.size < 0.0 && j.size != -1.0) ++bad;
    return bad;
}

inline const LevyTriplet kFellerTriplet{0.0, 1.0, {}, 0.0};  // psi(u) = u^2/2

inline double feller_value_at_one(RngStream& rng, double x0, double dt) {
    const CadlagPath p = sample_csbp_sde(kFellerTriplet, x0, 1.0, dt, rng);
    const ExtReal z = eval(p, 1.0);
    return z.get();  // never infinite: no killing atom
}

}  // namespace verify_detail

/// Criterion: the two path transforms invert each other exactly on the
/// absorbed step-function space (1000 seeded paths, < 1e-12).
inline SuiteReport verify_roundtrip(std::uint64_t seed = kMasterSeed,
                                    unsigned threads = 1) {
    SuiteReport rep{"roundtrip", {}};
    const std::vector<double> disc = verify_detail::parallel_values(
        1000, seed,
        [](RngStream& rng) {
            return roundtrip_check(verify_detail::random_event_path(rng));
        },
        threads);
    const double worst = *std::max_element(disc.begin(), disc.end());
    rep.rows.push_back({"roundtrip_max_discrepancy", worst,
                        std::numeric_limits<double>::quiet_NaN(), worst < 1e-12, -1});
    return rep;
}

/// Criteria: the quadratic flow matches lambda/(1+lambda t) to 1e-8, and the
/// flow composes as a semigroup to 1e-6 for three mechanisms.
inline SuiteReport verify_flow(std::uint64_t = kMasterSeed, unsigned = 1) {
    SuiteReport rep{"flow", {}};
    const std::vector<double> lambdas{0.5, 1.0, 2.0, 4.0};
    const std::vector<double> times{0.1, 0.5, 1.0, 2.0};

    double worst = 0.0;
    const Mechanism quad = QuadraticMech{1.0};
    for (double l : lambdas)
        for (double t : times)
            worst = std::max(worst, std::abs(flow(quad, l, t) - l / (1.0 + l * t)));
    rep.rows.push_back({"flow_quadratic_vs_analytic", worst,
                        std::numeric_limits<double>::quiet_NaN(), worst < 1e-8, -1});

    const std::vector<std::pair<std::string, Mechanism>> mechs{
        {"quadratic", QuadraticMech{1.0}},
        {"logistic", LogisticMech{}},
        {"bd_2_1", BirthDeathMech{2.0, 1.0}}};
    for (const auto& [name, m] : mechs) {
        double defect = 0.0;
        for (double l : lambdas)
            for (int si = 1; si <= 10; ++si)
                for (int ti = 1; ti <= 10; ++ti)
                    defect = std::max(defect,
                                      semigroup_defect(m, l, 0.1 * si, 0.1 * ti));
        rep.rows.push_back({"semigroup_defect_" + name, defect,
                            std::numeric_limits<double>::quiet_NaN(), defect < 1e-6, -1});
    }
    return rep;
}

namespace verify_detail {

struct DiscreteLampertiData {
    std::vector<CadlagPath> dsbp;         // the branching chains
    std::vector<CadlagPath> transformed;  // their time changes
    std::vector<CadlagPath> cp;           // directly sampled skeletons
};

inline DiscreteLampertiData discrete_lamperti_block(std::uint64_t seed, std::size_t n,
                                                    unsigned threads) {
    const DsbpSpec spec{1.5, {{2, 1.0}}, 0.0};  // b = 1, d = 1.5
    DiscreteLampertiData data;
    data.dsbp.resize(n);
    data.transformed.resize(n);
    data.cp.resize(n);
    parallel_values(
        n, seed,
        [&](RngStream& rng) {
            const std::size_t i = rng.stream_id();
            data.dsbp[i] = sample_dsbp(spec, 5, 3.0, rng);
            data.transformed[i] = transform(data.dsbp[i]);
            RngStream rng_cp(seed ^ 0x5851f42d4c957f2dull, i);
            data.cp[i] = sample_compound_poisson(spec, 5, 3.0, rng_cp);
            return 0.0;
        },
        threads);
    return data;
}

inline std::vector<double> marginal(const std::vector<CadlagPath>& paths, double t) {
    std::vector<double> xs;
    xs.reserve(paths.size());
    for (const CadlagPath& p : paths) xs.push_back(eval(p, t).get());
    std::sort(xs.begin(), xs.end());
    return xs;
}

}  // namespace verify_detail

/// Criterion: time-changed branching-chain marginals match the directly
/// sampled skeleton's marginals (two-sample KS, alpha = 0.001, >= 2 of 3
/// seed blocks), and skeleton paths never jump down by more than 1.
inline SuiteReport verify_discrete_lamperti(std::uint64_t seed = kMasterSeed,
                                            unsigned threads = 1,
                                            std::size_t n_paths = 10000) {
    SuiteReport rep{"discrete_lamperti", {}};
    const std::vector<double> times{0.5, 1.0, 2.0};
    int blocks_passed = 0;
    std::size_t neg_violations = 0;
    for (int block = 0; block < 3; ++block) {
        const auto data = verify_detail::discrete_lamperti_block(
            verify_detail::block_seed(seed, block), n_paths, threads);
        bool block_ok = true;
        for (double t : times) {
            const KsResult ks = ks_two_sample(verify_detail::marginal(data.transformed, t),
                                              verify_detail::marginal(data.cp, t));
            const bool ok = ks.p > kAlpha;
            block_ok = block_ok && ok;
            rep.rows.push_back({"ks_transformed_vs_skeleton_t" + std::to_string(t).substr(0, 3),
                                ks.d, ks.p, true /* aggregated below */, block});
        }
        if (block_ok) ++blocks_passed;
        for (const CadlagPath& p : data.dsbp)
            neg_violations += verify_detail::negative_jump_violations(p);
        for (const CadlagPath& p : data.cp)
            neg_violations += verify_detail::negative_jump_violations(p);
    }
    rep.rows.push_back({"blocks_passed_of_3", static_cast<double>(blocks_passed),
                        std::numeric_limits<double>::quiet_NaN(), blocks_passed >= 2, -1});
    rep.rows.push_back({"negative_jump_violations", static_cast<double>(neg_violations),
                        std::numeric_limits<double>::quiet_NaN(), neg_violations == 0, -1});
    return rep;
}

/// Criterion: the diffusion's empirical Laplace transform at t = 1 matches
/// e^{-x u_1(lambda)} within 3 stderr + 0.01 discretization allowance.
inline SuiteReport verify_csbp_laplace(std::uint64_t seed = kMasterSeed,
                                       unsigned threads = 1, std::size_t n_paths = 100000,
                                       double dt = 1e-3) {
    SuiteReport rep{"csbp_laplace", {}};
    const std::vector<double> z = verify_detail::parallel_values(
        n_paths, seed,
        [dt](RngStream& rng) { return verify_detail::feller_value_at_one(rng, 1.0, dt); },
        threads);
    const Mechanism half_quad = QuadraticMech{0.5};  // psi(u) = u^2/2
    for (double lambda : {0.5, 1.0, 2.0}) {
        std::vector<double> xs(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) xs[i] = std::exp(-lambda * z[i]);
        const Estimate est = mean_estimate(xs);
        const double target = std::exp(-flow(half_quad, lambda, 1.0));
        const double err = std::abs(est.value - target);
        rep.rows.push_back({"laplace_err_lambda" + std::to_string(lambda).substr(0, 3), err,
                            std::numeric_limits<double>::quiet_NaN(),
                            err < 3.0 * est.stderr_ + 0.01, -1});
    }
    return rep;
}

/// Criterion: additivity in the start value — the Laplace transform from
/// x = 2 equals the product of two independent x = 1 transforms.
inline SuiteReport verify_branching(std::uint64_t seed = kMasterSeed,
                                    unsigned threads = 1, std::size_t n_paths = 100000,
                                    double dt = 1e-3) {
    SuiteReport rep{"branching", {}};
    const std::vector<double> z2 = verify_detail::parallel_values(
        n_paths, seed + 1,
        [dt](RngStream& rng) { return verify_detail::feller_value_at_one(rng, 2.0, dt); },
        threads);
    const std::vector<double> za = verify_detail::parallel_values(
        n_paths, seed + 2,
        [dt](RngStream& rng) { return verify_detail::feller_value_at_one(rng, 1.0, dt); },
        threads);
    const std::vector<double> zb = verify_detail::parallel_values(
        n_paths, seed + 3,
        [dt](RngStream& rng) { return verify_detail::feller_value_at_one(rng, 1.0, dt); },
        threads);
    for (double lambda : {0.5, 1.0, 2.0}) {
        auto laplace = [lambda](const std::vector<double>& zs) {
            std::vector<double> xs(zs.size());
            for (std::size_t i = 0; i < zs.size(); ++i) xs[i] = std::exp(-lambda * zs[i]);
            return mean_estimate(xs);
        };
        const Estimate e2 = laplace(z2), ea = laplace(za), eb = laplace(zb);
        const double prod = ea.value * eb.value;
        const double comb = std::sqrt(e2.stderr_ * e2.stderr_ +
                                      ea.value * ea.value * eb.stderr_ * eb.stderr_ +
                                      eb.value * eb.value * ea.stderr_ * ea.stderr_);
        const double err = std::abs(e2.value - prod);
        rep.rows.push_back({"branching_err_lambda" + std::to_string(lambda).substr(0, 3),
                            err, std::numeric_limits<double>::quiet_NaN(),
                            err < 3.0 * comb + 0.01, -1});
    }
    return rep;
}

namespace verify_detail {

/// Up-down skeleton from x0 = 1 run to absorption at 0 or escape above the
/// cap; escape makes eventual extinction as unlikely as (d/b)^cap.
inline CadlagPath bd_skeleton_capped(double b, double d, std::uint64_t cap,
                                     RngStream& rng) {
    const double total = b + d;
    std::vector<double> ts{0.0};
    std::vector<ExtReal> vs{ExtReal(1.0)};
    std::uint64_t x = 1;
    double t = 0.0;
    while (x > 0 && x < cap) {
        t += rng.exponential(total);
        x += (rng.uniform() * total <= b) ? 1 : static_cast<std::uint64_t>(-1);
        ts.push_back(t);
        vs.push_back(ExtReal(static_cast<double>(x)));
    }
    const bool extinct = (x == 0);
    return CadlagPath::event(std::move(ts), std::move(vs), ExtReal(0.0),
                             extinct ? std::nullopt : std::optional<double>(t));
}

}  // namespace verify_detail

/// Criterion: the supercritical up-down skeleton, time-changed into its
/// branching process, dies out with probability e^{-Phi} = 1/2; censoring
/// (paths that escaped past the cap) contributes a provably tiny tail.
inline SuiteReport verify_extinction(std::uint64_t seed = kMasterSeed,
                                     unsigned threads = 1, std::size_t n_paths = 10000) {
    SuiteReport rep{"extinction", {}};
    const double b = 2.0, d = 1.0;
    const std::uint64_t cap = 300;
    std::vector<CadlagPath> transformed(n_paths);
    std::vector<double> tail(n_paths, 0.0);
    std::vector<std::size_t> neg(n_paths, 0);
    verify_detail::parallel_values(
        n_paths, seed,
        [&](RngStream& rng) {
            const std::size_t i = rng.stream_id();
            const CadlagPath skel = verify_detail::bd_skeleton_capped(b, d, cap, rng);
            neg[i] = verify_detail::negative_jump_violations(skel);
            transformed[i] = inverse_transform(skel);
            if (skel.truncated())  // escaped: chance of dying later is (d/b)^x
                tail[i] = std::pow(d / b, skel.values.back().get());
            return 0.0;
        },
        threads);

    PathEnsemble ens;
    ens.paths = std::move(transformed);
    const Estimate ext = extinction_estimate(ens);
    const double phi_root = largest_root(BirthDeathMech{b, d}).value;
    const double target = std::exp(-phi_root);  // = 1/2
    const double err = std::abs(ext.value - target);
    rep.rows.push_back({"extinction_vs_exp_minus_root", err,
                        std::numeric_limits<double>::quiet_NaN(),
                        err < 3.0 * ext.stderr_, -1});
    const double bias =
        detail::pairwise_sum(tail.data(), tail.size()) / static_cast<double>(n_paths);
    rep.rows.push_back({"censoring_tail_bias", bias,
                        std::numeric_limits<double>::quiet_NaN(), bias < 0.01, -1});
    std::size_t neg_total = 0;
    for (std::size_t v : neg) neg_total += v;
    rep.rows.push_back({"negative_jump_violations", static_cast<double>(neg_total),
                        std::numeric_limits<double>::quiet_NaN(), neg_total == 0, -1});
    return rep;
}

/// Criterion: for extinct chains, the absorption time of the time-changed
/// path equals the total area under the original path (exactly, on step
/// functions).
inline SuiteReport verify_hitting_time(std::uint64_t seed = kMasterSeed,
                                       unsigned threads = 1, std::size_t n_paths = 10000) {
    SuiteReport rep{"hitting_time", {}};
    const auto data = verify_detail::discrete_lamperti_block(
        verify_detail::block_seed(seed, 0), n_paths, threads);
    double worst = 0.0;
    std::size_t extinct = 0;
    for (std::size_t i = 0; i < data.dsbp.size(); ++i) {
        const CadlagPath& f = data.dsbp[i];
        if (f.truncated() || !f.terminal.is_zero()) continue;
        ++extinct;
        const double theta_total = additive_functional(f).limit();
        const double t0 = data.transformed[i].times.back();
        worst = std::max(worst, std::abs(t0 - theta_total) / std::max(theta_total, 1e-30));
    }
    rep.rows.push_back({"hitting_time_max_rel_err", worst,
                        std::numeric_limits<double>::quiet_NaN(),
                        extinct > 0 && worst < 1e-10, -1});
    rep.rows.push_back({"extinct_paths_checked", static_cast<double>(extinct),
                        std::numeric_limits<double>::quiet_NaN(), extinct > 0, -1});
    return rep;
}

/// Criterion: the skeleton exponents converge to psi(u) = u^2/2 (sup gap on
/// [0,4] strictly decreasing in n) and the rescaled chain marginals at t = 1
/// drift toward the diffusion's (KS distance non-increasing up to noise).
inline SuiteReport verify_convergence(std::uint64_t seed = kMasterSeed,
                                      unsigned threads = 1, std::size_t n_paths = 10000,
                                      double dt = 1e-3) {
    SuiteReport rep{"convergence", {}};
    const Mechanism target = QuadraticMech{0.5};
    const std::vector<std::uint64_t> ns{10, 50, 250};

    std::vector<double> gaps;
    std::vector<DsbpApprox> approx;
    for (std::uint64_t n : ns) {
        approx.push_back(dsbp_approximation(target, n, 1.0));
        double gap = 0.0;
        for (int i = 0; i <= 400; ++i) {
            const double l = 0.01 * i;
            gap = std::max(gap, std::abs(psi(approx.back().psi_n, l) - psi(target, l)));
        }
        gaps.push_back(gap);
        rep.rows.push_back({"exponent_sup_gap_n" + std::to_string(n), gap,
                            std::numeric_limits<double>::quiet_NaN(), true, -1});
    }
    const bool decreasing = gaps[0] > gaps[1] && gaps[1] > gaps[2];
    rep.rows.push_back({"exponent_gap_strictly_decreasing",
                        static_cast<double>(decreasing),
                        std::numeric_limits<double>::quiet_NaN(), decreasing, -1});

    std::vector<double> feller = verify_detail::parallel_values(
        n_paths, seed + 77,
        [dt](RngStream& rng) { return verify_detail::feller_value_at_one(rng, 1.0, dt); },
        threads);
    std::sort(feller.begin(), feller.end());

    std::vector<double> ks_d;
    for (std::size_t k = 0; k < ns.size(); ++k) {
        const std::uint64_t n = ns[k];
        const DsbpApprox& ap = approx[k];
        // rescaled chain value at t = 1: chain horizon a_n/n * 1 = n, value/n
        std::vector<double> xs = verify_detail::parallel_values(
            n_paths, seed + 100 + n,
            [&ap, n](RngStream& rng) {
                const CadlagPath p =
                    sample_dsbp(ap.spec, static_cast<std::uint64_t>(ap.x_n),
                                static_cast<double>(n), rng);
                return eval(p, static_cast<double>(n)).get() / static_cast<double>(n);
            },
            threads);
        std::sort(xs.begin(), xs.end());
        const KsResult ks = ks_two_sample(xs, feller);
        ks_d.push_back(ks.d);
        rep.rows.push_back({"ks_rescaled_vs_diffusion_n" + std::to_string(n), ks.d, ks.p,
                            true, -1});
    }
    const double ne = static_cast<double>(n_paths) / 2.0;
    const double noise = 2.0 / std::sqrt(ne);
    const bool trend = ks_d[1] <= ks_d[0] + noise && ks_d[2] <= ks_d[1] + noise;
    rep.rows.push_back({"ks_non_increasing_within_noise", static_cast<double>(trend),
                        std::numeric_limits<double>::quiet_NaN(), trend, -1});
    return rep;
}

/// Criterion: the blow-up discontinuity — truncations converge in d but not
/// in d_inf, and the inverse time changes stay far apart on [0, 1].
inline SuiteReport verify_example1(std::uint64_t = kMasterSeed, unsigned = 1) {
    SuiteReport rep{"example1", {}};
    const Example1Report demo = example1_demo({2, 5, 10});
    const double kerr = std::abs(demo.kappa_inf - 1.0);
    rep.rows.push_back({"kappa_inf_err", kerr, std::numeric_limits<double>::quiet_NaN(),
                        kerr <= 1e-6, -1});
    for (const Example1Row& row : demo.rows) {
        const std::string tag = "_n" + std::to_string(row.n);
        rep.rows.push_back({"d_usual" + tag, row.d_usual,
                            std::numeric_limits<double>::quiet_NaN(),
                            row.d_usual < std::exp(-row.n) + 1e-3, -1});
        rep.rows.push_back({"d_inf_lower" + tag, row.d_inf_lower,
                            std::numeric_limits<double>::quiet_NaN(),
                            row.d_inf_lower > 0.3, -1});
        rep.rows.push_back({"transform_gap" + tag, row.transform_gap,
                            std::numeric_limits<double>::quiet_NaN(),
                            row.transform_gap > 0.5, -1});
    }
    return rep;
}

/// Dispatch by suite name; throws std::invalid_argument for unknown names.
inline SuiteReport run_suite(const std::string& name, std::uint64_t seed = kMasterSeed,
                             unsigned threads = 1) {
    if (name == "roundtrip") return verify_roundtrip(seed, threads);
    if (name == "flow") return verify_flow(seed, threads);
    if (name == "discrete_lamperti") return verify_discrete_lamperti(seed, threads);
    if (name == "csbp_laplace") return verify_csbp_laplace(seed, threads);
    if (name == "branching") return verify_branching(seed, threads);
    if (name == "extinction") return verify_extinction(seed, threads);
    if (name == "hitting_time") return verify_hitting_time(seed, threads);
    if (name == "convergence") return verify_convergence(seed, threads);
    if (name == "example1") return verify_example1(seed, threads);
    throw std::invalid_argument(
        "unknown suite: " + name +
        " (expected roundtrip|flow|discrete_lamperti|csbp_laplace|branching|extinction|"
        "hitting_time|convergence|example1)");
}

}  // namespace csbp

#endif  // CSBP_VERIFY_HPP
