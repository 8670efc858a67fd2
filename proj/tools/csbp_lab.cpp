// csbp_lab: configuration-driven laboratory for branching-process time
// changes — samplers, path transforms, flow tables, and the verification
// suites, all persisted as reproducible artifacts.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "csbp/config.hpp"
#include "csbp/lamperti.hpp"
#include "csbp/path_io.hpp"
#include "csbp/simulate.hpp"
#include "csbp/skorohod.hpp"
#include "csbp/stats.hpp"
#include "csbp/verify.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitAssert = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

struct CommonOpts {
    std::string config_file;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<unsigned> threads;
    bool print_config = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required) {
    auto* c = cmd->add_option("--config", opts.config_file, "experiment config file");
    if (config_required) c->required();
    cmd->add_option("--seed", [&opts](const std::vector<std::string>& v) {
        opts.seed = std::stoull(v.at(0));
        return true;
    }, "master seed (overrides config)");
    cmd->add_option("--out", [&opts](const std::vector<std::string>& v) {
        opts.out = v.at(0);
        return true;
    }, "output directory (overrides config)");
    cmd->add_option("--threads", [&opts](const std::vector<std::string>& v) {
        opts.threads = static_cast<unsigned>(std::stoul(v.at(0)));
        return true;
    }, "worker count (overrides config)");
    cmd->add_flag("--print-config", opts.print_config,
                  "print the effective config with all defaults explicit and exit");
}

csbp::ExperimentConfig load_config(const CommonOpts& opts) {
    csbp::ExperimentConfig cfg;
    if (!opts.config_file.empty())
        cfg = csbp::parse_config(csbp::read_text_file(opts.config_file));
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.out) cfg.out_dir = *opts.out;
    if (opts.threads) cfg.threads = *opts.threads;
    return cfg;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw csbp::IoError("cannot create directory " + dir.string());
}

std::string path_file_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "path_%04zu.csv", i);
    return buf;
}

void write_ensemble_dir(const fs::path& dir, const csbp::PathEnsemble& ens,
                        const std::string& config_text) {
    ensure_dir(dir);
    nlohmann::json manifest;
    manifest["config_digest"] = ens.config_digest;
    manifest["seed"] = ens.seed;
    manifest["n_paths"] = ens.paths.size();
    manifest["stream_ids"] = ens.stream_ids;
    manifest["config"] = config_text;
    std::vector<std::string> files;
    for (std::size_t i = 0; i < ens.paths.size(); ++i) {
        files.push_back(path_file_name(i));
        csbp::write_text_file(dir / files.back(), csbp::path_to_csv(ens.paths[i]));
    }
    manifest["files"] = files;
    csbp::write_text_file(dir / "manifest.json", manifest.dump(1) + "\n");
}

csbp::PathEnsemble read_ensemble_dir(const fs::path& dir) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(csbp::read_text_file(dir / "manifest.json"));
    } catch (const nlohmann::json::parse_error& e) {
        throw csbp::FormatError(std::string("manifest: ") + e.what());
    }
    csbp::PathEnsemble ens;
    try {
        ens.config_digest = manifest.at("config_digest").get<std::string>();
        ens.seed = manifest.at("seed").get<std::uint64_t>();
        ens.stream_ids = manifest.at("stream_ids").get<std::vector<std::uint64_t>>();
        for (const auto& f : manifest.at("files"))
            ens.paths.push_back(
                csbp::path_from_csv(csbp::read_text_file(dir / f.get<std::string>())));
    } catch (const nlohmann::json::exception& e) {
        throw csbp::FormatError(std::string("manifest: ") + e.what());
    }
    return ens;
}

int cmd_simulate(const CommonOpts& opts) {
    const csbp::ExperimentConfig cfg = load_config(opts);
    const std::string canonical = csbp::print_config(cfg);
    if (opts.print_config) {
        std::cout << canonical;
        return kExitPass;
    }
    auto sampler = [&cfg](csbp::RngStream& rng) -> csbp::CadlagPath {
        if (cfg.process == "dsbp")
            return csbp::sample_dsbp(cfg.dsbp, static_cast<std::uint64_t>(cfg.x0),
                                     cfg.horizon, rng);
        if (cfg.process == "cp")
            return csbp::sample_compound_poisson(
                cfg.dsbp, static_cast<std::uint64_t>(cfg.x0), cfg.horizon, rng);
        if (cfg.process == "levy")
            return csbp::sample_levy(cfg.triplet, cfg.x0, cfg.horizon, cfg.step, rng);
        return csbp::sample_csbp_sde(cfg.triplet, cfg.x0, cfg.horizon, cfg.step, rng);
    };
    const csbp::PathEnsemble ens = csbp::generate_ensemble(
        cfg.n_paths, cfg.seed, sampler, cfg.threads, csbp::config_digest(cfg));
    const fs::path dir = fs::path(cfg.out_dir) / cfg.experiment_id;
    write_ensemble_dir(dir, ens, canonical);
    std::cout << "wrote " << ens.paths.size() << " paths to " << dir.string() << "\n";
    return kExitPass;
}

int cmd_transform(const CommonOpts& opts, const std::string& input,
                  const std::string& direction) {
    if (direction != "L" && direction != "Linv")
        throw csbp::ConfigError("direction must be L or Linv");
    const csbp::PathEnsemble in = read_ensemble_dir(input);
    csbp::PathEnsemble out = in;
    std::ostringstream roundtrip;
    roundtrip << "path,roundtrip_discrepancy\n";
    for (std::size_t i = 0; i < in.paths.size(); ++i) {
        const csbp::CadlagPath& p = in.paths[i];
        out.paths[i] = (direction == "L") ? csbp::transform(p) : csbp::inverse_transform(p);
        roundtrip << path_file_name(i) << ',';
        if (p.kind == csbp::PathKind::Event && !p.truncated())
            roundtrip << csbp::io_detail::fmt(csbp::roundtrip_check(p));
        else
            roundtrip << '-';
        roundtrip << '\n';
    }
    const fs::path dir = opts.out ? fs::path(*opts.out)
                                  : fs::path(input) / (direction == "L" ? "L" : "Linv");
    write_ensemble_dir(dir, out, "transformed from " + input + " direction " + direction + "\n");
    csbp::write_text_file(dir / "roundtrip.csv", roundtrip.str());
    std::cout << "wrote " << out.paths.size() << " transformed paths to " << dir.string()
              << "\n";
    return kExitPass;
}

std::vector<double> parse_grid(const std::string& csv) {
    std::vector<double> out;
    std::istringstream in(csv);
    std::string cell;
    while (std::getline(in, cell, ','))
        if (!cell.empty()) out.push_back(csbp::io_detail::parse_double(cell));
    if (out.empty()) throw csbp::ConfigError("empty grid: " + csv);
    return out;
}

int cmd_flow(const CommonOpts& opts, const std::string& lambdas_csv,
             const std::string& times_csv, double tol) {
    const csbp::ExperimentConfig cfg = load_config(opts);
    if (opts.print_config) {
        std::cout << csbp::print_config(cfg);
        return kExitPass;
    }
    const csbp::Mechanism m = csbp::mechanism_from_config(cfg);
    const csbp::FlowTable tab =
        csbp::flow_table(m, parse_grid(lambdas_csv), parse_grid(times_csv), tol);
    const fs::path dir = fs::path(cfg.out_dir) / cfg.experiment_id;
    ensure_dir(dir);
    csbp::write_text_file(dir / "flow_table.csv", csbp::flow_table_to_csv(tab));
    std::cout << "wrote flow table to " << (dir / "flow_table.csv").string() << "\n";
    return kExitPass;
}

int cmd_verify(const CommonOpts& opts, const std::string& suite) {
    const csbp::ExperimentConfig cfg = load_config(opts);
    csbp::SuiteReport rep;
    try {
        rep = csbp::run_suite(suite, cfg.seed == 1 && !opts.seed ? csbp::kMasterSeed : cfg.seed,
                              cfg.threads);
    } catch (const std::invalid_argument& e) {
        throw csbp::ConfigError(e.what());
    }
    const fs::path dir = fs::path(cfg.out_dir);
    ensure_dir(dir);
    csbp::write_text_file(dir / (suite + "_report.csv"), rep.to_csv());
    std::cout << rep.to_csv();
    std::cout << "suite " << suite << ": " << (rep.pass() ? "PASS" : "FAIL") << "\n";
    return rep.pass() ? kExitPass : kExitAssert;
}

int cmd_plotdata(const std::string& input, const std::string& output) {
    std::ostringstream out;
    if (fs::is_directory(input)) {
        // ensemble -> (t, mean, q05, q95)
        const csbp::PathEnsemble ens = read_ensemble_dir(input);
        double t_max = 0.0;
        for (const csbp::CadlagPath& p : ens.paths)
            t_max = std::max(t_max, p.truncated() ? *p.horizon : p.last_time());
        if (t_max <= 0.0) t_max = 1.0;
        out << "t,mean,q05,q95\n";
        for (int i = 0; i <= 100; ++i) {
            const double t = t_max * i / 100.0;
            std::vector<double> vs;
            vs.reserve(ens.paths.size());
            for (const csbp::CadlagPath& p : ens.paths)
                vs.push_back(csbp::eval(p, std::min(t, p.domain_end())).get());
            std::sort(vs.begin(), vs.end());
            double sum = 0.0;
            for (double v : vs) sum += v;
            const auto q = [&vs](double a) {
                return vs[std::min(vs.size() - 1,
                                   static_cast<std::size_t>(a * (vs.size() - 1)))];
            };
            out << csbp::io_detail::fmt(t) << ','
                << csbp::io_detail::fmt(sum / vs.size()) << ','
                << csbp::io_detail::fmt(q(0.05)) << ',' << csbp::io_detail::fmt(q(0.95))
                << '\n';
        }
    } else {
        const std::string text = csbp::read_text_file(input);
        if (text.rfind("t,lambda=", 0) == 0) {
            // flow table -> long format
            const csbp::FlowTable tab = csbp::flow_table_from_csv(text);
            out << "t,lambda,u\n";
            for (std::size_t i = 0; i < tab.times.size(); ++i)
                for (std::size_t j = 0; j < tab.lambdas.size(); ++j)
                    out << csbp::io_detail::fmt(tab.times[i]) << ','
                        << csbp::io_detail::fmt(tab.lambdas[j]) << ','
                        << csbp::io_detail::fmt(tab.u[i][j]) << '\n';
        } else if (text.rfind("test-id,", 0) == 0) {
            // report -> series keyed by the numeric suffix of each test id
            out << "test-id,statistic\n";
            std::istringstream in(text);
            std::string line;
            std::getline(in, line);
            while (std::getline(in, line)) {
                const std::size_t c1 = line.find(',');
                const std::size_t c2 = line.find(',', c1 + 1);
                if (c1 == std::string::npos || c2 == std::string::npos) continue;
                out << line.substr(0, c1) << ',' << line.substr(c1 + 1, c2 - c1 - 1)
                    << '\n';
            }
        } else {
            throw csbp::FormatError("plotdata: unrecognized input format");
        }
    }
    csbp::write_text_file(output, out.str());
    std::cout << "wrote " << output << "\n";
    return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"branching-process time-change laboratory"};
    app.require_subcommand(1);

    CommonOpts sim_opts;
    CLI::App* sim = app.add_subcommand("simulate", "sample a path ensemble");
    add_common(sim, sim_opts, true);

    CommonOpts tr_opts;
    std::string tr_input, tr_direction = "L";
    CLI::App* tr = app.add_subcommand("transform", "time-change an ensemble");
    tr->add_option("--input", tr_input, "ensemble directory")->required();
    tr->add_option("--direction", tr_direction, "L or Linv");
    add_common(tr, tr_opts, false);

    CommonOpts flow_opts;
    std::string flow_lambdas = "0.5,1,2,4", flow_times = "0,0.1,0.5,1,2";
    double flow_tol = 1e-10;
    CLI::App* fl = app.add_subcommand("flow", "tabulate the mechanism flow");
    fl->add_option("--lambdas", flow_lambdas, "comma-separated lambda grid");
    fl->add_option("--times", flow_times, "comma-separated time grid");
    fl->add_option("--tol", flow_tol, "solver tolerance");
    add_common(fl, flow_opts, true);

    CommonOpts ver_opts;
    std::string suite;
    CLI::App* ver = app.add_subcommand("verify", "run a verification suite");
    ver->add_option("suite", suite, "suite name")->required();
    add_common(ver, ver_opts, false);

    std::string plot_input, plot_output = "plotdata.csv";
    CLI::App* pl = app.add_subcommand("plotdata", "convert artifacts to plot series");
    pl->add_option("--input", plot_input, "ensemble dir, flow table, or report")->required();
    pl->add_option("--out", plot_output, "output csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitPass : kExitUsage;
    }

    try {
        if (sim->parsed()) return cmd_simulate(sim_opts);
        if (tr->parsed()) return cmd_transform(tr_opts, tr_input, tr_direction);
        if (fl->parsed()) return cmd_flow(flow_opts, flow_lambdas, flow_times, flow_tol);
        if (ver->parsed()) return cmd_verify(ver_opts, suite);
        if (pl->parsed()) return cmd_plotdata(plot_input, plot_output);
    } catch (const csbp::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const csbp::FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitIo;
    } catch (const csbp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::domain_error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitAssert;
    }
    return kExitUsage;
}
