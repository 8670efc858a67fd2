#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#ifdef __unix__
#include <sys/wait.h>
#endif

#include "csbp/config.hpp"
#include "csbp/path_io.hpp"

using namespace csbp;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
#ifndef CSBP_LAB_BIN
    FAIL("CSBP_LAB_BIN not defined");
    return -1;
#else
    const std::string cmd = std::string(CSBP_LAB_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
#ifdef __unix__
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    return -1;
#else
    return status;
#endif
#endif
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("csbp_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

const char* kDsbpConfig =
    "[run]\n"
    "process = dsbp\n"
    "x0 = 5\n"
    "horizon = 3\n"
    "n_paths = 8\n"
    "seed = 4\n"
    "experiment_id = demo\n"
    "\n[dsbp]\n"
    "mu0 = 1.5\n"
    "births = [[2, 1.0]]\n";

}  // namespace

TEST_CASE("path csv round trip for event, grid, and truncated paths") {
    const CadlagPath e = CadlagPath::event({0.0, 1.0, 3.0},
                                           {ExtReal(2.0), ExtReal::infinity(),
                                            ExtReal::infinity()},
                                           ExtReal::infinity());
    // infinity is absorbing, so keep a two-point version instead
    const CadlagPath e2 = CadlagPath::event({0.0, 1.0},
                                            {ExtReal(2.0), ExtReal::infinity()},
                                            ExtReal::infinity());
    const std::string text = path_to_csv(e2);
    CHECK(text.rfind("t,value\n", 0) == 0);
    CHECK(text.find("inf") != std::string::npos);
    CHECK(text.find("# terminal=inf kind=event horizon=none") != std::string::npos);
    const CadlagPath back = path_from_csv(text);
    CHECK(back.kind == PathKind::Event);
    CHECK(back.times == e2.times);
    CHECK(back.values[1].is_infinite());

    const CadlagPath g = CadlagPath::grid(0.25, {ExtReal(1.0), ExtReal(2.0), ExtReal(3.0)},
                                          ExtReal(0.0), 0.5);
    const CadlagPath gb = path_from_csv(path_to_csv(g));
    CHECK(gb.kind == PathKind::Grid);
    CHECK(gb.step == doctest::Approx(0.25));
    REQUIRE(gb.truncated());
    CHECK(*gb.horizon == doctest::Approx(0.5));
    CHECK(gb.values[2].get() == 3.0);
    (void)e;
}

TEST_CASE("path csv rejects malformed input") {
    CHECK_THROWS_AS(path_from_csv("x,y\n0,1\n# terminal=0 kind=event horizon=none\n"),
                    FormatError);
    CHECK_THROWS_AS(path_from_csv("t,value\n0,1\n"), FormatError);  // no trailer
    CHECK_THROWS_AS(path_from_csv("t,value\n0,1\n# terminal=0 kind=banana horizon=none\n"),
                    FormatError);
    CHECK_THROWS_AS(path_from_csv("t,value\n0,abc\n# terminal=0 kind=event horizon=none\n"),
                    FormatError);
    // structurally invalid path: absorbed then revived
    CHECK_THROWS_AS(
        path_from_csv("t,value\n0,0\n1,2\n# terminal=0 kind=event horizon=none\n"),
        std::invalid_argument);
}

TEST_CASE("ensemble json round trip") {
    PathEnsemble ens;
    ens.config_digest = "abc";
    ens.seed = 9;
    ens.stream_ids = {0, 1};
    ens.paths.push_back(CadlagPath::event({0.0, 1.0}, {ExtReal(1.0), ExtReal(0.0)},
                                          ExtReal(0.0)));
    ens.paths.push_back(CadlagPath::grid(0.5, {ExtReal(2.0), ExtReal(1.0)},
                                         ExtReal(0.0), 0.5));
    const PathEnsemble back = ensemble_from_json(ensemble_to_json(ens));
    CHECK(back.config_digest == "abc");
    CHECK(back.seed == 9);
    REQUIRE(back.paths.size() == 2);
    CHECK(back.paths[1].kind == PathKind::Grid);
    CHECK_THROWS_AS(ensemble_from_json("{not json"), FormatError);
}

TEST_CASE("flow table csv round trip") {
    FlowTable tab;
    tab.lambdas = {0.5, 2.0};
    tab.times = {0.0, 1.0};
    tab.u = {{0.5, 2.0}, {0.25, 0.4}};
    const FlowTable back = flow_table_from_csv(flow_table_to_csv(tab));
    CHECK(back.lambdas == tab.lambdas);
    CHECK(back.times == tab.times);
    CHECK(back.u == tab.u);
    CHECK_THROWS_AS(flow_table_from_csv("bogus\n"), FormatError);
}

TEST_CASE("config parsing, canonical printing, and digest") {
    const ExperimentConfig cfg = parse_config(kDsbpConfig);
    CHECK(cfg.process == "dsbp");
    CHECK(cfg.x0 == 5.0);
    CHECK(cfg.dsbp.mu0 == 1.5);
    REQUIRE(cfg.dsbp.births.size() == 1);
    CHECK(cfg.dsbp.births[0].first == 2);
    // printing is canonical: reparse-then-print is a fixed point
    const std::string canon = print_config(cfg);
    CHECK(print_config(parse_config(canon)) == canon);
    CHECK(config_digest(cfg) == fnv1a_digest(canon));
    CHECK(config_digest(cfg).size() == 16);
}

TEST_CASE("config rejects unknown keys and bad values") {
    CHECK_THROWS_WITH_AS(parse_config("[run]\nbogus = 1\n"),
                         doctest::Contains("bogus"), ConfigError);
    CHECK_THROWS_AS(parse_config("[nope]\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("orphan = 1\n"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("[dsbp]\nbirths = [[1, 0.5]]\n"),
                         doctest::Contains("mu_1"), ConfigError);
    CHECK_THROWS_AS(parse_config("[run]\nprocess = magic\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[run]\nhorizon = -1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[run]\nn_paths = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[triplet]\natoms = [[1]]\n"), ConfigError);
}

TEST_CASE("mechanism from config") {
    ExperimentConfig cfg = parse_config("[triplet]\ntag = quadratic\nc = 0.5\n");
    const Mechanism m = mechanism_from_config(cfg);
    CHECK(psi(m, 2.0) == doctest::Approx(2.0));
    cfg = parse_config("[triplet]\nsigma = 1\nkilling = 0.25\n");
    const Mechanism t = mechanism_from_config(cfg);
    CHECK(psi(t, 0.0) == doctest::Approx(-0.25));
    CHECK_THROWS_AS(
        mechanism_from_config(parse_config("[triplet]\ntag = banana\n")), ConfigError);
}

TEST_CASE("cli: simulate writes a reproducible ensemble") {
    const fs::path dir = fresh_dir("sim");
    write_text_file(dir / "cfg.ini", kDsbpConfig);
    const std::string cfg_arg = " --config " + (dir / "cfg.ini").string();
    CHECK(run_cli("simulate" + cfg_arg + " --out " + (dir / "a").string()) == 0);
    CHECK(run_cli("simulate" + cfg_arg + " --out " + (dir / "b").string()) == 0);
    REQUIRE(fs::exists(dir / "a" / "demo" / "manifest.json"));
    for (int i = 0; i < 8; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "path_%04d.csv", i);
        const std::string pa = read_text_file(dir / "a" / "demo" / name);
        const std::string pb = read_text_file(dir / "b" / "demo" / name);
        CHECK(pa == pb);  // byte-identical reruns
        CHECK_NOTHROW(path_from_csv(pa));
    }
    // a different seed changes the sample
    CHECK(run_cli("simulate" + cfg_arg + " --seed 5 --out " + (dir / "c").string()) == 0);
    CHECK(read_text_file(dir / "a" / "demo" / "path_0000.csv") !=
          read_text_file(dir / "c" / "demo" / "path_0000.csv"));
}

TEST_CASE("cli: print-config echoes the canonical form") {
    const fs::path dir = fresh_dir("pc");
    write_text_file(dir / "cfg.ini", kDsbpConfig);
    const std::string cmd = std::string(CSBP_LAB_BIN) + " simulate --config " +
                            (dir / "cfg.ini").string() + " --print-config > " +
                            (dir / "echo.ini").string();
    REQUIRE(std::system(cmd.c_str()) == 0);
    const ExperimentConfig cfg = parse_config(read_text_file(dir / "echo.ini"));
    CHECK(cfg.x0 == 5.0);
    CHECK(cfg.dsbp.mu0 == 1.5);
    CHECK(print_config(cfg) == read_text_file(dir / "echo.ini"));
}

TEST_CASE("cli: transform inverts the ensemble and reports round trips") {
    const fs::path dir = fresh_dir("tr");
    write_text_file(dir / "cfg.ini", kDsbpConfig);
    REQUIRE(run_cli("simulate --config " + (dir / "cfg.ini").string() + " --out " +
                    dir.string()) == 0);
    const fs::path ens_dir = dir / "demo";
    CHECK(run_cli("transform --input " + ens_dir.string() + " --direction L") == 0);
    REQUIRE(fs::exists(ens_dir / "L" / "manifest.json"));
    const std::string rt = read_text_file(ens_dir / "L" / "roundtrip.csv");
    CHECK(rt.rfind("path,roundtrip_discrepancy\n", 0) == 0);
    CHECK(run_cli("transform --input " + ens_dir.string() + " --direction bad") == 2);
}

TEST_CASE("cli: flow writes a table including t = 0") {
    const fs::path dir = fresh_dir("flow");
    write_text_file(dir / "cfg.ini", "[triplet]\ntag = quadratic\nc = 1\n");
    CHECK(run_cli("flow --config " + (dir / "cfg.ini").string() +
                  " --lambdas 0.5,1 --times 0,1 --out " + dir.string()) == 0);
    const FlowTable tab =
        flow_table_from_csv(read_text_file(dir / "experiment" / "flow_table.csv"));
    REQUIRE(tab.times.size() == 2);
    CHECK(tab.u[0][0] == doctest::Approx(0.5));            // t = 0 returns lambda
    CHECK(tab.u[1][1] == doctest::Approx(0.5).epsilon(1e-8));  // 1/(1+1)
}

TEST_CASE("cli: verify runs a cheap suite and writes its report") {
    const fs::path dir = fresh_dir("ver");
    CHECK(run_cli("verify roundtrip --out " + dir.string()) == 0);
    const std::string rep = read_text_file(dir / "roundtrip_report.csv");
    CHECK(rep.rfind("test-id,statistic,p,pass,seed-block\n", 0) == 0);
    CHECK(rep.find("roundtrip_max_discrepancy") != std::string::npos);
    CHECK(rep.find(",pass,") != std::string::npos);
    CHECK(run_cli("verify no_such_suite --out " + dir.string()) == 2);
}

TEST_CASE("cli: plotdata summarizes ensembles, tables, and reports") {
    const fs::path dir = fresh_dir("plot");
    write_text_file(dir / "cfg.ini", kDsbpConfig);
    REQUIRE(run_cli("simulate --config " + (dir / "cfg.ini").string() + " --out " +
                    dir.string()) == 0);
    CHECK(run_cli("plotdata --input " + (dir / "demo").string() + " --out " +
                  (dir / "series.csv").string()) == 0);
    const std::string series = read_text_file(dir / "series.csv");
    CHECK(series.rfind("t,mean,q05,q95\n", 0) == 0);

    write_text_file(dir / "cfg2.ini", "[triplet]\ntag = quadratic\nc = 1\n");
    REQUIRE(run_cli("flow --config " + (dir / "cfg2.ini").string() +
                    " --lambdas 1 --times 0,1 --out " + dir.string()) == 0);
    CHECK(run_cli("plotdata --input " + (dir / "experiment" / "flow_table.csv").string() +
                  " --out " + (dir / "long.csv").string()) == 0);
    CHECK(read_text_file(dir / "long.csv").rfind("t,lambda,u\n", 0) == 0);

    CHECK(run_cli("plotdata --input " + (dir / "cfg.ini").string() + " --out " +
                  (dir / "x.csv").string()) == 3);  // unrecognized format
}

TEST_CASE("cli: exit codes for usage and io failures") {
    CHECK(run_cli("simulate") == 2);                        // missing required --config
    CHECK(run_cli("simulate --config /no/such/file") == 3); // unreadable config
    CHECK(run_cli("bogus_subcommand") == 2);
    CHECK(run_cli("") == 2);                                // subcommand required
    const fs::path dir = fresh_dir("badcfg");
    write_text_file(dir / "bad.ini", "[run]\nbogus = 1\n");
    CHECK(run_cli("simulate --config " + (dir / "bad.ini").string()) == 2);
}
