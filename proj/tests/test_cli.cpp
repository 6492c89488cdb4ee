#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "epical/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = epical::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::size_t lines(const fs::path& p) {
    std::ifstream is(p);
    std::size_t n = 0;
    for (std::string line; std::getline(is, line);) ++n;
    return n;
}

struct Workspace {
    fs::path root;
    explicit Workspace(const std::string& name) : root(fs::temp_directory_path() / ("epical_cli_" + name)) {
        fs::remove_all(root);
        fs::create_directories(root);
    }
    ~Workspace() { fs::remove_all(root); }
    std::string at(const std::string& rel) const { return (root / rel).string(); }
};

// Short synthetic fit shared by several cases.
void quick_fit(const Workspace& ws, const std::vector<std::string>& extra = {}) {
    REQUIRE(run({"simulate", "--seed", "2", "--out", ws.at("sim")}).code == 0);
    std::vector<std::string> args{"fit",         "--data",       ws.at("sim/train.csv"), "--mean-model", "test",
                                  "--shift-days", "0",           "--burn-in",            "100",          "--samples",
                                  "100",          "--out",       ws.at("fit")};
    args.insert(args.end(), extra.begin(), extra.end());
    const Result r = run(args);
    INFO(r.err);
    REQUIRE(r.code == 0);
}

}  // namespace

TEST_CASE("help exits 0 and documents flags") {
    const Result top = run({"--help"});
    CHECK(top.code == 0);
    for (const char* cmd : {"simulate", "fit", "predict", "sensitivity", "report"}) {
        CHECK(top.out.find(cmd) != std::string::npos);
    }
    const Result fit = run({"fit", "--help"});
    CHECK(fit.code == 0);
    for (const char* flag : {"--config", "--seed", "--burn-in", "--samples", "--thin", "--shift-days",
                             "--independent-gp", "--jobs", "--out", "--mean-model"}) {
        CHECK(fit.out.find(flag) != std::string::npos);
    }
    CHECK(run({"predict", "--help"}).out.find("--horizon") != std::string::npos);
    CHECK(run({"sensitivity", "--help"}).out.find("--pairs") != std::string::npos);
}

TEST_CASE("usage errors exit 1") {
    CHECK(run({}).code == 1);
    CHECK(run({"fit", "--bogus"}).code == 1);
    CHECK(run({"predict", "--future-covariates", "x.csv"}).code == 1);
    CHECK(run({"fit", "--out", "x", "--mean-model", "seir"}).code == 1);
}

TEST_CASE("simulate writes three files and repeats byte for byte") {
    const Workspace ws("simulate");
    REQUIRE(run({"simulate", "--seed", "7", "--out", ws.at("a")}).code == 0);
    REQUIRE(run({"simulate", "--seed", "7", "--out", ws.at("b/nested")}).code == 0);
    CHECK(lines(ws.root / "a/train.csv") == 31);
    CHECK(lines(ws.root / "a/test.csv") == 11);
    CHECK(lines(ws.root / "a/truth.csv") == 41);
    for (const char* f : {"train.csv", "test.csv", "truth.csv"}) {
        CHECK(slurp(ws.root / "a" / f) == slurp(ws.root / "b/nested" / f));
    }
    std::ofstream(ws.root / "blocker") << "file";
    const Result r = run({"simulate", "--out", ws.at("blocker/sub")});
    CHECK(r.code == 2);
    CHECK(r.err.find("blocker") != std::string::npos);
}

TEST_CASE("fit, predict, sensitivity and report on the synthetic study") {
    const Workspace ws("pipeline");
    quick_fit(ws);
    const std::string summary = slurp(ws.root / "fit/fit_summary.txt");
    CHECK(summary.find("beta_gamma: 0.") != std::string::npos);
    CHECK(lines(ws.root / "fit/chain.csv") == 51);
    CHECK(lines(ws.root / "fit/fitted.csv") == 31);

    const Result p = run({"predict", "--fit-dir", ws.at("fit"), "--future-covariates", ws.at("sim/test.csv"),
                          "--horizon", "10", "--draws"});
    INFO(p.err);
    REQUIRE(p.code == 0);
    CHECK(lines(ws.root / "fit/forecast.csv") == 11);
    CHECK(slurp(ws.root / "fit/forecast.csv").find(",observed") != std::string::npos);
    CHECK(lines(ws.root / "fit/forecast_draws.csv") == 51);
    REQUIRE(run({"predict", "--fit-dir", ws.at("fit"), "--future-covariates", ws.at("sim/test.csv"), "--horizon",
                 "1", "--out", ws.at("one")})
                .code == 0);
    CHECK(lines(ws.root / "one/forecast.csv") == 2);
    CHECK(run({"predict", "--fit-dir", ws.at("fit"), "--future-covariates", ws.at("sim/test.csv"), "--horizon", "11"})
              .code == 2);
    CHECK(run({"predict", "--fit-dir", ws.at("fit"), "--future-covariates", ws.at("nope.csv")}).code == 2);

    const Result s = run({"sensitivity", "--fit-dir", ws.at("fit"), "--mc-samples", "200", "--max-draws", "10"});
    INFO(s.err);
    REQUIRE(s.code == 0);
    CHECK(fs::exists(ws.root / "fit/sensitivity/main_effect_x.csv"));
    CHECK(lines(ws.root / "fit/sensitivity/m0.csv") == 11);

    const Result rep = run({"report", "--fit-dir", ws.at("fit")});
    REQUIRE(rep.code == 0);
    const std::string report = slurp(ws.root / "fit/report.txt");
    CHECK(report.find("overall R0") != std::string::npos);
    CHECK(report.find("95% interval") != std::string::npos);
    CHECK(slurp(ws.root / "fit/report_index.json").find("\"overall_r0\"") != std::string::npos);

    fs::remove(ws.root / "fit/chain.csv");
    const Result missing = run({"report", "--fit-dir", ws.at("fit")});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("chain.csv") != std::string::npos);
}

TEST_CASE("independent prior records rho = 0") {
    const Workspace ws("independent");
    quick_fit(ws, {"--independent-gp"});
    std::ifstream is(ws.root / "fit/chain.csv");
    std::string header;
    std::getline(is, header);
    std::size_t col = 0;
    {
        std::stringstream hs(header);
        std::string name;
        for (std::size_t k = 0; std::getline(hs, name, ','); ++k)
            if (name == "rho") col = k;
    }
    REQUIRE(col > 0);
    for (std::string line; std::getline(is, line);) {
        std::stringstream ls(line);
        std::string cell;
        for (std::size_t k = 0; k <= col; ++k) std::getline(ls, cell, ',');
        CHECK(std::stod(cell) == 0.0);
    }
    CHECK(slurp(ws.root / "fit/fit_summary.txt").find("rho: not sampled") != std::string::npos);
}

TEST_CASE("seeded fits are byte identical") {
    const Workspace a("repeat_a"), b("repeat_b");
    quick_fit(a);
    quick_fit(b);
    CHECK(slurp(a.root / "fit/chain.csv") == slurp(b.root / "fit/chain.csv"));
    CHECK(slurp(a.root / "fit/fitted.csv") == slurp(b.root / "fit/fitted.csv"));
}

TEST_CASE("config files, environment seed and precedence") {
    const Workspace ws("config");
    std::ofstream(ws.root / "run.cfg") << "seed = 11\ntotal = 30\ntrain = 20\n";
    REQUIRE(run({"simulate", "--config", ws.at("run.cfg"), "--out", ws.at("cfg")}).code == 0);
    REQUIRE(run({"simulate", "--seed", "11", "--total", "30", "--train", "20", "--out", ws.at("flags")}).code == 0);
    CHECK(slurp(ws.root / "cfg/train.csv") == slurp(ws.root / "flags/train.csv"));
    CHECK(lines(ws.root / "cfg/test.csv") == 11);

    // The command line wins over the file.
    REQUIRE(run({"simulate", "--config", ws.at("run.cfg"), "--train", "25", "--out", ws.at("override")}).code == 0);
    CHECK(lines(ws.root / "override/train.csv") == 26);

    std::ofstream(ws.root / "bad.cfg") << "no_such_flag = 1\n";
    CHECK(run({"simulate", "--config", ws.at("bad.cfg"), "--out", ws.at("bad")}).code == 1);
    CHECK(run({"simulate", "--config", ws.at("absent.cfg"), "--out", ws.at("bad")}).code == 1);

    ::setenv("EPICAL_SEED", "11", 1);
    const int env_code = run({"simulate", "--total", "30", "--train", "20", "--out", ws.at("env")}).code;
    const int explicit_code = run({"simulate", "--seed", "3", "--total", "30", "--train", "20", "--out", ws.at("env3")}).code;
    ::unsetenv("EPICAL_SEED");
    REQUIRE(env_code == 0);
    REQUIRE(explicit_code == 0);
    CHECK(slurp(ws.root / "env/train.csv") == slurp(ws.root / "flags/train.csv"));
    CHECK(slurp(ws.root / "env3/train.csv") != slurp(ws.root / "flags/train.csv"));
}

TEST_CASE("data errors exit 2") {
    const Workspace ws("data_errors");
    std::ofstream(ws.root / "cases.csv") << "date,count\n2020-01-01,3\n2020-01-03,4\n";
    std::ofstream(ws.root / "cov.csv") << "date,t\n2020-01-01,1\n2020-01-02,2\n2020-01-03,3\n";
    const Result gap = run({"fit", "--cases", ws.at("cases.csv"), "--covariates", ws.at("cov.csv"), "--population",
                            "1000", "--out", ws.at("out")});
    CHECK(gap.code == 2);
    const Result shift = run({"fit", "--cases", EPICAL_FIXTURE_DIR "/cases.csv", "--covariates",
                              EPICAL_FIXTURE_DIR "/covariates.csv", "--population", "500000", "--shift-days", "500",
                              "--out", ws.at("out")});
    CHECK(shift.code == 2);
    const Result tiny = run({"fit", "--cases", EPICAL_FIXTURE_DIR "/cases.csv", "--covariates",
                             EPICAL_FIXTURE_DIR "/covariates.csv", "--population", "3", "--out", ws.at("out")});
    CHECK(tiny.code == 2);
}

TEST_CASE("test mean model needs no population") {
    const Workspace ws("no_population");
    REQUIRE(run({"simulate", "--seed", "1", "--out", ws.at("sim")}).code == 0);
    const Result r = run({"fit", "--data", ws.at("sim/train.csv"), "--mean-model", "test", "--shift-days", "0",
                          "--burn-in", "50", "--samples", "50", "--out", ws.at("fit")});
    INFO(r.err);
    CHECK(r.code == 0);
}

TEST_CASE("several cities fit concurrently into separate directories") {
    const Workspace ws("cities");
    std::ofstream(ws.root / "cities.csv") << "city,cases,covariates,population\n"
                                          << "alpha," EPICAL_FIXTURE_DIR "/cases.csv," EPICAL_FIXTURE_DIR
                                             "/covariates.csv,500000\n"
                                          << "beta," EPICAL_FIXTURE_DIR "/cases.csv," EPICAL_FIXTURE_DIR
                                             "/covariates.csv,600000\n";
    const Result r = run({"fit", "--cities", ws.at("cities.csv"), "--jobs", "2", "--burn-in", "30", "--samples", "30",
                          "--out", ws.at("fits")});
    INFO(r.err);
    REQUIRE(r.code == 0);
    CHECK(fs::exists(ws.root / "fits/alpha/chain.csv"));
    CHECK(fs::exists(ws.root / "fits/beta/chain.csv"));
    CHECK(slurp(ws.root / "fits/alpha/fit.cfg").find("population = 500000") != std::string::npos);
}
