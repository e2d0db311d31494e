#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "doctest.h"
#include "eigendesign/cli.hpp"
#include "eigendesign/mesh.hpp"

using namespace eigendesign;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    Run r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("eigendesign_cli_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> v;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) v.push_back(l);
    return v;
}

}  // namespace

TEST_CASE("limit prints the closed-form 1D eigenvalue") {
    const auto dir = scratch("limit");
    const Run r = run({"limit", "--dim", "1", "--beta", "1", "--out", dir.string(), "--plot"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("mu=2.4674011") != std::string::npos);
    CHECK(r.out.find("Gamma=0\n") != std::string::npos);
    CHECK(r.out.find("residual.technical=") != std::string::npos);
    const auto csv = lines(slurp(dir / "results.csv"));
    REQUIRE(csv.size() == 2);
    CHECK(csv[0].rfind("dim,beta,mass,mu,", 0) == 0);
    CHECK(fs::exists(dir / "meta.txt"));
    CHECK(fs::exists(dir / "plot.gp"));
}

TEST_CASE("optimize on the unit interval returns an end interval") {
    const auto dir = scratch("optimize");
    const Run r = run({"optimize", "--shape", "interval", "--len", "1", "--beta", "1", "--delta", "0.1", "--out",
                       dir.string(), "--threads", "2"});
    REQUIRE(r.code == 0);
    const auto csv = lines(slurp(dir / "results.csv"));
    REQUIRE(csv.size() == 2);
    CHECK(csv[0] == "lambda,component,measure,x_min,x_max,y_min,y_max");
    const std::regex end_interval(R"(^[0-9.e+-]+,0,0\.1[0-9]*,(0,0\.1[0-9]*|0\.9[0-9]*,1),0,0$)");
    CHECK(std::regex_match(csv[1], end_interval));
    CHECK((r.out.find("D=(0,0.1") != std::string::npos || r.out.find("D=(0.9") != std::string::npos));
    for (const char* f : {"runs.csv", "design.csv", "profile.csv", "meta.txt"}) CHECK(fs::exists(dir / f));
}

TEST_CASE("identical configuration gives byte-identical results") {
    const auto a = scratch("det_a"), b = scratch("det_b");
    const std::vector<std::string> base{"optimize", "--shape", "rectangle", "--width", "1", "--height", "1",
                                        "--beta", "1", "--delta", "0.05", "--h", "0.05", "--seeds", "random:4"};
    auto args_a = base, args_b = base;
    args_a.insert(args_a.end(), {"--out", a.string(), "--threads", "1"});
    args_b.insert(args_b.end(), {"--out", b.string(), "--threads", "3"});
    REQUIRE(run(args_a).code == 0);
    REQUIRE(run(args_b).code == 0);
    CHECK(slurp(a / "results.csv") == slurp(b / "results.csv"));
    CHECK(slurp(a / "runs.csv") == slurp(b / "runs.csv"));
    CHECK(slurp(a / "design.csv") == slurp(b / "design.csv"));
}

TEST_CASE("meta.txt reproduces the run and command-line flags win over the file") {
    const auto a = scratch("meta_a"), b = scratch("meta_b"), c = scratch("meta_c");
    REQUIRE(run({"sweep", "--shape", "interval", "--deltas", "0.1,0.05", "--out", a.string()}).code == 0);
    const std::string meta = slurp(a / "meta.txt");
    CHECK(meta.find("--h-factor 0.083333333333333329") != std::string::npos);
    CHECK(meta.find("--rng-seed 42") != std::string::npos);
    REQUIRE(run({"sweep", "--config", (a / "meta.txt").string(), "--out", b.string()}).code == 0);
    CHECK(slurp(a / "results.csv") == slurp(b / "results.csv"));

    REQUIRE(run({"sweep", "--config", (a / "meta.txt").string(), "--out", c.string(), "--beta", "2"}).code == 0);
    CHECK(slurp(c / "meta.txt").find("--beta 2\n") != std::string::npos);
    CHECK(slurp(a / "results.csv") != slurp(c / "results.csv"));
}

TEST_CASE("sweep writes one row per delta, largest first") {
    const auto dir = scratch("sweep");
    const Run r = run({"sweep", "--shape", "disk", "--radius", "1", "--beta", "1", "--deltas", "0.1,0.2",
                       "--h-factor", "0.2", "--out", dir.string(), "--plot"});
    REQUIRE(r.code == 0);
    const auto csv = lines(slurp(dir / "results.csv"));
    REQUIRE(csv.size() == 3);
    CHECK(csv[0].rfind("delta,h,nodes,od_value,rescaled,predicted_bound,", 0) == 0);
    CHECK(csv[1].rfind("0.20000000000000001,", 0) == 0);
    CHECK(csv[2].rfind("0.10000000000000001,", 0) == 0);
    CHECK(lines(slurp(dir / "decay.csv")).size() > 2);
    // The plot script only refers to CSV files that were written.
    const std::string gp = slurp(dir / "plot.gp");
    std::smatch m;
    for (auto it = gp.cbegin(); std::regex_search(it, gp.cend(), m, std::regex(R"('([^']+\.csv)')")); it = m.suffix().first)
        CHECK(fs::exists(dir / m[1].str()));
}

TEST_CASE("solve accepts an imported mesh") {
    const auto dir = scratch("solve");
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "line.mesh");
        f << export_mesh(generate_mesh(Shape::interval(1.0), 0.02).mesh);
    }
    const Run r = run({"solve", "--mesh-file", (dir / "line.mesh").string(), "--delta", "0.2", "--center", "0",
                       "--out", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(lines(slurp(dir / "profile.csv")).size() == 52);
}

TEST_CASE("exit status: usage errors 1, solver failures 2") {
    const auto dir = scratch("errors");
    CHECK(run({}).code == exit_usage);
    CHECK(run({"frobnicate"}).code == exit_usage);
    CHECK(run({"optimize", "--delta", "0.1", "--bogus", "1"}).code == exit_usage);
    CHECK(run({"optimize"}).code == exit_usage);
    CHECK(run({"optimize", "--delta", "0.9", "--out", dir.string()}).code == exit_usage);
    CHECK(run({"optimize", "--shape", "interval", "--radius", "2", "--delta", "0.1"}).code == exit_usage);
    CHECK(run({"optimize", "--delta", "0.1", "--seeds", "lucky"}).code == exit_usage);
    CHECK(run({"optimize", "--delta", "0.1", "--h", "0.01", "--h-factor", "0.1"}).code == exit_usage);
    CHECK(run({"solve", "--mesh-file", "/nonexistent/mesh", "--delta", "0.1"}).code == exit_usage);
    const Run bad = run({"limit", "--dim", "0"});
    CHECK(bad.code == exit_usage);
    CHECK(bad.err.find("radial_limit") != std::string::npos);

    // Forced corrected quadrature on a coarse mesh loses positivity.
    const Run solver = run({"solve", "--shape", "interval", "--h", "0.125", "--beta", "10", "--delta", "0.125",
                            "--mass-kind", "corrected", "--center", "0.0625", "--out", dir.string()});
    CHECK(solver.code == exit_solver);
    CHECK(!fs::exists(dir / "results.csv"));

    CHECK(run({"--help"}).code == exit_ok);
}
