#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "lakelab/cli.hpp"
#include "oracles.hpp"

using namespace lakelab;
namespace fs = std::filesystem;

namespace {

struct Sandbox {
    fs::path root;
    explicit Sandbox(const std::string& name) : root(fs::temp_directory_path() / ("lakelab-cli-" + name)) {
        fs::remove_all(root);
        fs::create_directories(root);
        ::unsetenv("LAKELAB_CACHE");
    }
    ~Sandbox() { fs::remove_all(root); }

    fs::path config(const std::string& text, const std::string& name = "run.toml") const {
        const fs::path p = root / name;
        std::ofstream(p) << text;
        return p;
    }
    int run(std::vector<std::string> args) const {
        args.insert(args.begin(), "--quiet");
        return run_cli(args);
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// data rows (non-comment lines after the header)
std::vector<std::vector<std::string>> rows(const fs::path& p) {
    std::istringstream in(slurp(p));
    std::string line;
    std::vector<std::vector<std::string>> out;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (header) {
            header = false;
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        out.push_back(cells);
    }
    return out;
}

std::string meta(const fs::path& p, const std::string& key) {
    std::istringstream in(slurp(p));
    std::string line;
    const std::string prefix = "# " + key + ": ";
    while (std::getline(in, line))
        if (line.rfind(prefix, 0) == 0) return line.substr(prefix.size());
    return {};
}

}  // namespace

TEST_CASE("cli equilibria") {
    Sandbox sb("eq");
    const auto out = sb.root / "out";
    REQUIRE(sb.run({"equilibria", "--out", out.string()}) == kExitOk);
    const auto r = rows(out / "equilibria.csv");
    REQUIRE(r.size() == 3);
    CHECK(r[0][4] == "saddle");
    CHECK(r[1][4] == "vortex");
    CHECK(r[2][4] == "saddle");

    // default bound: 4 x the locator root. bx = r has no positive root here, so the
    // locator is bx = a + (b+rho)/(2cx), beyond which the steady-state function is positive.
    CHECK(meta(out / "equilibria.csv", "x_max_source") == "default");
    auto loc = [](double x) { return 0.65 * x - 1.0 - 0.68 / (2 * 0.512 * x); };
    const auto roots = oracle::scan_roots(loc, 1e-3, 100.0);
    REQUIRE(!roots.empty());
    CHECK(std::stod(meta(out / "equilibria.csv", "x_max")) ==
          doctest::Approx(4.0 * roots.back()).epsilon(1e-9));
    CHECK(!meta(out / "equilibria.csv", "config_hash").empty());
}

TEST_CASE("cli config errors") {
    Sandbox sb("cfg");
    const auto out = sb.root / "out";
    CHECK(sb.run({"--config", sb.config("[params]\nb = -0.65\n").string(), "equilibria", "--out",
                  out.string()}) == kExitConfig);
    CHECK_FALSE(fs::exists(out));
    CHECK(sb.run({"--config", sb.config("[params]\nrh0 = 0.03\n").string(), "equilibria", "--out",
                  out.string()}) == kExitConfig);
    CHECK(sb.run({"--config", (sb.root / "missing.toml").string(), "equilibria"}) == kExitConfig);
    CHECK(sb.run({"no-such-command"}) == kExitConfig);
    CHECK(sb.run({"hjb", "--out", out.string()}) == kExitConfig);  // sigma = 0
    CHECK_FALSE(fs::exists(out));
}

TEST_CASE("cli hjb cache") {
    Sandbox sb("hjb");
    const auto cfg = sb.config("[params]\nsigma = 0.1\n[grid]\nn = 512\n").string();
    const auto out = sb.root / "out";
    REQUIRE(sb.run({"--config", cfg, "hjb", "--out", out.string()}) == kExitOk);
    const auto first = slurp(out / "hjb.csv");
    std::vector<fs::path> entries;
    for (const auto& e : fs::directory_iterator(out / "cache")) entries.push_back(e.path());
    REQUIRE(entries.size() == 1);
    const auto stamp = fs::last_write_time(entries[0]);

    REQUIRE(sb.run({"--config", cfg, "hjb", "--out", out.string()}) == kExitOk);
    CHECK(slurp(out / "hjb.csv") == first);
    CHECK(fs::last_write_time(entries[0]) == stamp);  // read, not rewritten

    // corruption: recompute with a warning, same bytes
    std::ofstream(entries[0]) << "lakelab-value-function 1\nkey nonsense\n";
    REQUIRE(sb.run({"--config", cfg, "hjb", "--out", out.string()}) == kExitOk);
    CHECK(slurp(out / "hjb.csv") == first);

    // LAKELAB_CACHE overrides; an unusable cache location is a cache failure
    const auto blocker = sb.root / "file";
    std::ofstream(blocker) << "x";
    ::setenv("LAKELAB_CACHE", (blocker / "sub").string().c_str(), 1);
    CHECK(sb.run({"--config", cfg, "hjb", "--out", out.string()}) == kExitCache);
    ::unsetenv("LAKELAB_CACHE");
}

TEST_CASE("cli numerical failure") {
    Sandbox sb("num");
    const auto cfg =
        sb.config("[params]\nsigma = 0.1\n[grid]\nn = 512\n[tolerances]\nhjb_max_iter = 1\n").string();
    CHECK(sb.run({"--config", cfg, "hjb", "--out", (sb.root / "out").string()}) == kExitNumerical);
}

TEST_CASE("cli deterministic simulation straddling the Skiba point") {
    Sandbox sb("sim");
    const auto out = sb.root / "out";
    REQUIRE(sb.run({"simulate", "--out", out.string()}) == kExitOk);
    const auto a = rows(out / "path_0.csv");
    const auto b = rows(out / "path_1.csv");
    REQUIRE(!a.empty());
    REQUIRE(!b.empty());
    const double xa = std::stod(a.back()[1]), xb = std::stod(b.back()[1]);
    CHECK(std::abs(xa - 0.450695849760) <= 1e-4);
    CHECK(std::abs(xb - 1.414124823811) <= 1e-4);
    CHECK(fs::exists(out / "paths.csv"));
}

TEST_CASE("cli arrhenius ladder and seed override") {
    Sandbox sb("arr");
    const auto out = sb.root / "out";
    REQUIRE(sb.run({"arrhenius", "--out", out.string()}) == kExitOk);
    const auto r = rows(out / "ladder.csv");
    REQUIRE(r.size() == 4);
    for (std::size_t k = 1; k < r.size(); ++k) CHECK(std::stod(r[k][5]) < std::stod(r[k - 1][5]));
    const double dF0 = std::stod(meta(out / "ladder.csv", "delta_F0"));
    CHECK(std::stod(r.back()[5]) > dF0);

    const auto cfg = sb.config("[params]\nsigma = 0.3\n[grid]\nn = 1024\n[mc]\nn_paths = 100\n").string();
    REQUIRE(sb.run({"--config", cfg, "--seed", "9", "exit-time", "--out", (sb.root / "e1").string()}) == kExitOk);
    REQUIRE(sb.run({"--config", cfg, "--seed", "9", "exit-time", "--out", (sb.root / "e2").string()}) == kExitOk);
    CHECK(slurp(sb.root / "e1" / "exit_time.csv") == slurp(sb.root / "e2" / "exit_time.csv"));
    CHECK(slurp(sb.root / "e1" / "exit_time.csv").find("mc.seed = 9") != std::string::npos);
}
