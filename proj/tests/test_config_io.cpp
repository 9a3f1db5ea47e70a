#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "lakelab/config.hpp"
#include "lakelab/error.hpp"
#include "lakelab/io.hpp"
#include "lakelab/pontryagin.hpp"

using namespace lakelab;
namespace fs = std::filesystem;

TEST_CASE("config parsing") {
    const auto doc = parse_config_text(
        "# comment\n"
        "top = 1\n"
        "[params]\n"
        "b = 0.7   # trailing\n"
        "name = \"x # not a comment\"\n"
        "flag = true\n"
        "list = [0.3, 0.2, 1e-1]\n");
    CHECK(std::get<double>(doc.at("").at("top")) == 1.0);
    CHECK(std::get<double>(doc.at("params").at("b")) == 0.7);
    CHECK(std::get<std::string>(doc.at("params").at("name")) == "x # not a comment");
    CHECK(std::get<bool>(doc.at("params").at("flag")));
    CHECK(std::get<std::vector<double>>(doc.at("params").at("list")) == std::vector<double>{0.3, 0.2, 0.1});

    CHECK_THROWS_AS(parse_config_text("[params]\nb = 1\nb = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("b = \n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[params\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("b = [1, \"a\"]\n"), ConfigError);
}

TEST_CASE("run config validation") {
    const auto cfg = load_config_text(
        "[params]\nb = 0.6\nsigma = 0.1\n[grid]\nx_max = 25\nn = 2048\n[mc]\nseed = 7\n"
        "[ladder]\nsigmas = [0.2, 0.1]\n[output]\ndir = \"o\"\n");
    CHECK(cfg.params.b == 0.6);
    CHECK(cfg.params.sigma == 0.1);
    CHECK(cfg.x_max.value() == 25.0);
    CHECK(cfg.n == 2048);
    CHECK(cfg.seed == 7);
    CHECK(cfg.ladder == std::vector<double>{0.2, 0.1});
    CHECK(cfg.output_dir == "o");

    const auto def = load_config_text("");
    CHECK(def.params.b == 0.65);
    CHECK_FALSE(def.x_max.has_value());
    CHECK(def.canonical() == load_config_text("").canonical());
    CHECK(def.canonical() != cfg.canonical());

    CHECK_THROWS_AS(load_config_text("[params]\nbeta = 1\n"), ConfigError);
    CHECK_THROWS_AS(load_config_text("[tolerance]\nhjb_tol = 1e-9\n"), ConfigError);
    CHECK_THROWS_AS(load_config_text("[params]\nb = -0.65\n"), ConfigError);
    CHECK_THROWS_AS(load_config_text("[params]\nb = \"big\"\n"), ConfigError);
    CHECK_THROWS_AS(load_config_text("[grid]\nn = 10\n"), ConfigError);
    CHECK_THROWS_AS(load_config_text("[grid]\nn = 100.5\n"), ConfigError);
    CHECK_THROWS_AS(load_config_text("[curve]\nname = \"logistic\"\n"), ConfigError);
    CHECK_THROWS_AS(load_config_text("[ladder]\nsigmas = [0.1, 0.2]\n"), ConfigError);
    CHECK_THROWS_AS(load_config_file("/nonexistent/lakelab.toml"), ConfigError);
}

TEST_CASE("sha256") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("csv table") {
    CsvTable t({"a", "b"});
    t.meta("k", 0.1);
    t.meta_block("cfg", "x = 1\ny = 2");
    t.row(std::vector<double>{1.0, 0.30000000000000004});
    t.row(std::vector<std::string>{"s", "t"});
    CHECK(t.str() == "# k: 0.1\n# cfg: x = 1\n# cfg: y = 2\na,b\n1,0.30000000000000004\ns,t\n");
}

TEST_CASE("value function cache round trip") {
    const auto curve = hill_curve();
    const LakeParams p;
    const GridSpec grid{20.0, 128};
    const auto vf = to_value_function(build_candidate(p, curve, 20.0), grid);
    const CacheEntry entry{vf, {"iterations: 3", "note two"}};
    const auto key = value_function_cache_key(p, curve.name(), grid, 1e-9);
    CHECK(key.size() == 64);
    CHECK(key != value_function_cache_key(p.with_sigma(0.1), curve.name(), grid, 1e-9));
    CHECK(key != value_function_cache_key(p, curve.name(), GridSpec{20.0, 129}, 1e-9));

    const auto text = serialize_cache_entry(entry, key);
    const auto back = deserialize_cache_entry(text, key);
    CHECK(back.vf.V == vf.V);
    CHECK(back.vf.Vp == vf.Vp);
    CHECK(back.vf.V2 == vf.V2);
    CHECK(back.vf.sigma == vf.sigma);
    CHECK(back.vf.grid.x_max == vf.grid.x_max);
    CHECK(back.vf.provenance == vf.provenance);
    CHECK(back.notes == entry.notes);
    CHECK(serialize_cache_entry(back, key) == text);

    CHECK_THROWS_AS(deserialize_cache_entry(text, std::string(64, '0')), CacheError);
    CHECK_THROWS_AS(deserialize_cache_entry(text.substr(0, text.size() / 2), key), CacheError);
    std::string bad = text;
    bad.replace(bad.find("V 128"), 5, "V 129");
    CHECK_THROWS_AS(deserialize_cache_entry(bad, key), CacheError);

    const fs::path dir = fs::temp_directory_path() / "lakelab-test-cache";
    fs::remove_all(dir);
    CHECK_FALSE(cache_load(dir, key).has_value());
    cache_store(dir, key, entry);
    const auto loaded = cache_load(dir, key);
    REQUIRE(loaded.has_value());
    CHECK(loaded->vf.V == vf.V);
    {
        std::ofstream(dir / (key + ".vf")) << "garbage";
    }
    CHECK_THROWS_AS(cache_load(dir, key), CacheError);
    fs::remove_all(dir);
}

TEST_CASE("cache directory resolution") {
    ::unsetenv("LAKELAB_CACHE");
    CHECK(resolve_cache_dir("", "out") == fs::path("out") / "cache");
    CHECK(resolve_cache_dir("c", "out") == fs::path("c"));
    ::setenv("LAKELAB_CACHE", "/tmp/env-cache", 1);
    CHECK(resolve_cache_dir("c", "out") == fs::path("/tmp/env-cache"));
    ::unsetenv("LAKELAB_CACHE");
}
