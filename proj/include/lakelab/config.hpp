#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lakelab/lake_model.hpp"
#include "lakelab/value_function.hpp"

namespace lakelab {

/// Value of a key in the TOML subset: number, string, boolean or number array.
using ConfigValue = std::variant<double, std::string, bool, std::vector<double>>;

/// table -> key -> value. The root table is "".
using ConfigDocument = std::map<std::string, std::map<std::string, ConfigValue>>;

/// Parses tables, comments, numbers, strings, booleans and flat number arrays.
/// Throws ConfigError with the line number on malformed input or duplicate keys.
ConfigDocument parse_config_text(const std::string& text);

struct RunConfig {
    LakeParams params;
    std::string curve_name = "hill";
    double curve_scale = 1.0;
    std::optional<double> x_max;  // defaulted by the commands when absent
    std::size_t n = 4096;

    double hjb_tol = 1e-9;
    int hjb_max_iter = 200;
    double manifold_rtol = 1e-10;
    double potential_h = 1e-3;
    double y_min = -3.0;
    double y_max = 2.9;

    std::size_t n_paths = 10000;
    double dt = 1e-3;
    std::uint64_t seed = 42;
    double horizon = 500.0;
    double sample_dt = 0.1;
    std::vector<double> x_starts;  // simulate; defaults around x* when empty
    double t_max = 2000.0;

    std::vector<double> ladder{0.30, 0.22, 0.16, 0.12};

    std::string output_dir = "lakelab-out";
    std::string cache_dir;  // empty: <output_dir>/cache

    /// Every field in a fixed order with round-trip precision; hashed for caching
    /// and echoed into output headers.
    std::string canonical() const;
};

/// Builds and validates a RunConfig. Unknown tables or keys, wrong value types and
/// values violating module invariants throw ConfigError.
RunConfig load_config_text(const std::string& text);
RunConfig load_config_file(const std::string& path);

RecyclingCurve make_configured_curve(const RunConfig& cfg);

}  // namespace lakelab
