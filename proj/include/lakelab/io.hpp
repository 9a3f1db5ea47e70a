#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lakelab/lake_model.hpp"
#include "lakelab/value_function.hpp"

namespace lakelab {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kCacheFormat = 1;

std::string sha256_hex(const std::string& data);

/// Writes content to path through a temporary file and rename. Throws CacheError
/// on I/O failure.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// CSV with '#'-prefixed metadata lines ("# key: value") followed by a header row.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    void meta(const std::string& key, const std::string& value);
    void meta(const std::string& key, double value);
    /// Multi-line text, one metadata line per input line.
    void meta_block(const std::string& key, const std::string& text);
    void row(const std::vector<std::string>& cells);
    void row(const std::vector<double>& cells);

    std::string str() const;

private:
    std::vector<std::string> columns_;
    std::vector<std::string> meta_;
    std::vector<std::string> rows_;
};

/// Shortest round-trip decimal representation.
std::string format_double(double v);

/// Cache key: SHA-256 of (params, curve name, grid, tol).
std::string value_function_cache_key(const LakeParams& params, const std::string& curve_name,
                                     const GridSpec& grid, double tol);

/// A cached value function with free-form note lines (e.g. the solver report).
struct CacheEntry {
    ValueFunction vf;
    std::vector<std::string> notes;
};

/// Versioned text serialization (hex floats, bit-exact round trip).
std::string serialize_cache_entry(const CacheEntry& entry, const std::string& key);

/// Throws CacheError if the text is not a well-formed record for `key`.
CacheEntry deserialize_cache_entry(const std::string& text, const std::string& key);

/// Cache directory resolution: LAKELAB_CACHE overrides the configured directory.
std::filesystem::path resolve_cache_dir(const std::string& configured,
                                        const std::filesystem::path& output_dir);

/// nullopt when absent; throws CacheError when present but corrupt.
std::optional<CacheEntry> cache_load(const std::filesystem::path& dir, const std::string& key);

void cache_store(const std::filesystem::path& dir, const std::string& key, const CacheEntry& entry);

}  // namespace lakelab
