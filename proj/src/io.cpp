#include "lakelab/io.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unistd.h>

#include <openssl/evp.h>

#include "lakelab/error.hpp"

namespace lakelab {

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw CacheError("SHA-256 digest failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i)
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return os.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    if (ec) throw CacheError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw CacheError("cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) throw CacheError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw CacheError("cannot rename onto " + path.string());
    }
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

void CsvTable::meta(const std::string& key, const std::string& value) {
    meta_.push_back("# " + key + ": " + value);
}

void CsvTable::meta(const std::string& key, double value) { meta(key, format_double(value)); }

void CsvTable::meta_block(const std::string& key, const std::string& text) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) meta_.push_back("# " + key + ": " + line);
}

void CsvTable::row(const std::vector<std::string>& cells) {
    std::string r;
    for (std::size_t i = 0; i < cells.size(); ++i) r += (i ? "," : "") + cells[i];
    rows_.push_back(std::move(r));
}

void CsvTable::row(const std::vector<double>& cells) {
    std::vector<std::string> s;
    for (double v : cells) s.push_back(format_double(v));
    row(s);
}

std::string CsvTable::str() const {
    std::string out;
    for (const auto& m : meta_) out += m + "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i) out += (i ? "," : "") + columns_[i];
    out += "\n";
    for (const auto& r : rows_) out += r + "\n";
    return out;
}

std::string value_function_cache_key(const LakeParams& params, const std::string& curve_name,
                                     const GridSpec& grid, double tol) {
    std::ostringstream os;
    os << std::hexfloat << "format=" << kCacheFormat << ";b=" << params.b << ";c=" << params.c
       << ";rho=" << params.rho << ";sigma=" << params.sigma << ";curve=" << curve_name
       << ";x_max=" << grid.x_max << ";n=" << grid.n << ";tol=" << tol;
    return sha256_hex(os.str());
}

namespace {

void put_vector(std::ostringstream& os, const char* name, const std::vector<double>& v) {
    os << name << ' ' << v.size() << '\n';
    for (double d : v) os << std::hexfloat << d << '\n';
}

std::vector<double> get_vector(std::istringstream& in, const char* name) {
    std::string tag;
    std::size_t n = 0;
    if (!(in >> tag >> n) || tag != name) throw CacheError(std::string("cache: missing ") + name);
    std::vector<double> v(n);
    for (auto& d : v) {
        std::string tok;
        if (!(in >> tok)) throw CacheError(std::string("cache: truncated ") + name);
        char* end = nullptr;
        d = std::strtod(tok.c_str(), &end);
        if (end != tok.c_str() + tok.size()) throw CacheError(std::string("cache: bad number in ") + name);
    }
    return v;
}

}  // namespace

std::string serialize_cache_entry(const CacheEntry& entry, const std::string& key) {
    const ValueFunction& vf = entry.vf;
    std::ostringstream os;
    os << "lakelab-value-function " << kCacheFormat << '\n'
       << "key " << key << '\n'
       << "provenance " << to_string(vf.provenance) << '\n';
    os << std::hexfloat << "sigma " << vf.sigma << '\n'
       << "x_max " << vf.grid.x_max << '\n';
    os << std::defaultfloat << "n " << vf.grid.n << '\n';
    put_vector(os, "V", vf.V);
    put_vector(os, "Vp", vf.Vp);
    put_vector(os, "V2", vf.V2);
    os << std::defaultfloat << "notes " << entry.notes.size() << '\n';
    for (const auto& line : entry.notes) {
        if (line.find('\n') != std::string::npos) throw CacheError("cache: note with a newline");
        os << line << '\n';
    }
    os << "end\n";
    return os.str();
}

CacheEntry deserialize_cache_entry(const std::string& text, const std::string& key) {
    std::istringstream in(text);
    std::string tag, val;
    int format = 0;
    if (!(in >> tag >> format) || tag != "lakelab-value-function" || format != kCacheFormat)
        throw CacheError("cache: unrecognized header or format version");
    if (!(in >> tag >> val) || tag != "key" || val != key) throw CacheError("cache: key mismatch");
    if (!(in >> tag >> val) || tag != "provenance" || (val != "hjb" && val != "pontryagin"))
        throw CacheError("cache: bad provenance");
    ValueFunction vf;
    vf.provenance = val == "hjb" ? Provenance::hjb : Provenance::pontryagin;
    auto read_double = [&](const char* name) {
        std::string t, tok;
        if (!(in >> t >> tok) || t != name) throw CacheError(std::string("cache: missing ") + name);
        return std::strtod(tok.c_str(), nullptr);
    };
    vf.sigma = read_double("sigma");
    vf.grid.x_max = read_double("x_max");
    if (!(in >> tag >> vf.grid.n) || tag != "n") throw CacheError("cache: missing n");
    vf.V = get_vector(in, "V");
    vf.Vp = get_vector(in, "Vp");
    vf.V2 = get_vector(in, "V2");
    std::size_t n_notes = 0;
    if (!(in >> tag >> n_notes) || tag != "notes") throw CacheError("cache: missing notes");
    std::string line;
    std::getline(in, line);
    CacheEntry entry;
    for (std::size_t i = 0; i < n_notes; ++i) {
        if (!std::getline(in, line)) throw CacheError("cache: truncated notes");
        entry.notes.push_back(line);
    }
    if (!(in >> tag) || tag != "end") throw CacheError("cache: missing end marker");
    if (vf.V.size() != vf.grid.n || vf.Vp.size() != vf.grid.n || vf.V2.size() != vf.grid.n ||
        vf.grid.n < 2)
        throw CacheError("cache: size mismatch");
    entry.vf = std::move(vf);
    return entry;
}

std::filesystem::path resolve_cache_dir(const std::string& configured,
                                        const std::filesystem::path& output_dir) {
    if (const char* env = std::getenv("LAKELAB_CACHE"); env && *env) return env;
    if (!configured.empty()) return configured;
    return output_dir / "cache";
}

std::optional<CacheEntry> cache_load(const std::filesystem::path& dir, const std::string& key) {
    const auto path = dir / (key + ".vf");
    if (!std::filesystem::exists(path)) return std::nullopt;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CacheError("cache: cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return deserialize_cache_entry(ss.str(), key);
}

void cache_store(const std::filesystem::path& dir, const std::string& key, const CacheEntry& entry) {
    write_file_atomic(dir / (key + ".vf"), serialize_cache_entry(entry, key));
}

}  // namespace lakelab
