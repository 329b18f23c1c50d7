// Small shared helpers: seeded RNG streams, key=value config files, TSV rows.

#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ltlforge {

using Rng = std::mt19937_64;

// Missing or unreadable file (CLI exit code 4).
class FileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed configuration content (CLI exit code 3).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Derives an independent, reproducible stream from a base seed and a stream
// index (splitmix64 finalizer over the pair).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

inline Rng make_rng(std::uint64_t base, std::uint64_t stream = 0) {
    return Rng(derive_seed(base, stream));
}

// ── text utilities ──────────────────────────────────────────────────────────

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

std::vector<std::string> split(const std::string& s, char sep);
std::string trim(const std::string& s);

// key=value config files, one pair per line, '#' comments allowed.
using KeyValueMap = std::map<std::string, std::string>;
KeyValueMap parse_key_values(const std::string& text);
std::string format_key_values(const KeyValueMap& kv);

// Fixed-precision float formatting so emitted files are byte-stable.
std::string format_double(double v, int precision = 6);

// Joins cells with tabs; caller appends rows to a file.
std::string tsv_row(const std::vector<std::string>& cells);

// Sample mean / sample standard deviation (n-1 denominator, 0 for n<2).
struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;
};
MeanStd mean_std(const std::vector<double>& xs);

}  // namespace ltlforge
