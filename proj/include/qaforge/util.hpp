#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace qaforge {

// FNV-1a, used for all stable content ids in artifact files.
std::uint64_t fnv1a64(std::string_view data);
std::string fnv1a64_hex(std::string_view data);

std::string to_lower_ascii(std::string_view s);
std::string trim(std::string_view s);
bool starts_with(std::string_view s, std::string_view prefix);

// Tab-separated artifact lines: \t \n \r and backslash are escaped so any
// text field survives a one-record-per-line file.
std::string tsv_escape(std::string_view field);
std::string tsv_unescape(std::string_view field);
std::vector<std::string> split_tsv_line(std::string_view line);

std::vector<std::string> split_on(std::string_view s, char sep);

// Shortest float form with the exponent's leading zeros trimmed, so 5e-05
// prints as 5e-5. Round-trips through strtod.
std::string format_double(double value);

// Deterministic cross-platform RNG (splitmix64 core).
class DeterministicRng {
  public:
    explicit DeterministicRng(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next();
    // uniform in [0, bound), bound > 0
    std::uint64_t next_below(std::uint64_t bound);
    double next_unit();

  private:
    std::uint64_t state_;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

// Runs fn(0..count) across a small worker pool. The first exception thrown
// by any task is rethrown on the calling thread after all workers join.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace qaforge
