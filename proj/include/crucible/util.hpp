#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crucible/error.hpp"

namespace crucible {

namespace fs = std::filesystem;

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// SHA-256 of a file's content; std::nullopt when unreadable.
std::optional<std::string> sha256_file(const fs::path& path);

std::string_view trim(std::string_view s);
std::string_view trim_right(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_whitespace(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool is_hex(std::string_view s);

/// printf-style "%.<digits>g".
std::string format_g(double value, int digits);

/// Shortest text that parses back to the identical double.
std::string format_exact(double value);

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

/// Stable 64-bit FNV-1a hash, identical on every platform.
std::uint64_t fnv1a64(std::string_view s);
std::uint64_t splitmix64(std::uint64_t x);

/// Whole-file read; throws Error(ReadFailure).
std::string read_file(const fs::path& path);

/// Write via a temporary sibling and rename; throws Error(`on_failure`).
void write_file_atomic(const fs::path& path, std::string_view content,
                       Errc on_failure = Errc::WriteFailure);

/// Expands `$NAME` and `${NAME}` from the process environment. Unset
/// variables yield std::nullopt.
std::optional<std::string> expand_env(std::string_view s);

// Exclusive advisory lock on a lock file, held for the object's lifetime.
// Acquisition retries for `timeout_ms` before throwing `on_failure`.
class FileLock {
 public:
  explicit FileLock(const fs::path& lock_path, Errc on_failure,
                    int timeout_ms = 5000);
  ~FileLock();
  FileLock(FileLock&& other) noexcept;
  FileLock& operator=(FileLock&& other) noexcept;
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

}  // namespace crucible
