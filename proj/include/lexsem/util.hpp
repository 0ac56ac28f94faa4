#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lexsem {

/// FNV-1a 64-bit. Used for prompt cache keys and output digests; stable
/// across platforms, not cryptographic.
std::uint64_t fnv1a64(std::string_view data);

std::string to_hex(std::uint64_t value);

/// fnv1a64 rendered as 16 hex chars.
std::string content_hash(std::string_view data);

std::string lower_ascii(std::string_view s);
std::string trim(std::string_view s);

/// Collapses every whitespace run to a single space and trims the ends.
std::string normalize_whitespace(std::string_view s);

std::vector<std::string> split_on(std::string_view s, char sep);

/// Formats with 9 significant digits ("%.9g"), the on-disk score format.
std::string format_score(double value);

std::string read_file(const std::filesystem::path& path);

/// Writes via a temp file in the same directory, then renames into place.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

/// Escapes characters outside [A-Za-z0-9._-] as %XX so any DocId maps to a
/// unique, filesystem-safe name.
std::string path_safe(std::string_view s);

/// Inverse of path_safe. MalformedRecord on a truncated or non-hex escape.
std::string path_unsafe(std::string_view s);

std::string iso8601_now();

}  // namespace lexsem
