#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace streetsafe::util {

// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF tolerated.
// Embedded newlines inside quotes are not supported.
std::vector<std::string> split_csv_line(std::string_view line);

/// Quotes the field only when it contains a comma, quote, or newline.
std::string csv_escape(std::string_view field);

std::string join_csv(std::span<const std::string> fields);

std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);

/// Strict decimal parse; rejects trailing garbage and non-finite values.
std::optional<double> parse_double(std::string_view s);

/// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);

/// First 8 bytes of SHA-256, big-endian. Stable across platforms.
std::uint64_t stable_hash64(std::string_view bytes);

std::string base64_encode(std::string_view bytes);

std::string read_file(const std::string& path);

/// Writes via a temporary sibling file and rename.
void write_file_atomic(const std::string& path, std::string_view contents);

/// Fixed-point rendering with `decimals` places; negative zero printed as zero.
std::string fixed(double value, int decimals);

/// Mean of values; 0 for empty input.
double mean(std::span<const double> values);

/// Sample standard deviation (n-1); 0 when fewer than two values.
double sample_stddev(std::span<const double> values);

}  // namespace streetsafe::util
