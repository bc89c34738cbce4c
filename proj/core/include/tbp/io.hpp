#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tbp {

// Shortest decimal text that round-trips the double exactly.
std::string format_double(double value);

// Fixed 17-significant-digit decimal text (checkpoint schema).
std::string format_double17(double value);

// Strict double parse; the whole token must be consumed. Throws Error.
double parse_double(const std::string& token);

long parse_long(const std::string& token);

// Split one CSV line on commas. No quoting: the engine's formats never
// embed commas inside fields.
std::vector<std::string> split_csv_line(const std::string& line);

// Whole-file read; throws Error when the file cannot be opened.
std::string read_file(const std::filesystem::path& path);

// Write via temp file + rename so readers never observe partial output.
void atomic_write_file(const std::filesystem::path& path, const std::string& contents);

// FNV-1a 64-bit digest, hex encoded; used for artifact digests in manifests.
std::uint64_t fnv1a64(const void* data, std::size_t size);
std::string file_digest(const std::filesystem::path& path);

}  // namespace tbp
