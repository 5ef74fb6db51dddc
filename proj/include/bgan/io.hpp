#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bgan/matrix.hpp"

namespace bgan::io {

/// Shortest decimal that round-trips a double (17 significant digits max).
std::string format_double(double v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

/// CSV with a header row; all cells are doubles.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Matrix& values);
struct Csv {
    std::vector<std::string> header;
    Matrix values;
};
Csv read_csv(const std::string& path);

/// Single-row observed-data file.
Vector read_row_csv(const std::string& path);
void write_row_csv(const std::string& path, const Vector& row);

/// FNV-1a 64-bit, hex-encoded; used to key run directories and stamp
/// artifacts with their configuration.
std::uint64_t fnv1a(const std::string& text);
std::string hash_hex(const std::string& text);

void ensure_dir(const std::string& path);

}  // namespace bgan::io
