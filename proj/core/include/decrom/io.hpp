#pragma once

#include "decrom/types.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace decrom {

/// Binary matrix file: two little-endian u64 (rows, cols), then rows*cols
/// little-endian f64 values in column-major order.
void write_matrix(const std::filesystem::path& path, const Matrix& M);
Matrix read_matrix(const std::filesystem::path& path);

/// 64-bit FNV-1a digest as 16 hex characters.
std::string fnv1a_hex(const std::string& text);

/// CSV with a header row preceded by a "# config_hash=..." comment line.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns,
            const std::string& config_hash);

  CsvWriter& operator<<(double v);
  CsvWriter& operator<<(Index v);
  CsvWriter& operator<<(const std::string& v);
  void end_row();

 private:
  void separator();

  std::ofstream out_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace decrom
