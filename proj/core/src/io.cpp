#include "decrom/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>

namespace decrom {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::array<unsigned char, sizeof(T)> b;
    std::memcpy(b.data(), &v, sizeof(T));
    std::reverse(b.begin(), b.end());
    std::memcpy(&v, b.data(), sizeof(T));
    return v;
  }
}

}  // namespace

void write_matrix(const std::filesystem::path& path, const Matrix& M) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const std::uint64_t dims[2] = {to_little(static_cast<std::uint64_t>(M.rows())),
                                 to_little(static_cast<std::uint64_t>(M.cols()))};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(M.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(M.size())));
  } else {
    for (Index i = 0; i < M.size(); ++i) {
      const double v = to_little(M.data()[i]);
      out.write(reinterpret_cast<const char*>(&v), sizeof(double));
    }
  }
  if (!out) throw IoError("write to " + path.string() + " failed");
}

Matrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::uint64_t dims[2];
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in) throw IoError(path.string() + ": truncated header");
  const auto rows = static_cast<Index>(to_little(dims[0]));
  const auto cols = static_cast<Index>(to_little(dims[1]));
  const auto expected = std::filesystem::file_size(path);
  if (expected != 16 + sizeof(double) * static_cast<std::uintmax_t>(rows * cols)) {
    throw IoError(path.string() + ": size does not match header");
  }
  Matrix M(rows, cols);
  in.read(reinterpret_cast<char*>(M.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(M.size())));
  if (!in) throw IoError(path.string() + ": truncated payload");
  if constexpr (std::endian::native != std::endian::little) {
    for (Index i = 0; i < M.size(); ++i) M.data()[i] = to_little(M.data()[i]);
  }
  return M;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns,
                     const std::string& config_hash)
    : out_(path, std::ios::trunc), columns_(columns.size()) {
  if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  out_ << "# config_hash=" << config_hash << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
  out_ << "\n";
}

void CsvWriter::separator() {
  if (in_row_ > 0) out_ << ",";
  ++in_row_;
}

CsvWriter& CsvWriter::operator<<(double v) {
  separator();
  out_ << format_double(v);
  return *this;
}

CsvWriter& CsvWriter::operator<<(Index v) {
  separator();
  out_ << v;
  return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& v) {
  separator();
  out_ << v;
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_) throw IoError("CSV row has wrong number of fields");
  out_ << "\n";
  in_row_ = 0;
  if (!out_) throw IoError("CSV write failed");
}

}  // namespace decrom
