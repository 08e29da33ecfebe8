#include "sl1/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace sl1::io {

static_assert(std::endian::native == std::endian::little,
              "binary matrix I/O assumes a little-endian host");

std::string format_double(double x) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc{}) throw std::logic_error("format_double: to_chars failed");
  return std::string(buf.data(), ptr);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw FormatError("not a number: '" + std::string(text) + "'");
  }
  if (!std::isfinite(value)) throw FormatError("non-finite value: '" + std::string(text) + "'");
  return value;
}

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return lines;
}

}  // namespace

std::string encode_matrix_csv(const DenseMatrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

DenseMatrix decode_matrix_csv(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw FormatError("empty matrix CSV");
  std::vector<double> entries;
  std::size_t cols = 0;
  for (std::size_t r = 0; r < lines.size(); ++r) {
    std::string_view line = lines[r];
    std::size_t count = 0;
    while (true) {
      const auto comma = line.find(',');
      entries.push_back(parse_double(line.substr(0, comma)));
      ++count;
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (r == 0) {
      cols = count;
    } else if (count != cols) {
      throw FormatError("ragged matrix CSV: row " + std::to_string(r) + " has " +
                        std::to_string(count) + " values, expected " + std::to_string(cols));
    }
  }
  return DenseMatrix(lines.size(), cols, std::move(entries));
}

std::string encode_vector_csv(std::span<const double> v) {
  std::string out;
  for (double x : v) {
    out += format_double(x);
    out += '\n';
  }
  return out;
}

RealVector decode_vector_csv(std::string_view text) {
  RealVector out;
  for (auto line : split_lines(text)) {
    if (line.find(',') != std::string_view::npos) throw FormatError("vector CSV must have one value per line");
    out.push_back(parse_double(line));
  }
  return out;
}

namespace {

constexpr char kMagic[4] = {'S', 'L', '1', 'M'};
constexpr std::size_t kHeaderBytes = 12;

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

std::uint32_t get_u32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v = 0;
  std::memcpy(&v, bytes.data() + offset, 4);
  return v;
}

}  // namespace

std::string encode_matrix_binary(const DenseMatrix& m) {
  std::string out(kMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  const auto& e = m.entries();
  out.append(reinterpret_cast<const char*>(e.data()), e.size() * sizeof(double));
  return out;
}

DenseMatrix decode_matrix_binary(std::string_view bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("binary matrix: bad magic (expected SL1M)");
  }
  const std::uint64_t rows = get_u32(bytes, 4);
  const std::uint64_t cols = get_u32(bytes, 8);
  if (rows == 0 || cols == 0) throw FormatError("binary matrix: zero dimension");
  if (bytes.size() != kHeaderBytes + rows * cols * sizeof(double)) {
    throw FormatError("binary matrix: payload size does not match " + std::to_string(rows) + "x" +
                      std::to_string(cols));
  }
  std::vector<double> entries(rows * cols);
  std::memcpy(entries.data(), bytes.data() + kHeaderBytes, entries.size() * sizeof(double));
  for (double x : entries) {
    if (!std::isfinite(x)) throw FormatError("binary matrix: non-finite entry");
  }
  return DenseMatrix(rows, cols, std::move(entries));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

void atomic_write_file(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename onto " + path.string());
  }
}

DenseMatrix read_matrix(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  try {
    if (path.extension() == ".bin") return decode_matrix_binary(bytes);
    return decode_matrix_csv(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_matrix(const std::filesystem::path& path, const DenseMatrix& m) {
  atomic_write_file(path, path.extension() == ".bin" ? encode_matrix_binary(m) : encode_matrix_csv(m));
}

RealVector read_vector(const std::filesystem::path& path) {
  try {
    return decode_vector_csv(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_vector(const std::filesystem::path& path, std::span<const double> v) {
  atomic_write_file(path, encode_vector_csv(v));
}

}  // namespace sl1::io
