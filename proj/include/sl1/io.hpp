#pragma once

// On-disk formats for vectors and matrices.
//
// CSV: one line per matrix row, comma-separated decimal values with '.' as
// the decimal separator, written in shortest round-trip form. A vector is a
// column: one value per line.
//
// Binary: "SL1M", u32 rows, u32 cols (little endian), then rows*cols
// little-endian IEEE-754 doubles in row-major order.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "sl1/core.hpp"

namespace sl1::io {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Readable file whose content does not parse.
class FormatError : public IoError {
 public:
  using IoError::IoError;
};

std::string format_double(double x);
double parse_double(std::string_view text);

std::string encode_matrix_csv(const DenseMatrix& m);
DenseMatrix decode_matrix_csv(std::string_view text);
std::string encode_vector_csv(std::span<const double> v);
RealVector decode_vector_csv(std::string_view text);

std::string encode_matrix_binary(const DenseMatrix& m);
DenseMatrix decode_matrix_binary(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary file and renames it over the target.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

// Dispatches on extension: ".bin" is the binary format, anything else CSV.
DenseMatrix read_matrix(const std::filesystem::path& path);
void write_matrix(const std::filesystem::path& path, const DenseMatrix& m);
RealVector read_vector(const std::filesystem::path& path);
void write_vector(const std::filesystem::path& path, std::span<const double> v);

}  // namespace sl1::io
