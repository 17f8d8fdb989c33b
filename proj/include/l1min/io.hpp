#pragma once

#include "l1min/model.hpp"
#include "l1min/numerics.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace l1min {

/// printf "%.17g": round-trips every finite double.
std::string format_double(double v);

/// Plain CSV, one matrix row per line, no header, UTF-8 with LF endings.
/// Throws InvalidArgument on ragged rows or unparsable cells; the message
/// carries the file name and line.
Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
void write_matrix_csv(std::ostream& out, const Matrix& m);

/// Single-column CSV. A single row is also accepted on read.
Vector read_vector_csv(const std::filesystem::path& path);
void write_vector_csv(const std::filesystem::path& path, const Vector& v);

Matrix parse_matrix_csv(std::istream& in, const std::string& name);

}  // namespace l1min
