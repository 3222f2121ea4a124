#pragma once

#include <filesystem>
#include <iosfwd>

#include "cpcp/linalg.hpp"
#include "cpcp/subspace.hpp"

namespace cpcp {

// DMAT1: text header "DMAT1 <rows> <cols>\n" followed by rows*cols
// little-endian float64 values in row-major order.
void write_dmat(std::ostream& out, const Matrix& a);
Matrix read_dmat(std::istream& in);
void write_dmat(const std::filesystem::path& path, const Matrix& a);
Matrix read_dmat(const std::filesystem::path& path);

// SUPP1: header "SUPP1 <rows> <cols> <count>" then one "i j" line per entry
// (0-based, row-major order).
void write_support(std::ostream& out, const SupportSet& omega);
SupportSet read_support(std::istream& in);
void write_support(const std::filesystem::path& path, const SupportSet& omega);
SupportSet read_support(const std::filesystem::path& path);

// BASIS1: header "BASIS1 <p> <rows> <cols>\n" then p DMAT1 records.
void write_basis(std::ostream& out, const SpanBasis& basis);
SpanBasis read_basis(std::istream& in);
void write_basis(const std::filesystem::path& path, const SpanBasis& basis);
SpanBasis read_basis(const std::filesystem::path& path);

}  // namespace cpcp
