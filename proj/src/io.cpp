#include "cpcp/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cpcp/errors.hpp"

namespace cpcp {

namespace {

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t out = 0;
    for (int b = 0; b < 8; ++b) out |= ((v >> (8 * b)) & 0xFFu) << (8 * (7 - b));
    return out;
  }
}

std::istringstream header_line(std::istream& in, const char* format) {
  std::string line;
  if (!std::getline(in, line)) throw IoError(std::string(format) + ": missing header");
  std::istringstream fields(line);
  std::string magic;
  fields >> magic;
  if (magic != format) {
    throw IoError(std::string(format) + ": bad magic '" + magic + "'");
  }
  return fields;
}

template <typename T>
T header_field(std::istringstream& fields, const char* format, const char* name) {
  long long v = 0;
  if (!(fields >> v) || v < 0) {
    throw IoError(std::string(format) + ": invalid " + name + " in header");
  }
  return static_cast<T>(v);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

template <typename F>
auto with_path(const std::filesystem::path& path, F&& f) {
  try {
    return f();
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace

void write_dmat(std::ostream& out, const Matrix& a) {
  out << "DMAT1 " << a.rows() << ' ' << a.cols() << '\n';
  std::vector<std::uint64_t> buf(static_cast<std::size_t>(a.size()));
  std::size_t k = 0;
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      buf[k++] = to_little_endian(std::bit_cast<std::uint64_t>(a(i, j)));
    }
  }
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(std::uint64_t)));
  if (!out) throw IoError("DMAT1: write failed");
}

Matrix read_dmat(std::istream& in) {
  auto fields = header_line(in, "DMAT1");
  const auto rows = header_field<Index>(fields, "DMAT1", "rows");
  const auto cols = header_field<Index>(fields, "DMAT1", "cols");
  const std::size_t count = static_cast<std::size_t>(rows * cols);
  std::vector<std::uint64_t> buf(count);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(count * sizeof(std::uint64_t)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(std::uint64_t)) {
    throw IoError("DMAT1: truncated payload (expected " + std::to_string(count) + " values)");
  }
  Matrix a(rows, cols);
  std::size_t k = 0;
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      a(i, j) = std::bit_cast<double>(to_little_endian(buf[k++]));
    }
  }
  if (!a.allFinite()) throw IoError("DMAT1: payload contains non-finite values");
  return a;
}

void write_dmat(const std::filesystem::path& path, const Matrix& a) {
  with_path(path, [&] {
    auto out = open_out(path);
    write_dmat(out, a);
  });
}

Matrix read_dmat(const std::filesystem::path& path) {
  return with_path(path, [&] {
    auto in = open_in(path);
    return read_dmat(in);
  });
}

void write_support(std::ostream& out, const SupportSet& omega) {
  out << "SUPP1 " << omega.rows() << ' ' << omega.cols() << ' ' << omega.count() << '\n';
  for (const auto& [i, j] : omega.entries()) out << i << ' ' << j << '\n';
  if (!out) throw IoError("SUPP1: write failed");
}

SupportSet read_support(std::istream& in) {
  auto fields = header_line(in, "SUPP1");
  const auto rows = header_field<Index>(fields, "SUPP1", "rows");
  const auto cols = header_field<Index>(fields, "SUPP1", "cols");
  const auto count = header_field<std::size_t>(fields, "SUPP1", "count");
  std::vector<Entry> entries;
  entries.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    long long i = 0, j = 0;
    if (!(in >> i >> j)) {
      throw IoError("SUPP1: expected " + std::to_string(count) + " entries, found " +
                    std::to_string(k));
    }
    entries.emplace_back(static_cast<Index>(i), static_cast<Index>(j));
  }
  return SupportSet::from_entries(rows, cols, entries);
}

void write_support(const std::filesystem::path& path, const SupportSet& omega) {
  with_path(path, [&] {
    auto out = open_out(path);
    write_support(out, omega);
  });
}

SupportSet read_support(const std::filesystem::path& path) {
  return with_path(path, [&] {
    auto in = open_in(path);
    return read_support(in);
  });
}

void write_basis(std::ostream& out, const SpanBasis& basis) {
  out << "BASIS1 " << basis.size() << ' ' << basis.rows() << ' ' << basis.cols() << '\n';
  for (Index k = 0; k < basis.size(); ++k) write_dmat(out, basis.element(k));
  if (!out) throw IoError("BASIS1: write failed");
}

SpanBasis read_basis(std::istream& in) {
  auto fields = header_line(in, "BASIS1");
  const auto p = header_field<Index>(fields, "BASIS1", "p");
  const auto rows = header_field<Index>(fields, "BASIS1", "rows");
  const auto cols = header_field<Index>(fields, "BASIS1", "cols");
  if (p == 0) return SpanBasis(rows, cols);
  std::vector<Matrix> elements;
  for (Index k = 0; k < p; ++k) {
    Matrix g = read_dmat(in);
    if (g.rows() != rows || g.cols() != cols) {
      throw IoError("BASIS1: element " + std::to_string(k) + " has the wrong shape");
    }
    elements.push_back(std::move(g));
  }
  return SpanBasis::from_elements(elements);
}

void write_basis(const std::filesystem::path& path, const SpanBasis& basis) {
  with_path(path, [&] {
    auto out = open_out(path);
    write_basis(out, basis);
  });
}

SpanBasis read_basis(const std::filesystem::path& path) {
  return with_path(path, [&] {
    auto in = open_in(path);
    return read_basis(in);
  });
}

}  // namespace cpcp
