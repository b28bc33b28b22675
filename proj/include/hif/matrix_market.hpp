#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hif/compressed_matrix.hpp"

namespace hif {

struct MatrixMarketError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace mm_detail {

struct Header {
  bool coordinate = true;
  std::string field;     // real, complex, integer, pattern
  std::string symmetry;  // general, symmetric, hermitian, skew-symmetric
};

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return char(std::tolower(c)); });
  return s;
}

inline Header read_header(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw MatrixMarketError("empty Matrix Market stream");
  std::istringstream hs(line);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || lower(object) != "matrix")
    throw MatrixMarketError("missing %%MatrixMarket matrix banner");
  Header h;
  format = lower(format);
  if (format == "coordinate")
    h.coordinate = true;
  else if (format == "array")
    h.coordinate = false;
  else
    throw MatrixMarketError("unsupported Matrix Market format: " + format);
  h.field = lower(field);
  h.symmetry = lower(symmetry);
  if (h.field != "real" && h.field != "complex" && h.field != "integer" && h.field != "pattern")
    throw MatrixMarketError("unsupported Matrix Market field: " + field);
  if (h.symmetry != "general" && h.symmetry != "symmetric" && h.symmetry != "hermitian" &&
      h.symmetry != "skew-symmetric")
    throw MatrixMarketError("unsupported Matrix Market symmetry: " + symmetry);
  return h;
}

inline bool next_data_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    auto p = line.find_first_not_of(" \t\r");
    if (p == std::string::npos || line[p] == '%') continue;
    return true;
  }
  return false;
}

template <class T>
T read_value(std::istringstream& ls, const Header& h) {
  if (h.field == "pattern") return T(1);
  double re = 0, im = 0;
  if (!(ls >> re)) throw MatrixMarketError("malformed Matrix Market entry");
  if (h.field == "complex") {
    if (!(ls >> im)) throw MatrixMarketError("malformed complex Matrix Market entry");
    if constexpr (is_complex_v<T>)
      return T(real_t<T>(re), real_t<T>(im));
    else
      throw MatrixMarketError("complex Matrix Market file read into a real type");
  } else {
    return scalar_cast<T>(re);
  }
}

template <class T>
void write_value(std::ostream& out, const T& v) {
  if constexpr (is_complex_v<T>)
    out << double(v.real()) << ' ' << double(v.imag());
  else
    out << double(v);
}

}  // namespace mm_detail

// Coordinate Matrix Market reader. Symmetric, Hermitian and skew-symmetric
// storage is expanded to general.
template <class T>
CompressedMatrix<T> read_matrix_market(std::istream& in,
                                       Orientation orient = Orientation::row_major) {
  const auto h = mm_detail::read_header(in);
  if (!h.coordinate) throw MatrixMarketError("expected coordinate format for a sparse matrix");
  if (h.field == "complex" && !is_complex_v<T>)
    throw MatrixMarketError("complex Matrix Market file read into a real type");
  std::string line;
  if (!mm_detail::next_data_line(in, line)) throw MatrixMarketError("missing size line");
  long long m = 0, n = 0, nz = 0;
  {
    std::istringstream ls(line);
    if (!(ls >> m >> n >> nz) || m < 0 || n < 0 || nz < 0)
      throw MatrixMarketError("malformed size line");
  }
  std::vector<Triplet<T>> trip;
  trip.reserve(std::size_t(nz) * (h.symmetry == "general" ? 1 : 2));
  for (long long k = 0; k < nz; ++k) {
    if (!mm_detail::next_data_line(in, line)) throw MatrixMarketError("truncated entry list");
    std::istringstream ls(line);
    long long i = 0, j = 0;
    if (!(ls >> i >> j)) throw MatrixMarketError("malformed entry indices");
    if (i < 1 || i > m || j < 1 || j > n) throw MatrixMarketError("entry index out of range");
    const T v = mm_detail::read_value<T>(ls, h);
    const Index r = Index(i - 1), c = Index(j - 1);
    trip.push_back({r, c, v});
    if (r != c) {
      if (h.symmetry == "symmetric")
        trip.push_back({c, r, v});
      else if (h.symmetry == "hermitian")
        trip.push_back({c, r, hif::conj(v)});
      else if (h.symmetry == "skew-symmetric")
        trip.push_back({c, r, -v});
    }
  }
  return CompressedMatrix<T>::from_triplets(Index(m), Index(n), trip, orient);
}

template <class T>
CompressedMatrix<T> read_matrix_market(const std::string& path,
                                       Orientation orient = Orientation::row_major) {
  std::ifstream in(path);
  if (!in) throw MatrixMarketError("cannot open " + path);
  return read_matrix_market<T>(in, orient);
}

// general coordinate output with round-trip precision
template <class T>
void write_matrix_market(std::ostream& out, const CompressedMatrix<T>& a) {
  out << "%%MatrixMarket matrix coordinate " << (is_complex_v<T> ? "complex" : "real")
      << " general\n";
  out << a.nrows() << ' ' << a.ncols() << ' ' << a.nnz() << '\n';
  out << std::setprecision(17);
  for (Index i = 0; i < a.primary_dim(); ++i) {
    auto idx = a.slice_indices(i);
    auto val = a.slice_values(i);
    for (std::size_t p = 0; p < idx.size(); ++p) {
      const Index r = a.is_row_major() ? i : idx[p], c = a.is_row_major() ? idx[p] : i;
      out << r + 1 << ' ' << c + 1 << ' ';
      mm_detail::write_value(out, val[p]);
      out << '\n';
    }
  }
}

template <class T>
void write_matrix_market(const std::string& path, const CompressedMatrix<T>& a) {
  std::ofstream out(path);
  if (!out) throw MatrixMarketError("cannot write " + path);
  write_matrix_market(out, a);
}

// array-format column vector
template <class T>
void write_matrix_market_array(std::ostream& out, std::span<const T> x) {
  out << "%%MatrixMarket matrix array " << (is_complex_v<T> ? "complex" : "real")
      << " general\n";
  out << x.size() << " 1\n" << std::setprecision(17);
  for (const auto& v : x) {
    mm_detail::write_value(out, v);
    out << '\n';
  }
}

template <class T>
void write_matrix_market_array(const std::string& path, std::span<const T> x) {
  std::ofstream out(path);
  if (!out) throw MatrixMarketError("cannot write " + path);
  write_matrix_market_array(out, x);
}

// Reads an array-format dense matrix (column-major) or a coordinate n x 1
// matrix into a vector of length rows*cols.
template <class T>
std::vector<T> read_matrix_market_vector(std::istream& in) {
  const auto h = mm_detail::read_header(in);
  if (h.field == "complex" && !is_complex_v<T>)
    throw MatrixMarketError("complex Matrix Market file read into a real type");
  std::string line;
  if (!mm_detail::next_data_line(in, line)) throw MatrixMarketError("missing size line");
  std::istringstream ss(line);
  long long m = 0, n = 0, nz = 0;
  if (!(ss >> m >> n) || m < 0 || n < 0) throw MatrixMarketError("malformed size line");
  std::vector<T> x(std::size_t(m) * std::size_t(n), T(0));
  if (!h.coordinate) {
    if (h.symmetry != "general") throw MatrixMarketError("array vectors must be general");
    for (auto& v : x) {
      if (!mm_detail::next_data_line(in, line)) throw MatrixMarketError("truncated array data");
      std::istringstream ls(line);
      v = mm_detail::read_value<T>(ls, h);
    }
  } else {
    if (!(ss >> nz)) throw MatrixMarketError("malformed size line");
    for (long long k = 0; k < nz; ++k) {
      if (!mm_detail::next_data_line(in, line)) throw MatrixMarketError("truncated entry list");
      std::istringstream ls(line);
      long long i = 0, j = 0;
      if (!(ls >> i >> j) || i < 1 || i > m || j < 1 || j > n)
        throw MatrixMarketError("entry index out of range");
      x[std::size_t(j - 1) * m + (i - 1)] += mm_detail::read_value<T>(ls, h);
    }
  }
  return x;
}

template <class T>
std::vector<T> read_matrix_market_vector(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MatrixMarketError("cannot open " + path);
  return read_matrix_market_vector<T>(in);
}

}  // namespace hif
