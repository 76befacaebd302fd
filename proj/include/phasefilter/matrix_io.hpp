#pragma once

// Text format: first line "n m", then n*m lines "re im" in row-major order.

#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "phasefilter/linalg.hpp"

namespace phasefilter {

inline void write_matrix(std::ostream& os, const ComplexMatrix& m) {
  os << m.rows() << ' ' << m.cols() << '\n';
  os << std::setprecision(17);
  for (const auto& z : m.entries()) os << z.real() << ' ' << z.imag() << '\n';
  if (!os) throw IoError("failed writing matrix");
}

inline ComplexMatrix read_matrix(std::istream& is) {
  std::size_t rows = 0, cols = 0;
  if (!(is >> rows >> cols)) throw IoError("matrix header must be 'n m'");
  if (rows == 0 || cols == 0) throw IoError("matrix dimensions must be positive");
  if (rows > 1'000'000 / cols) throw IoError("matrix too large");
  std::vector<cplx> entries(rows * cols);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    double re = 0.0, im = 0.0;
    if (!(is >> re >> im)) throw IoError("matrix body ended after " + std::to_string(i) + " entries");
    entries[i] = {re, im};
  }
  std::string extra;
  if (is >> extra) throw IoError("trailing data after matrix body");
  return ComplexMatrix(rows, cols, std::move(entries));
}

inline void save_matrix(const std::string& path, const ComplexMatrix& m) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  write_matrix(os, m);
}

inline ComplexMatrix load_matrix(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  return read_matrix(is);
}

inline void save_vector(const std::string& path, const ComplexVector& v) {
  ComplexMatrix m(v.dim(), 1);
  m.set_column(0, v);
  save_matrix(path, m);
}

}  // namespace phasefilter
