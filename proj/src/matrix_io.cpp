#include "lvggm/matrix_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

namespace lvggm {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc())
    throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

void write_matrix_text(std::ostream& os, const SymMatrix& a) {
  const int p = a.dim();
  os << p << "\n";
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      if (j) os << ' ';
      os << format_double(a(i, j));
    }
    os << "\n";
  }
}

void write_matrix_text(const std::string& path, const SymMatrix& a) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_matrix_text: cannot open " + path);
  write_matrix_text(f, a);
  if (!f) throw std::runtime_error("write_matrix_text: write failed for " + path);
}

SymMatrix read_matrix_text(std::istream& is) {
  int p = 0;
  if (!(is >> p) || p < 1)
    throw std::runtime_error("read_matrix_text: bad or missing dimension line");
  Matrix m(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      if (!(is >> m(i, j)))
        throw std::runtime_error("read_matrix_text: truncated matrix body");
  return SymMatrix::from_dense(m);
}

SymMatrix read_matrix_text(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("read_matrix_text: cannot open " + path);
  return read_matrix_text(f);
}

}  // namespace lvggm
