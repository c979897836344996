#pragma once

#include "lvggm/sym_matrix.hpp"

#include <iosfwd>
#include <string>

namespace lvggm {

// Matrix text format used repo-wide: first line "p", then p lines of p
// space-separated decimal values. Values are written with shortest
// round-trip precision, so write/read is lossless. The reader symmetrizes
// and validates on ingestion.

void write_matrix_text(std::ostream& os, const SymMatrix& a);
void write_matrix_text(const std::string& path, const SymMatrix& a);

SymMatrix read_matrix_text(std::istream& is);
SymMatrix read_matrix_text(const std::string& path);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

}  // namespace lvggm
