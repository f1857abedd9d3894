#pragma once

// Dense matrix serialization.
//
// MatrixMarket: "%%MatrixMarket matrix array real general", a size line
// "rows cols", then entries in column-major order, one per line.
// JSON: {"rows": r, "cols": c, "data": [row-major entries]}.
// Values are written with 17 significant digits.

#include <filesystem>
#include <iosfwd>
#include <string>

#include "compatamg/linalg.hpp"

namespace compatamg {

void write_matrix_market(std::ostream& os, const Matrix& a);
Matrix read_matrix_market(std::istream& is);

std::string matrix_to_json(const Matrix& a);
Matrix matrix_from_json(const std::string& text);

/// Dispatches on the extension: ".json" uses the JSON layout, anything else
/// MatrixMarket.
void save_matrix(const std::filesystem::path& path, const Matrix& a);
Matrix load_matrix(const std::filesystem::path& path);

}  // namespace compatamg
