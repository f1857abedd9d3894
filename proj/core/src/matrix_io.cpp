#include "compatamg/matrix_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace compatamg {

using nlohmann::json;

namespace {

constexpr const char* kBanner = "%%MatrixMarket matrix array real general";

void require_finite(const Matrix& a, const char* where) {
  if (!a.allFinite()) throw ConfigError(where, "matrix contains non-finite entries");
}

}  // namespace

void write_matrix_market(std::ostream& os, const Matrix& a) {
  require_finite(a, "matrix");
  const auto old_prec = os.precision(17);
  os << kBanner << '\n' << a.rows() << ' ' << a.cols() << '\n';
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) os << a(i, j) << '\n';
  }
  os.precision(old_prec);
}

Matrix read_matrix_market(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("matrix", "empty MatrixMarket stream");
  std::istringstream banner(line);
  std::string head, object, format, field, symmetry;
  banner >> head >> object >> format >> field >> symmetry;
  if (head != "%%MatrixMarket" || object != "matrix" || format != "array") {
    throw ConfigError("matrix", "expected a dense MatrixMarket 'matrix array' header");
  }
  if (field != "real" && field != "double" && field != "integer") {
    throw ConfigError("matrix", "unsupported MatrixMarket field '" + field + "'");
  }
  if (!symmetry.empty() && symmetry != "general") {
    throw ConfigError("matrix", "only 'general' MatrixMarket arrays are supported");
  }
  while (std::getline(is, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  std::istringstream size_line(line);
  Index rows = 0, cols = 0;
  if (!(size_line >> rows >> cols) || rows <= 0 || cols <= 0) {
    throw ConfigError("matrix", "bad MatrixMarket size line");
  }
  Matrix a(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) {
      if (!(is >> a(i, j))) throw ConfigError("matrix", "MatrixMarket data ends early");
    }
  }
  require_finite(a, "matrix");
  return a;
}

std::string matrix_to_json(const Matrix& a) {
  require_finite(a, "matrix");
  // Emit by hand so every value carries 17 significant digits.
  std::ostringstream os;
  os << std::setprecision(17);
  os << "{\"rows\": " << a.rows() << ", \"cols\": " << a.cols() << ", \"data\": [";
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      if (i || j) os << ", ";
      os << a(i, j);
    }
  }
  os << "]}";
  return os.str();
}

Matrix matrix_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("matrix", std::string("invalid JSON: ") + e.what());
  }
  for (const char* key : {"rows", "cols", "data"}) {
    if (!j.contains(key)) throw ConfigError(std::string("matrix.") + key, "missing");
  }
  if (!j["rows"].is_number_integer() || !j["cols"].is_number_integer()) {
    throw ConfigError("matrix.rows", "rows and cols must be integers");
  }
  const auto rows = j["rows"].get<Index>();
  const auto cols = j["cols"].get<Index>();
  if (rows <= 0 || cols <= 0) throw ConfigError("matrix.rows", "dimensions must be positive");
  const auto& data = j["data"];
  if (!data.is_array() || static_cast<Index>(data.size()) != rows * cols) {
    throw ConfigError("matrix.data", "expected rows*cols numbers");
  }
  Matrix a(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j2 = 0; j2 < cols; ++j2) {
      const auto& v = data[static_cast<std::size_t>(i * cols + j2)];
      if (!v.is_number()) throw ConfigError("matrix.data", "non-numeric entry");
      a(i, j2) = v.get<double>();
    }
  }
  require_finite(a, "matrix.data");
  return a;
}

void save_matrix(const std::filesystem::path& path, const Matrix& a) {
  std::ofstream os(path);
  if (!os) throw ConfigError(path.string(), "cannot open for writing");
  if (path.extension() == ".json") {
    os << matrix_to_json(a) << '\n';
  } else {
    write_matrix_market(os, a);
  }
}

Matrix load_matrix(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path.string(), "cannot open matrix file");
  if (path.extension() == ".json") {
    std::stringstream buf;
    buf << is.rdbuf();
    return matrix_from_json(buf.str());
  }
  return read_matrix_market(is);
}

}  // namespace compatamg
