#include "coop/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace coop {

namespace {

using nlohmann::json;

std::vector<std::string> split_line(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::int64_t parse_cell(const std::string& raw, std::size_t row, std::size_t col) {
  const std::string cell = trim(raw);
  std::int64_t value = 0;
  const auto* first = cell.data();
  const auto* last = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (cell.empty() || ec != std::errc() || ptr != last) {
    throw Error(fmt::format("row {}, column {}: '{}' is not a non-negative integer", row, col, cell));
  }
  if (value < 0) {
    throw Error(fmt::format("row {}, column {}: negative count {}", row, col, value));
  }
  return value;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw Error(fmt::format("write to '{}' failed", path.string()));
}

json vector_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json matrix_json(const MatrixXd& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

VectorXd vector_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(values.data(), static_cast<Index>(values.size()));
}

MatrixXd matrix_from(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return {};
  MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) throw Error("ragged matrix in fit document");
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return m;
}

}  // namespace

CountMatrix parse_count_matrix(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error("empty count matrix file");
  auto header = split_line(line);
  if (header.size() < 2) throw Error("header must hold a corner cell and at least one column name");
  std::vector<std::string> col_names;
  for (std::size_t c = 1; c < header.size(); ++c) col_names.push_back(trim(header[c]));

  std::vector<std::string> row_names;
  std::vector<std::vector<std::int64_t>> body;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line) == "\r") continue;
    auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw Error(fmt::format("line {} has {} cells, expected {}", line_no, cells.size(), header.size()));
    }
    row_names.push_back(trim(cells[0]));
    std::vector<std::int64_t> row;
    for (std::size_t c = 1; c < cells.size(); ++c) row.push_back(parse_cell(cells[c], body.size() + 1, c));
    body.push_back(std::move(row));
  }
  if (body.empty()) throw Error("count matrix has no data rows");

  CountGrid counts(static_cast<Index>(body.size()), static_cast<Index>(col_names.size()));
  for (std::size_t i = 0; i < body.size(); ++i) {
    for (std::size_t j = 0; j < col_names.size(); ++j) {
      counts(static_cast<Index>(i), static_cast<Index>(j)) = body[i][j];
    }
  }
  return {std::move(counts), std::move(row_names), std::move(col_names)};
}

CountMatrix read_count_matrix(const std::filesystem::path& path) {
  try {
    return parse_count_matrix(read_file(path));
  } catch (const Error& e) {
    throw Error(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::string format_count_matrix(const CountMatrix& r) {
  std::string out = "species";
  for (const auto& name : r.col_names()) out += "," + name;
  out += '\n';
  for (Index i = 0; i < r.rows(); ++i) {
    out += r.row_names()[static_cast<std::size_t>(i)];
    for (Index j = 0; j < r.cols(); ++j) out += fmt::format(",{}", r(i, j));
    out += '\n';
  }
  return out;
}

void write_count_matrix(const CountMatrix& r, const std::filesystem::path& path) {
  write_file(path, format_count_matrix(r));
}

void write_binary_matrix(const BinaryMatrix& m, const CountMatrix& like,
                         const std::filesystem::path& path) {
  if (m.rows() != like.rows() || m.cols() != like.cols()) {
    throw Error("binary matrix and name source have different dimensions");
  }
  write_count_matrix(CountMatrix(m.cells().cast<std::int64_t>(), like.row_names(), like.col_names()),
                     path);
}

std::string format_fit(const FitResult& result) {
  json doc;
  doc["model"] = to_string(result.model);
  doc["alpha"] = vector_json(result.params.alpha);
  doc["beta"] = vector_json(result.params.beta);
  doc["pi"] = matrix_json(result.params.pi);
  if (result.model == ModelKind::coop) {
    doc["lambda"] = vector_json(result.params.lambda);
    doc["mu"] = vector_json(result.params.mu);
    doc["g"] = result.params.g;
  }
  doc["row_labels"] = result.row_clustering.one_based();
  doc["col_labels"] = result.col_clustering.one_based();
  doc["icl"] = result.icl;
  doc["seed"] = result.seed;
  doc["missing_prob"] = result.missing_prob ? matrix_json(*result.missing_prob) : json(nullptr);
  return doc.dump(2) + "\n";
}

void write_fit(const FitResult& result, const std::filesystem::path& path) {
  write_file(path, format_fit(result));
}

FitResult parse_fit(const std::string& text) {
  FitResult result;
  try {
    const json doc = json::parse(text);
    result.model = parse_model_kind(doc.at("model").get<std::string>());
    result.params.alpha = vector_from(doc.at("alpha"));
    result.params.beta = vector_from(doc.at("beta"));
    result.params.pi = matrix_from(doc.at("pi"));
    if (result.model == ModelKind::coop) {
      result.params.lambda = vector_from(doc.at("lambda"));
      result.params.mu = vector_from(doc.at("mu"));
      result.params.g = doc.at("g").get<double>();
    }
    result.row_clustering = Clustering::from_one_based(doc.at("row_labels").get<std::vector<int>>(),
                                                       static_cast<int>(result.params.alpha.size()));
    result.col_clustering = Clustering::from_one_based(doc.at("col_labels").get<std::vector<int>>(),
                                                       static_cast<int>(result.params.beta.size()));
    result.icl = doc.at("icl").get<double>();
    result.seed = doc.at("seed").get<std::uint64_t>();
    if (!doc.at("missing_prob").is_null()) result.missing_prob = matrix_from(doc.at("missing_prob"));
  } catch (const json::exception& e) {
    throw Error(fmt::format("malformed fit document: {}", e.what()));
  }
  return result;
}

FitResult read_fit(const std::filesystem::path& path) { return parse_fit(read_file(path)); }

}  // namespace coop
