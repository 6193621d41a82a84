#include "late/dataset_io.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <string_view>

#include "late/error.h"

namespace late {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      return fields;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

bool is_missing(std::string_view field) { return field.empty() || field == "NA"; }

double parse_real(std::string_view field, std::size_t row, const std::string& column) {
  if (is_missing(field)) {
    throw DataError(ErrorCode::kMissingValue, row, column,
                    "missing value in column '" + column + "' at row " +
                        std::to_string(row));
  }
  if (field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || end != field.data() + field.size() || !std::isfinite(value)) {
    throw DataError(ErrorCode::kNonFiniteValue, row, column,
                    "'" + std::string(field) + "' in column '" + column + "' at row " +
                        std::to_string(row) + " is not a finite number");
  }
  return value;
}

int parse_binary(std::string_view field, std::size_t row, const std::string& column) {
  const double value = parse_real(field, row, column);
  if (value != 0.0 && value != 1.0) {
    throw DataError(ErrorCode::kNonBinaryValue, row, column,
                    "column '" + column + "' at row " + std::to_string(row) +
                        " must be 0 or 1, got '" + std::string(field) + "'");
  }
  return static_cast<int>(value);
}

std::string parse_label(std::string_view field, std::size_t row, const std::string& column) {
  if (is_missing(field)) {
    throw DataError(ErrorCode::kMissingValue, row, column,
                    "missing value in column '" + column + "' at row " +
                        std::to_string(row));
  }
  return std::string(field);
}

}  // namespace

Dataset parse_dataset(std::istream& in, const ColumnMap& columns) {
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) {
    throw DataError(ErrorCode::kIoError, 0, "", "input has no header row");
  }
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::map<std::string, std::size_t, std::less<>> index;
  const auto header = split(line);
  for (std::size_t c = 0; c < header.size(); ++c) {
    index.emplace(std::string(header[c]), c);
  }
  auto locate = [&](const std::string& name) {
    const auto it = index.find(name);
    if (it == index.end()) {
      throw DataError(ErrorCode::kMissingColumn, 0, name,
                      "column '" + name + "' not found in header");
    }
    return it->second;
  };
  const std::size_t y_col = locate(columns.outcome);
  const std::size_t d_col = locate(columns.receipt);
  const std::size_t t_col = locate(columns.assignment);
  std::vector<std::size_t> x_cols;
  for (const std::string& name : columns.covariates) x_cols.push_back(locate(name));
  const std::optional<std::size_t> b_col =
      columns.block ? std::optional(locate(*columns.block)) : std::nullopt;
  const std::optional<std::size_t> c_col =
      columns.cluster ? std::optional(locate(*columns.cluster)) : std::nullopt;
  const std::optional<std::size_t> w_col =
      columns.weight ? std::optional(locate(*columns.weight)) : std::nullopt;

  Dataset data;
  std::vector<double> xs;
  if (b_col) data.block_id.emplace();
  if (c_col) data.cluster_id.emplace();
  if (w_col) data.weight.emplace();
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split(line);
    if (fields.size() != header.size()) {
      throw DataError(ErrorCode::kMalformedRow, row, "",
                      "row " + std::to_string(row) + " has " +
                          std::to_string(fields.size()) + " fields, header has " +
                          std::to_string(header.size()));
    }
    data.y.push_back(parse_real(fields[y_col], row, columns.outcome));
    data.d.push_back(parse_binary(fields[d_col], row, columns.receipt));
    data.t.push_back(parse_binary(fields[t_col], row, columns.assignment));
    for (std::size_t c = 0; c < x_cols.size(); ++c) {
      xs.push_back(parse_real(fields[x_cols[c]], row, columns.covariates[c]));
    }
    if (b_col) data.block_id->push_back(parse_label(fields[*b_col], row, *columns.block));
    if (c_col) {
      data.cluster_id->push_back(parse_label(fields[*c_col], row, *columns.cluster));
    }
    if (w_col) {
      const double w = parse_real(fields[*w_col], row, *columns.weight);
      if (!(w > 0.0)) {
        throw DataError(ErrorCode::kDomainError, row, *columns.weight,
                        "weight at row " + std::to_string(row) + " must be positive");
      }
      data.weight->push_back(w);
    }
  }
  data.x = Matrix(row, x_cols.size());
  for (std::size_t r = 0; r < row; ++r) {
    for (std::size_t c = 0; c < x_cols.size(); ++c) data.x(r, c) = xs[r * x_cols.size() + c];
  }
  const std::size_t n1 = data.treated_count();
  if (n1 == 0 || n1 == row) {
    throw DataError(ErrorCode::kEmptyArm, 0, columns.assignment,
                    "both assignment arms must contain rows");
  }
  return data;
}

Dataset load_dataset(const std::filesystem::path& path, const ColumnMap& columns) {
  std::ifstream in(path);
  if (!in) {
    throw LateError(ErrorCode::kIoError, "cannot open '" + path.string() + "'");
  }
  return parse_dataset(in, columns);
}

}  // namespace late
