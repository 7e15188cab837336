#include "begp/csv.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace begp {

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string cell = line.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    const std::size_t first = cell.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
      cell.clear();
    } else {
      const std::size_t last = cell.find_last_not_of(" \t\r");
      cell = cell.substr(first, last - first + 1);
    }
    cells.push_back(std::move(cell));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

double parse_real(const std::string& cell, const std::string& where) {
  double value = 0.0;
  const char* begin = cell.c_str();
  const auto res = std::from_chars(begin, begin + cell.size(), value);
  if (res.ec != std::errc() || res.ptr != begin + cell.size() ||
      !std::isfinite(value))
    throw CsvError(where + ": cell '" + cell + "' is not a finite real");
  return value;
}

MultiTaskData parse_dataset_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw CsvError("dataset: empty file");
  const std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 2 || header.back() != "y")
    throw CsvError("dataset: header must end with a y column");

  std::size_t n_task = 0;
  while (n_task < header.size() - 1 &&
         header[n_task].rfind("task", 0) == 0)
    ++n_task;
  if (n_task == 0)
    throw CsvError("dataset: header needs at least one task-prefixed column");
  const std::size_t n_x = header.size() - 1 - n_task;
  if (n_x == 0) throw CsvError("dataset: header has no x columns");

  MultiTaskData data;
  data.feature_names.assign(header.begin(),
                            header.begin() + static_cast<long>(n_task));

  std::vector<std::vector<double>> x_rows;
  std::vector<double> y_rows;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const std::string where = "dataset row " + std::to_string(row);
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw CsvError(where + ": expected " + std::to_string(header.size()) +
                     " cells, found " + std::to_string(cells.size()));
    TaskKey key;
    for (std::size_t j = 0; j < n_task; ++j) {
      if (cells[j].empty()) throw CsvError(where + ": empty task token");
      key.push_back(cells[j]);
    }
    std::vector<double> x(n_x);
    for (std::size_t j = 0; j < n_x; ++j)
      x[j] = parse_real(cells[n_task + j], where);
    data.tasks.push_back(std::move(key));
    x_rows.push_back(std::move(x));
    y_rows.push_back(parse_real(cells.back(), where));
  }
  if (x_rows.empty()) throw CsvError("dataset: no data rows");

  data.x = Matrix(static_cast<Eigen::Index>(x_rows.size()),
                  static_cast<Eigen::Index>(n_x));
  data.y = Vector(static_cast<Eigen::Index>(y_rows.size()));
  for (std::size_t i = 0; i < x_rows.size(); ++i) {
    for (std::size_t j = 0; j < n_x; ++j)
      data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          x_rows[i][j];
    data.y[static_cast<Eigen::Index>(i)] = y_rows[i];
  }
  data.validate();
  return data;
}

MultiTaskData read_dataset_file(const std::string& path) {
  return parse_dataset_csv(read_text_file(path));
}

std::string dataset_to_csv(const MultiTaskData& data) {
  std::string out;
  for (const std::string& name : data.feature_names) out += name + ",";
  for (Eigen::Index j = 0; j < data.x.cols(); ++j)
    out += "x" + std::to_string(j + 1) + ",";
  out += "y\n";
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (const std::string& token : data.tasks[static_cast<std::size_t>(i)])
      out += token + ",";
    for (Eigen::Index j = 0; j < data.x.cols(); ++j)
      out += format_double(data.x(i, j)) + ",";
    out += format_double(data.y[i]) + "\n";
  }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CsvError("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CsvError("cannot write file: " + path);
  out << text;
  if (!out) throw CsvError("write failed: " + path);
}

}  // namespace begp
