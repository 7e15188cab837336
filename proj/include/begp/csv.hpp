#pragma once

#include <string>
#include <vector>

#include "begp/surrogate.hpp"

namespace begp {

// Raised on malformed CSV input; the message names the offending row.
struct CsvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shortest round-trip decimal form of a double ("." separator, locale-free).
std::string format_double(double value);

// Strict dataset reader.  Header row required; columns are one or more
// task-prefixed string columns, then the real inputs, then a final `y`.
// Every x and y cell must parse fully as a finite real.
MultiTaskData parse_dataset_csv(const std::string& text);
MultiTaskData read_dataset_file(const std::string& path);

std::string dataset_to_csv(const MultiTaskData& data);

// Cells of one line split on commas, surrounding whitespace trimmed.
std::vector<std::string> split_csv_line(const std::string& line);

// Full-string parse to a finite double; throws CsvError mentioning `where`.
double parse_real(const std::string& cell, const std::string& where);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace begp
