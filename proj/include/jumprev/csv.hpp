// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace jumprev {

/// Fixed 17-significant-digit formatting ("%.17g"); round-trips exactly.
std::string format_number(double v);

/// Header-first CSV writer.  Numbers use format_number.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);
  void header(const std::vector<std::string>& columns);
  void row(const std::vector<double>& values);
  void row_text(const std::vector<std::string>& cells);
  void close();

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t columns_ = 0;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Reads an all-numeric CSV with a header row.
CsvTable read_csv(const std::string& path);

}  // namespace jumprev
