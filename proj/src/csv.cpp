// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

#include "jumprev/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "jumprev/errors.hpp"

namespace jumprev {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
}

void CsvWriter::header(const std::vector<std::string>& columns) {
  columns_ = columns.size();
  row_text(columns);
}

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_number(v));
  row_text(cells);
}

void CsvWriter::row_text(const std::vector<std::string>& cells) {
  if (columns_ != 0 && cells.size() != columns_) {
    throw Error(ErrorKind::InvalidArgument, path_ + ": row width does not match the header");
  }
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  line += '\n';
  out_ << line;
}

void CsvWriter::close() {
  out_.close();
  if (!out_) throw Error(ErrorKind::Io, "error writing '" + path_ + "'");
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Io, path + ": empty file");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.header.push_back(cell);
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    const char* p = line.c_str();
    for (;;) {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p) throw Error(ErrorKind::Io, path + ":" + std::to_string(lineno) + ": not a number");
      row.push_back(v);
      if (*end == ',') {
        p = end + 1;
      } else if (*end == '\0' || *end == '\r') {
        break;
      } else {
        throw Error(ErrorKind::Io, path + ":" + std::to_string(lineno) + ": malformed cell");
      }
    }
    if (row.size() != table.header.size()) {
      throw Error(ErrorKind::Io, path + ":" + std::to_string(lineno) + ": wrong number of cells");
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace jumprev
