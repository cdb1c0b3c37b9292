#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

// Minimal reader for the experiment CSV: '#' lines are metadata, the first
// other line holds the column names.
struct ParsedCsv {
  std::map<std::string, std::string> meta;
  std::vector<std::string> columns;
  std::vector<std::map<std::string, std::string>> rows;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline ParsedCsv parse_csv(const std::string& text) {
  ParsedCsv out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) out.meta[line.substr(2, eq - 2)] = line.substr(eq + 1);
      continue;
    }
    const auto cells = split_csv_line(line);
    if (out.columns.empty()) {
      out.columns = cells;
      continue;
    }
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < out.columns.size() && i < cells.size(); ++i) row[out.columns[i]] = cells[i];
    out.rows.push_back(row);
  }
  return out;
}
