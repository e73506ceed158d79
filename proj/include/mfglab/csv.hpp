#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "mfglab/errors.hpp"
#include "mfglab/util.hpp"

namespace mfglab {

// Deterministic CSV emitter: fixed "%.12g" float formatting, '\n' endings.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw ConfigError("cannot open CSV output: " + path);
  }

  void header(const std::vector<std::string>& cols) { raw_row(cols); }

  void row(const std::vector<double>& vals) {
    std::vector<std::string> cells;
    cells.reserve(vals.size());
    for (double v : vals) cells.push_back(fmt_g(v));
    raw_row(cells);
  }

  void raw_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

}  // namespace mfglab
