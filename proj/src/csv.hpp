#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "common.hpp"

namespace pricelab {

// Fixed-format numeric printing keeps output files byte-stable across runs.
std::string fmt_double(double v);        // %.10g, for CSV cells
std::string fmt_double_exact(double v);  // %.17g, round-trips exactly (checkpoints)

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);
  ~CsvWriter();

  void comment(const std::string& key, const std::string& value);
  void header(const std::vector<std::string>& cols);
  void row(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
  std::string path_;
};

std::string read_text_file(const std::string& path);
void ensure_directory(const std::string& path);

}  // namespace pricelab
