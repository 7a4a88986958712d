#include "csv.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>

namespace pricelab {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string fmt_double_exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path) : path_(path) {
  out_.open(path, std::ios::binary);
  if (!out_) fail(Errc::io, "cannot open for writing: " + path);
}

CsvWriter::~CsvWriter() = default;

void CsvWriter::comment(const std::string& key, const std::string& value) {
  out_ << "# " << key << "=" << value << "\n";
}

void CsvWriter::header(const std::vector<std::string>& cols) { row(cols); }

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ",";
    out_ << cells[i];
  }
  out_ << "\n";
  if (!out_) fail(Errc::io, "write failed: " + path_);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) fail(Errc::io, "cannot create directory " + path + ": " + ec.message());
}

}  // namespace pricelab
