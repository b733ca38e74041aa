#include "io.hpp"

#include "hetlab/errors.hpp"

#include <cstdio>

namespace hetlab::io {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void ensure_directory(const std::filesystem::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), columns_(header.size()) {
  if (!out_) throw IoError("cannot open '" + path.string() + "' for writing");
  for (const auto& h : header) cell(h);
  end_row();
}

void CsvWriter::cell(const std::string& text) {
  if (in_row_ > 0) out_ << ',';
  out_ << text;
  ++in_row_;
}

CsvWriter& CsvWriter::operator<<(double v) {
  cell(format_double(v));
  return *this;
}
CsvWriter& CsvWriter::operator<<(int v) {
  cell(std::to_string(v));
  return *this;
}
CsvWriter& CsvWriter::operator<<(long long v) {
  cell(std::to_string(v));
  return *this;
}
CsvWriter& CsvWriter::operator<<(std::size_t v) {
  cell(std::to_string(v));
  return *this;
}
CsvWriter& CsvWriter::operator<<(const std::string& v) {
  cell(v);
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_) throw IoError("CSV row width mismatch in '" + path_.string() + "'");
  out_ << '\n';
  in_row_ = 0;
  if (!out_) throw IoError("write failed for '" + path_.string() + "'");
}

void CsvWriter::close() {
  out_.close();
  if (out_.fail()) throw IoError("closing '" + path_.string() + "' failed");
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  out.close();
  if (out.fail()) throw IoError("write failed for '" + path.string() + "'");
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

}  // namespace hetlab::io
