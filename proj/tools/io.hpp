#pragma once

// Output plumbing shared by the subcommands. Doubles are written with 17
// significant digits so every value round-trips exactly.

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace hetlab::io {

std::string format_double(double v);

void ensure_directory(const std::filesystem::path& dir);

/// CSV with LF line endings. Throws IoError if the file cannot be written.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  CsvWriter& operator<<(double v);
  CsvWriter& operator<<(int v);
  CsvWriter& operator<<(long long v);
  CsvWriter& operator<<(std::size_t v);
  CsvWriter& operator<<(const std::string& v);
  void end_row();
  void close();

 private:
  void cell(const std::string& text);

  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace hetlab::io
