#pragma once

// JSON configuration files for CLI11. Top-level keys are global options;
// nested objects are subcommand sections and select that subcommand, so a
// file such as {"circle": {"sweep": {"komega": 1000}}} runs `circle sweep`.
// A run manifest ({"tool": ..., "config": {...}}) is accepted as is.

#include <CLI11.hpp>
#include <json.hpp>

#include <istream>
#include <string>
#include <vector>

namespace hetlab::cli {

class ConfigJSON : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool write_description,
                        std::string prefix) const override;

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override;

  /// Items for an already parsed document.
  static std::vector<CLI::ConfigItem> items(const nlohmann::json& doc);

 private:
  static void collect(const nlohmann::json& obj, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& out);
};

}  // namespace hetlab::cli
