#include "config_json.hpp"

namespace hetlab::cli {

namespace {

std::string scalar_text(const nlohmann::json& v, const std::string& key) {
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  // dump() keeps every digit of a double; the stream operator would not.
  if (v.is_number()) return v.dump();
  if (v.is_string()) return v.get<std::string>();
  throw CLI::ConversionError("config key '" + key + "' must be a number, string, boolean or array");
}

nlohmann::json option_value(const CLI::Option* opt, bool default_also) {
  if (opt->get_type_size() == 0) {
    if (opt->count() > 0) return true;
    return default_also ? nlohmann::json(false) : nlohmann::json();
  }
  if (opt->count() == 1) return opt->results().at(0);
  if (opt->count() > 1) return opt->results();
  if (default_also && !opt->get_default_str().empty()) return opt->get_default_str();
  return nlohmann::json();
}

nlohmann::json dump_app(const CLI::App* app, bool default_also) {
  nlohmann::json j = nlohmann::json::object();
  for (const CLI::Option* opt : app->get_options({})) {
    if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
    auto v = option_value(opt, default_also);
    if (!v.is_null()) j[opt->get_lnames()[0]] = v;
  }
  for (const CLI::App* sub : app->get_subcommands({})) j[sub->get_name()] = dump_app(sub, default_also);
  return j;
}

}  // namespace

std::string ConfigJSON::to_config(const CLI::App* app, bool default_also, bool, std::string) const {
  return dump_app(app, default_also).dump(2);
}

std::vector<CLI::ConfigItem> ConfigJSON::from_config(std::istream& input) const {
  nlohmann::json doc;
  try {
    input >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
  }
  return items(doc);
}

std::vector<CLI::ConfigItem> ConfigJSON::items(const nlohmann::json& doc) {
  if (!doc.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
  const bool manifest = doc.contains("tool") && doc.contains("config");
  const nlohmann::json& root = manifest ? doc.at("config") : doc;
  if (!root.is_object()) throw CLI::ConversionError("manifest 'config' must be a JSON object");
  std::vector<CLI::ConfigItem> out;
  collect(root, {}, out);
  return out;
}

void ConfigJSON::collect(const nlohmann::json& obj, const std::vector<std::string>& parents,
                         std::vector<CLI::ConfigItem>& out) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const auto& v = it.value();
    if (v.is_object()) {
      auto path = parents;
      path.push_back(it.key());
      // Section open and close markers; they select the subcommand.
      out.emplace_back();
      out.back().parents = path;
      out.back().name = "++";
      collect(v, path, out);
      out.emplace_back();
      out.back().parents = path;
      out.back().name = "--";
      continue;
    }
    CLI::ConfigItem item;
    item.parents = parents;
    item.name = it.key();
    if (v.is_array()) {
      for (const auto& e : v) item.inputs.push_back(scalar_text(e, it.key()));
    } else if (v.is_null()) {
      continue;
    } else {
      item.inputs.push_back(scalar_text(v, it.key()));
    }
    out.push_back(std::move(item));
  }
}

}  // namespace hetlab::cli
