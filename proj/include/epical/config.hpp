#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace epical {

/// Flat `key = value` run configuration. Lines starting with '#' or ';' are
/// comments; `[section]` headers are ignored; values may be quoted.
using ConfigMap = std::map<std::string, std::string>;

/// Throws ConfigError on malformed lines, duplicate keys or a missing file.
ConfigMap read_config(const std::filesystem::path& path);
ConfigMap parse_config(const std::string& text, const std::string& origin = "config");

/// Command-line tokens `--key=value` for the entries of `config`, in key order.
std::vector<std::string> config_arguments(const ConfigMap& config);

}  // namespace epical
