#include "epical/config.hpp"

#include <fstream>
#include <sstream>

#include "epical/errors.hpp"

namespace epical {

namespace {

std::string strip(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

}  // namespace

ConfigMap parse_config(const std::string& text, const std::string& origin) {
    ConfigMap out;
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const std::string body = strip(line);
        if (body.empty() || body[0] == '#' || body[0] == ';' || body[0] == '[') continue;
        const auto eq = body.find('=');
        const std::string where = origin + ":" + std::to_string(line_no);
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        std::string key = strip(body.substr(0, eq));
        for (auto& c : key) {
            if (c == '_') c = '-';
        }
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (!out.emplace(key, unquote(strip(body.substr(eq + 1)))).second) {
            throw ConfigError(where + ": duplicate key '" + key + "'");
        }
    }
    return out;
}

ConfigMap read_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config file not found: " + path.string());
    std::stringstream buf;
    buf << is.rdbuf();
    return parse_config(buf.str(), path.string());
}

std::vector<std::string> config_arguments(const ConfigMap& config) {
    std::vector<std::string> out;
    out.reserve(config.size());
    for (const auto& [key, value] : config) out.push_back("--" + key + "=" + value);
    return out;
}

}  // namespace epical
