#include "ilt-lab/config.hpp"

#include <fstream>
#include <sstream>

namespace iltlab {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

Config Config::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_string(buffer.str());
}

Config Config::from_string(const std::string& text) {
    Config config;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        config.values_[key] = value;
    }
    return config;
}

std::string Config::get_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing config key: " + key);
    return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key) const {
    const std::string raw = get_string(key);
    try {
        std::size_t used = 0;
        const double v = std::stod(raw, &used);
        if (used != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': not a number: " + raw);
    }
}

double Config::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long long Config::get_int(const std::string& key) const {
    const std::string raw = get_string(key);
    try {
        std::size_t used = 0;
        const long long v = std::stoll(raw, &used);
        if (used != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': not an integer: " + raw);
    }
}

long long Config::get_int(const std::string& key, long long fallback) const {
    return has(key) ? get_int(key) : fallback;
}

std::vector<double> Config::get_list(const std::string& key) const {
    const std::string raw = get_string(key);
    std::vector<double> out;
    std::istringstream in(raw);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': not a number list: " + raw);
        }
    }
    if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
    return out;
}

std::vector<double> Config::get_list(const std::string& key, std::vector<double> fallback) const {
    return has(key) ? get_list(key) : fallback;
}

}  // namespace iltlab
