#ifndef ILT_LAB_CONFIG_HPP
#define ILT_LAB_CONFIG_HPP

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace iltlab {

/// Raised for malformed configs or option values; mapped to exit status 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Flat `key = value` configuration with `#` comments. Values are parsed on
/// demand; lists are comma-separated.
class Config {
public:
    Config() = default;

    static Config from_file(const std::string& path);
    static Config from_string(const std::string& text);

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key) const;
    long long get_int(const std::string& key, long long fallback) const;
    std::vector<double> get_list(const std::string& key) const;
    std::vector<double> get_list(const std::string& key, std::vector<double> fallback) const;

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

}  // namespace iltlab

#endif
