#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace affectflow {

/// Scalar or array value from a config file.
struct ConfigValue {
    using Array = std::vector<ConfigValue>;
    std::variant<bool, std::int64_t, double, std::string, Array> v;

    bool is_string() const { return std::holds_alternative<std::string>(v); }
    bool is_array() const { return std::holds_alternative<Array>(v); }
};

/// Parsed key/value config. Keys are flattened as "section.key".
///
/// The accepted syntax is the TOML subset the project ships: [section]
/// headers, `key = value` pairs, strings in double quotes, integers, floats,
/// booleans, flat arrays, and # comments.
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key) const;
    std::string get_string_or(const std::string& key, const std::string& fallback) const;
    std::int64_t get_int(const std::string& key) const;
    std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double fallback) const;
    bool get_bool_or(const std::string& key, bool fallback) const;
    std::vector<std::string> get_string_array(const std::string& key) const;
    std::vector<std::string> get_string_array_or(const std::string& key,
                                                 std::vector<std::string> fallback) const;

    const std::map<std::string, ConfigValue>& values() const { return values_; }

private:
    const ConfigValue& at(const std::string& key) const;
    std::map<std::string, ConfigValue> values_;
    std::string origin_;
};

} // namespace affectflow
