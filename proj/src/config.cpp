#include "affectflow/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace affectflow {

namespace {

[[noreturn]] void fail(const std::string& origin, int line, const std::string& what) {
    throw std::runtime_error(origin + ":" + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// Strip an unquoted # comment.
std::string strip_comment(const std::string& s) {
    bool in_string = false;
    for (size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (c == '"' && (i == 0 || s[i - 1] != '\\')) in_string = !in_string;
        if (c == '#' && !in_string) return s.substr(0, i);
    }
    return s;
}

ConfigValue parse_scalar(const std::string& tok, const std::string& origin, int line) {
    if (tok.size() >= 2 && tok.front() == '"' && tok.back() == '"') {
        std::string out;
        for (size_t i = 1; i + 1 < tok.size(); ++i) {
            char c = tok[i];
            if (c == '\\' && i + 2 < tok.size()) {
                char n = tok[++i];
                switch (n) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    default: out += n; break;
                }
            } else {
                out += c;
            }
        }
        return ConfigValue{out};
    }
    if (tok == "true") return ConfigValue{true};
    if (tok == "false") return ConfigValue{false};
    // Integer if it parses fully as one, else float.
    {
        std::int64_t iv = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), iv);
        if (ec == std::errc() && p == tok.data() + tok.size()) return ConfigValue{iv};
    }
    {
        try {
            size_t used = 0;
            double dv = std::stod(tok, &used);
            if (used == tok.size()) return ConfigValue{dv};
        } catch (...) {
        }
    }
    fail(origin, line, "cannot parse value '" + tok + "'");
}

std::vector<std::string> split_array_items(const std::string& inner, const std::string& origin,
                                            int line) {
    std::vector<std::string> items;
    std::string cur;
    bool in_string = false;
    for (size_t i = 0; i < inner.size(); ++i) {
        char c = inner[i];
        if (c == '"' && (i == 0 || inner[i - 1] != '\\')) in_string = !in_string;
        if (c == ',' && !in_string) {
            items.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    std::string last = trim(cur);
    if (!last.empty()) items.push_back(last);
    if (in_string) fail(origin, line, "unterminated string in array");
    return items;
}

} // namespace

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int lineno = 0;
    std::string pending; // continuation buffer for multi-line arrays
    int pending_line = 0;

    auto handle_line = [&](const std::string& logical, int line) {
        std::string s = trim(logical);
        if (s.empty()) return;
        if (s.front() == '[') {
            if (s.back() != ']') fail(origin, line, "malformed section header");
            section = trim(s.substr(1, s.size() - 2));
            if (section.empty()) fail(origin, line, "empty section name");
            return;
        }
        size_t eq = s.find('=');
        if (eq == std::string::npos) fail(origin, line, "expected key = value");
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        if (key.empty()) fail(origin, line, "empty key");
        if (val.empty()) fail(origin, line, "empty value for key '" + key + "'");
        std::string full = section.empty() ? key : section + "." + key;
        if (val.front() == '[') {
            if (val.back() != ']') fail(origin, line, "unterminated array");
            ConfigValue::Array arr;
            for (const auto& item : split_array_items(val.substr(1, val.size() - 2), origin, line))
                arr.push_back(parse_scalar(item, origin, line));
            cfg.values_[full] = ConfigValue{arr};
        } else {
            cfg.values_[full] = parse_scalar(val, origin, line);
        }
    };

    while (std::getline(in, raw)) {
        ++lineno;
        std::string s = strip_comment(raw);
        if (!pending.empty()) {
            pending += " " + trim(s);
            if (trim(s).empty()) continue;
            if (pending.find(']') == std::string::npos) continue;
            handle_line(pending, pending_line);
            pending.clear();
            continue;
        }
        std::string t = trim(s);
        if (t.empty()) continue;
        // Multi-line array: an '=' line whose array bracket is still open.
        size_t eq = t.find('=');
        if (eq != std::string::npos) {
            std::string val = trim(t.substr(eq + 1));
            if (!val.empty() && val.front() == '[' && val.find(']') == std::string::npos) {
                pending = t;
                pending_line = lineno;
                continue;
            }
        }
        handle_line(t, lineno);
    }
    if (!pending.empty()) fail(origin, pending_line, "unterminated array");
    return cfg;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str(), path);
}

const ConfigValue& Config::at(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end())
        throw std::runtime_error(origin_ + ": missing required key '" + key + "'");
    return it->second;
}

std::string Config::get_string(const std::string& key) const {
    const auto& cv = at(key);
    if (!cv.is_string()) throw std::runtime_error(origin_ + ": key '" + key + "' is not a string");
    return std::get<std::string>(cv.v);
}

std::string Config::get_string_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

std::int64_t Config::get_int(const std::string& key) const {
    const auto& cv = at(key);
    if (std::holds_alternative<std::int64_t>(cv.v)) return std::get<std::int64_t>(cv.v);
    throw std::runtime_error(origin_ + ": key '" + key + "' is not an integer");
}

std::int64_t Config::get_int_or(const std::string& key, std::int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
}

double Config::get_double(const std::string& key) const {
    const auto& cv = at(key);
    if (std::holds_alternative<double>(cv.v)) return std::get<double>(cv.v);
    if (std::holds_alternative<std::int64_t>(cv.v))
        return static_cast<double>(std::get<std::int64_t>(cv.v));
    throw std::runtime_error(origin_ + ": key '" + key + "' is not a number");
}

double Config::get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

bool Config::get_bool_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& cv = at(key);
    if (std::holds_alternative<bool>(cv.v)) return std::get<bool>(cv.v);
    throw std::runtime_error(origin_ + ": key '" + key + "' is not a boolean");
}

std::vector<std::string> Config::get_string_array(const std::string& key) const {
    const auto& cv = at(key);
    if (!cv.is_array()) throw std::runtime_error(origin_ + ": key '" + key + "' is not an array");
    std::vector<std::string> out;
    for (const auto& item : std::get<ConfigValue::Array>(cv.v)) {
        if (!item.is_string())
            throw std::runtime_error(origin_ + ": array '" + key + "' has a non-string item");
        out.push_back(std::get<std::string>(item.v));
    }
    return out;
}

std::vector<std::string> Config::get_string_array_or(const std::string& key,
                                                     std::vector<std::string> fallback) const {
    return has(key) ? get_string_array(key) : std::move(fallback);
}

} // namespace affectflow
