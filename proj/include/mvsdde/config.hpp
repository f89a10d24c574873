#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace mvsdde::config {

/// Scalar or flat numeric array; nested tables become dotted keys.
using Value = std::variant<bool, std::int64_t, double, std::string, std::vector<double>>;

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Key/value configuration with [table] sections, the study-manifest format.
/// Supported values: booleans, integers, floats, quoted strings and flat
/// numeric arrays. Later assignments and programmatic sets override earlier
/// ones (flags win over the file).
class Config {
public:
    static Config parse_string(const std::string& text) {
        Config cfg;
        std::istringstream in(text);
        std::string line;
        std::string section;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const std::string stripped = strip_comment(line);
            const std::string trimmed = trim(stripped);
            if (trimmed.empty()) continue;
            if (trimmed.front() == '[') {
                if (trimmed.back() != ']')
                    throw ParseError("config line " + std::to_string(line_no) + ": unterminated section");
                section = trim(trimmed.substr(1, trimmed.size() - 2));
                if (section.empty())
                    throw ParseError("config line " + std::to_string(line_no) + ": empty section name");
                continue;
            }
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw ParseError("config line " + std::to_string(line_no) + ": expected key = value");
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty())
                throw ParseError("config line " + std::to_string(line_no) + ": empty key");
            cfg.values_[section.empty() ? key : section + "." + key] = parse_value(value, line_no);
        }
        return cfg;
    }

    static Config parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ParseError("cannot open config file: " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse_string(ss.str());
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    template <typename T>
    void set(const std::string& key, T value) {
        values_[key] = Value(std::move(value));
    }

    bool get_bool(const std::string& key, bool fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (const auto* b = std::get_if<bool>(&it->second)) return *b;
        throw ParseError("config key '" + key + "' is not a boolean");
    }

    std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (const auto* i = std::get_if<std::int64_t>(&it->second)) return *i;
        throw ParseError("config key '" + key + "' is not an integer");
    }

    double get_double(const std::string& key, double fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (const auto* d = std::get_if<double>(&it->second)) return *d;
        if (const auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
        throw ParseError("config key '" + key + "' is not a number");
    }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
        throw ParseError("config key '" + key + "' is not a string");
    }

    std::vector<double> get_array(const std::string& key, std::vector<double> fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (const auto* a = std::get_if<std::vector<double>>(&it->second)) return *a;
        throw ParseError("config key '" + key + "' is not an array");
    }

    const std::map<std::string, Value>& entries() const { return values_; }

private:
    static std::string trim(const std::string& s) {
        std::size_t b = 0, e = s.size();
        while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
        return s.substr(b, e - b);
    }

    static std::string strip_comment(const std::string& s) {
        bool in_string = false;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '"') in_string = !in_string;
            if (s[i] == '#' && !in_string) return s.substr(0, i);
        }
        return s;
    }

    static Value parse_value(const std::string& raw, std::size_t line_no) {
        if (raw.empty()) throw ParseError("config line " + std::to_string(line_no) + ": empty value");
        if (raw == "true") return true;
        if (raw == "false") return false;
        if (raw.front() == '"') {
            if (raw.size() < 2 || raw.back() != '"')
                throw ParseError("config line " + std::to_string(line_no) + ": unterminated string");
            return raw.substr(1, raw.size() - 2);
        }
        if (raw.front() == '[') {
            if (raw.back() != ']')
                throw ParseError("config line " + std::to_string(line_no) + ": unterminated array");
            std::vector<double> out;
            std::string body = raw.substr(1, raw.size() - 2);
            std::istringstream items(body);
            std::string item;
            while (std::getline(items, item, ',')) {
                const std::string t = trim(item);
                if (t.empty()) continue;
                out.push_back(parse_number(t, line_no));
            }
            return out;
        }
        // Integer when it survives a full integer parse, float otherwise.
        try {
            std::size_t used = 0;
            const long long v = std::stoll(raw, &used);
            if (used == raw.size()) return static_cast<std::int64_t>(v);
        } catch (const std::exception&) {
        }
        return parse_number(raw, line_no);
    }

    static double parse_number(const std::string& raw, std::size_t line_no) {
        try {
            std::size_t used = 0;
            const double v = std::stod(raw, &used);
            if (used != raw.size())
                throw ParseError("config line " + std::to_string(line_no) + ": bad number '" + raw + "'");
            return v;
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception&) {
            throw ParseError("config line " + std::to_string(line_no) + ": bad number '" + raw + "'");
        }
    }

    std::map<std::string, Value> values_;
};

}  // namespace mvsdde::config
