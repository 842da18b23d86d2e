#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gradsample/error.hpp"

namespace gradsample {

// Flat line-based config: [section] headers, key=value pairs, # comments.
// Keys are stored as "section.key"; pairs before any section keep the bare
// key. Later assignments win.
class KeyValueConfig {
public:
    KeyValueConfig() = default;

    static KeyValueConfig parse_text(const std::string& text, const std::string& where) {
        KeyValueConfig cfg;
        std::istringstream in(text);
        std::string line;
        std::string section;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string t = trim(strip_comment(line));
            if (t.empty()) continue;
            if (t.front() == '[') {
                if (t.back() != ']')
                    throw ParseError(where + ":" + std::to_string(lineno) +
                                     ": unterminated section header");
                section = trim(t.substr(1, t.size() - 2));
                if (section.empty())
                    throw ParseError(where + ":" + std::to_string(lineno) +
                                     ": empty section name");
                continue;
            }
            const auto eq = t.find('=');
            if (eq == std::string::npos)
                throw ParseError(where + ":" + std::to_string(lineno) +
                                 ": expected key=value");
            const std::string key = trim(t.substr(0, eq));
            const std::string value = trim(t.substr(eq + 1));
            if (key.empty())
                throw ParseError(where + ":" + std::to_string(lineno) + ": empty key");
            cfg.values_[section.empty() ? key : section + "." + key] = value;
        }
        return cfg;
    }

    static KeyValueConfig parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ParseError("config: cannot open " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse_text(buf.str(), path);
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    std::string get_string(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw ParseError("config: missing required key " + key);
        return it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        if (!has(key)) return fallback;
        return to_double(key, values_.at(key));
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
        if (!has(key)) return fallback;
        return to_u64(key, values_.at(key));
    }

    bool get_bool(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const std::string& v = values_.at(key);
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw ParseError("config: key " + key + " is not a boolean: " + v);
    }

    // Comma-separated values, empty string means empty list.
    std::vector<std::string> get_list(const std::string& key) const {
        std::vector<std::string> out;
        if (!has(key)) return out;
        const std::string& v = values_.at(key);
        std::string item;
        std::istringstream in(v);
        while (std::getline(in, item, ',')) {
            const std::string t = trim(item);
            if (!t.empty()) out.push_back(t);
        }
        return out;
    }

    std::vector<std::uint64_t> get_u64_list(const std::string& key) const {
        std::vector<std::uint64_t> out;
        for (const auto& s : get_list(key)) out.push_back(to_u64(key, s));
        return out;
    }

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    static std::string strip_comment(const std::string& s) {
        const auto pos = s.find('#');
        return pos == std::string::npos ? s : s.substr(0, pos);
    }

    static std::string trim(const std::string& s) {
        std::size_t a = 0;
        std::size_t b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        return s.substr(a, b - a);
    }

    static double to_double(const std::string& key, const std::string& v) {
        try {
            std::size_t used = 0;
            const double d = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return d;
        } catch (const std::exception&) {
            throw ParseError("config: key " + key + " is not a number: " + v);
        }
    }

    static std::uint64_t to_u64(const std::string& key, const std::string& v) {
        try {
            std::size_t used = 0;
            const unsigned long long u = std::stoull(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return u;
        } catch (const std::exception&) {
            throw ParseError("config: key " + key + " is not an unsigned integer: " + v);
        }
    }

    std::map<std::string, std::string> values_;
};

} // namespace gradsample
