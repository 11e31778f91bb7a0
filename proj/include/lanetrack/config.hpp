#pragma once

#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lanetrack {

/// Parse/validation failure that knows which line it came from.
struct ConfigError : std::runtime_error {
    int line;
    ConfigError(int line_no, const std::string& message)
        : std::runtime_error("line " + std::to_string(line_no) + ": " + message), line(line_no) {}
};

/// Flat `key = value` file: one pair per line, '#' comments, repeated keys
/// form lists. Entry order is preserved; consumers mark entries used so
/// unknown keys can be reported with their line numbers.
class KeyValueConfig {
public:
    struct Entry {
        std::string key;
        std::string value;
        int line = 0;
        mutable bool used = false;
    };

    static KeyValueConfig parse(std::istream& in) {
        KeyValueConfig cfg;
        std::string raw;
        int line_no = 0;
        while (std::getline(in, raw)) {
            ++line_no;
            std::string line = raw;
            if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw ConfigError(line_no, "expected 'key = value'");
            Entry e;
            e.key = trim(line.substr(0, eq));
            e.value = trim(line.substr(eq + 1));
            e.line = line_no;
            if (e.key.empty()) throw ConfigError(line_no, "empty key");
            cfg.entries_.push_back(std::move(e));
        }
        return cfg;
    }

    static KeyValueConfig parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config file " + path);
        return parse(in);
    }

    static KeyValueConfig parse_string(const std::string& text) {
        std::istringstream in(text);
        return parse(in);
    }

    const std::vector<Entry>& entries() const { return entries_; }

    /// All values for a (possibly repeated) key, marked used.
    std::vector<const Entry*> all(const std::string& key) const {
        std::vector<const Entry*> out;
        for (const auto& e : entries_)
            if (e.key == key) {
                e.used = true;
                out.push_back(&e);
            }
        return out;
    }

    bool has(const std::string& key) const {
        for (const auto& e : entries_)
            if (e.key == key) return true;
        return false;
    }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        const auto hits = all(key);
        return hits.empty() ? fallback : hits.back()->value;
    }

    double get_double(const std::string& key, double fallback) const {
        const auto hits = all(key);
        if (hits.empty()) return fallback;
        return parse_double(*hits.back());
    }

    long get_long(const std::string& key, long fallback) const {
        const auto hits = all(key);
        if (hits.empty()) return fallback;
        return parse_long(*hits.back());
    }

    /// First entry that no consumer touched, or nullptr.
    const Entry* first_unused() const {
        for (const auto& e : entries_)
            if (!e.used) return &e;
        return nullptr;
    }

    static double parse_double(const Entry& e) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(e.value, &pos);
            if (pos != e.value.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw ConfigError(e.line, "'" + e.key + "' expects a number, got '" + e.value + "'");
        }
    }

    static long parse_long(const Entry& e) {
        try {
            std::size_t pos = 0;
            const long v = std::stol(e.value, &pos);
            if (pos != e.value.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw ConfigError(e.line, "'" + e.key + "' expects an integer, got '" + e.value + "'");
        }
    }

    /// Whitespace-separated fields of a list-valued entry.
    static std::vector<std::string> fields(const Entry& e) {
        std::vector<std::string> out;
        std::istringstream in(e.value);
        std::string tok;
        while (in >> tok) out.push_back(tok);
        return out;
    }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    std::vector<Entry> entries_;
};

}  // namespace lanetrack
