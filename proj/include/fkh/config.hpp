#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fkh/errors.hpp"

namespace fkh {

/**
 * Flat key = value configuration file.  One pair per line, '#' starts a
 * comment, blank lines are skipped, keys may not repeat.  Every key must be
 * consumed by a getter before reject_unknown(), so misspelled keys fail
 * loudly instead of being silently ignored.
 */
class ConfigFile {
 public:
    ConfigFile() = default;

    static ConfigFile load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        ConfigFile cfg;
        cfg.path_ = path;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            auto eq = trimmed.find('=');
            if (eq == std::string::npos) {
                throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
            }
            std::string key = trim(trimmed.substr(0, eq));
            std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty()) {
                throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
            }
            if (cfg.find(key) >= 0) {
                throw ConfigError(path + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
            }
            cfg.entries_.push_back({key, value});
            cfg.used_.push_back(false);
        }
        return cfg;
    }

    bool has(const std::string& key) const { return find(key) >= 0; }

    std::string get_string(const std::string& key, const std::string& fallback) {
        int i = find(key);
        if (i < 0) return fallback;
        used_[i] = true;
        return entries_[i].second;
    }

    double get_double(const std::string& key, double fallback) {
        int i = find(key);
        if (i < 0) return fallback;
        used_[i] = true;
        return parse_double(key, entries_[i].second);
    }

    int get_int(const std::string& key, int fallback) {
        int i = find(key);
        if (i < 0) return fallback;
        used_[i] = true;
        return static_cast<int>(parse_ll(key, entries_[i].second));
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) {
        int i = find(key);
        if (i < 0) return fallback;
        used_[i] = true;
        std::string v = entries_[i].second;
        try {
            if (!v.empty() && v[0] == '-') throw std::invalid_argument("");  // stoull wraps
            std::size_t pos = 0;
            std::uint64_t r = std::stoull(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("");
            return r;
        } catch (const std::exception&) {
            throw ConfigError(path_ + ": key '" + key + "': not an unsigned integer: '" + v + "'");
        }
    }

    bool get_bool(const std::string& key, bool fallback) {
        int i = find(key);
        if (i < 0) return fallback;
        used_[i] = true;
        const std::string& v = entries_[i].second;
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw ConfigError(path_ + ": key '" + key + "': expected true/false, got '" + v + "'");
    }

    /** Throws if any key was never consumed. */
    void reject_unknown() const {
        std::string bad;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (!used_[i]) bad += (bad.empty() ? "" : ", ") + entries_[i].first;
        }
        if (!bad.empty()) throw ConfigError(path_ + ": unknown keys: " + bad);
    }

 private:
    int find(const std::string& key) const {
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (entries_[i].first == key) return static_cast<int>(i);
        }
        return -1;
    }

    double parse_double(const std::string& key, const std::string& v) const {
        try {
            std::size_t pos = 0;
            double r = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("");
            return r;
        } catch (const std::exception&) {
            throw ConfigError(path_ + ": key '" + key + "': not a number: '" + v + "'");
        }
    }

    long long parse_ll(const std::string& key, const std::string& v) const {
        try {
            std::size_t pos = 0;
            long long r = std::stoll(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("");
            return r;
        } catch (const std::exception&) {
            throw ConfigError(path_ + ": key '" + key + "': not an integer: '" + v + "'");
        }
    }

    static std::string trim(const std::string& s) {
        auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return "";
        auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    }

    std::string path_;
    std::vector<std::pair<std::string, std::string>> entries_;
    std::vector<bool> used_;
};

}  // namespace fkh
