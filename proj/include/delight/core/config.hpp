#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "delight/core/errors.hpp"

namespace dlt {

// Key-value run configuration. File format: one "key = value" per line,
// '#' starts a comment, blank lines ignored. Values keep their raw text;
// typed getters parse on access.
class Config {
  public:
    Config() = default;

    static Config fromFile(const std::string& path);
    static Config fromString(const std::string& text);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string getString(const std::string& key, const std::string& def) const;
    std::string requireString(const std::string& key) const;
    double getDouble(const std::string& key, double def) const;
    int64_t getInt(const std::string& key, int64_t def) const;
    bool getBool(const std::string& key, bool def) const;

    // Throws ConfigError naming the first key not in `known`.
    void rejectUnknownKeys(const std::set<std::string>& known) const;

    // Every key including defaults the caller echoed back; serialized in
    // sorted key order so the echo is byte-stable.
    std::string serialize() const;

    const std::map<std::string, std::string>& values() const { return values_; }

  private:
    std::map<std::string, std::string> values_;
};

}  // namespace dlt
