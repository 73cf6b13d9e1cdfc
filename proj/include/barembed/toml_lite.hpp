#pragma once

#include <map>
#include <string>

namespace barembed {

// Flat TOML subset: comments, [sections] (flattened to "section.key"),
// key = value with strings, numbers and booleans. Enough for run configs.
class TomlLite {
public:
    static TomlLite parse_file(const std::string& path);
    static TomlLite parse_string(const std::string& text);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long get_int(const std::string& key, long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

} // namespace barembed
