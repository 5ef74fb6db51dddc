#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bgan {

/// Flat key-value configuration with [section] headers, '#' comments,
/// and line-numbered errors. All lookups name the missing or malformed
/// key in their exception text.
class Config {
public:
    static Config parse(const std::string& text, const std::string& origin = "<config>");
    static Config parse_file(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    long get_long(const std::string& section, const std::string& key) const;
    long get_long(const std::string& section, const std::string& key, long fallback) const;
    std::uint64_t get_u64(const std::string& section, const std::string& key,
                          std::uint64_t fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    std::vector<std::size_t> get_size_list(const std::string& section, const std::string& key,
                                           const std::vector<std::size_t>& fallback) const;
    std::vector<double> get_double_list(const std::string& section,
                                        const std::string& key) const;

    /// Canonical text used for run-directory hashing.
    std::string canonical() const;

private:
    struct Entry {
        std::string value;
        std::size_t line = 0;
    };
    std::map<std::string, std::map<std::string, Entry>> sections_;
    std::string origin_;

    const Entry* find(const std::string& section, const std::string& key) const;
    [[noreturn]] void missing(const std::string& section, const std::string& key) const;
    [[noreturn]] void malformed(const std::string& section, const std::string& key,
                                const Entry& e, const std::string& want) const;
};

}  // namespace bgan
