#include "bgan/config.hpp"

#include <charconv>
#include <sstream>
#include <stdexcept>

#include "bgan/io.hpp"

namespace bgan {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& origin) {
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                         ": unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty())
                throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                         ": empty section name");
            cfg.sections_[section];
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                     ": expected 'key = value'");
        const std::string key = trim(t.substr(0, eq));
        if (key.empty())
            throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": empty key");
        cfg.sections_[section][key] = Entry{trim(t.substr(eq + 1)), line_no};
    }
    return cfg;
}

Config Config::parse_file(const std::string& path) {
    return parse(io::read_file(path), path);
}

const Config::Entry* Config::find(const std::string& section, const std::string& key) const {
    auto sit = sections_.find(section);
    if (sit == sections_.end()) return nullptr;
    auto kit = sit->second.find(key);
    return kit == sit->second.end() ? nullptr : &kit->second;
}

bool Config::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

void Config::missing(const std::string& section, const std::string& key) const {
    throw std::runtime_error(origin_ + ": missing required key '" + key + "' in section [" +
                             section + "]");
}

void Config::malformed(const std::string& section, const std::string& key, const Entry& e,
                       const std::string& want) const {
    throw std::runtime_error(origin_ + ":" + std::to_string(e.line) + ": key '" + key +
                             "' in section [" + section + "] is not a valid " + want + ": '" +
                             e.value + "'");
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) missing(section, key);
    return e->value;
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
    const Entry* e = find(section, key);
    return e ? e->value : fallback;
}

double Config::get_double(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) missing(section, key);
    double v = 0.0;
    auto [p, ec] = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
    if (ec != std::errc() || p != e->value.data() + e->value.size())
        malformed(section, key, *e, "number");
    return v;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
}

long Config::get_long(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) missing(section, key);
    long v = 0;
    auto [p, ec] = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
    if (ec != std::errc() || p != e->value.data() + e->value.size())
        malformed(section, key, *e, "integer");
    return v;
}

long Config::get_long(const std::string& section, const std::string& key, long fallback) const {
    return has(section, key) ? get_long(section, key) : fallback;
}

std::uint64_t Config::get_u64(const std::string& section, const std::string& key,
                              std::uint64_t fallback) const {
    if (!has(section, key)) return fallback;
    const long v = get_long(section, key);
    if (v < 0) {
        const Entry* e = find(section, key);
        malformed(section, key, *e, "nonnegative integer");
    }
    return static_cast<std::uint64_t>(v);
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    if (e->value == "true" || e->value == "1" || e->value == "on" || e->value == "yes")
        return true;
    if (e->value == "false" || e->value == "0" || e->value == "off" || e->value == "no")
        return false;
    malformed(section, key, *e, "boolean");
}

std::vector<std::size_t> Config::get_size_list(const std::string& section, const std::string& key,
                                               const std::vector<std::size_t>& fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    std::vector<std::size_t> out;
    std::istringstream in(e->value);
    std::string cell;
    while (std::getline(in, cell, ',')) {
        cell = trim(cell);
        long v = 0;
        auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || p != cell.data() + cell.size() || v <= 0)
            malformed(section, key, *e, "comma-separated positive integer list");
        out.push_back(static_cast<std::size_t>(v));
    }
    if (out.empty()) malformed(section, key, *e, "comma-separated positive integer list");
    return out;
}

std::vector<double> Config::get_double_list(const std::string& section,
                                            const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) missing(section, key);
    std::vector<double> out;
    std::istringstream in(e->value);
    std::string cell;
    while (std::getline(in, cell, ',')) {
        cell = trim(cell);
        double v = 0.0;
        auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || p != cell.data() + cell.size())
            malformed(section, key, *e, "comma-separated number list");
        out.push_back(v);
    }
    if (out.empty()) malformed(section, key, *e, "comma-separated number list");
    return out;
}

std::string Config::canonical() const {
    std::ostringstream out;
    for (const auto& [section, entries] : sections_) {
        out << '[' << section << "]\n";
        for (const auto& [key, entry] : entries) out << key << '=' << entry.value << '\n';
    }
    return out.str();
}

}  // namespace bgan
