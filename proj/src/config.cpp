#include "qagnn/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "qagnn/errors.hpp"

namespace qagnn {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

void KvConfig::set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) order_.push_back(key);
    values_[key] = value;
}

bool KvConfig::has(const std::string& key) const { return values_.count(key) > 0; }

std::optional<std::string> KvConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::string KvConfig::get_string(const std::string& key, const std::string& fallback) const {
    auto v = get(key);
    return v ? *v : fallback;
}

std::string KvConfig::require_string(const std::string& key) const {
    auto v = get(key);
    if (!v || v->empty()) throw UsageError("missing required option: " + key);
    return *v;
}

long KvConfig::get_int(const std::string& key, long fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    try {
        size_t pos = 0;
        long out = std::stol(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument(*v);
        return out;
    } catch (const std::exception&) {
        throw UsageError("option " + key + ": not an integer: " + *v);
    }
}

double KvConfig::get_double(const std::string& key, double fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    try {
        size_t pos = 0;
        double out = std::stod(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument(*v);
        return out;
    } catch (const std::exception&) {
        throw UsageError("option " + key + ": not a number: " + *v);
    }
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    std::string s = *v;
    std::transform(s.begin(), s.end(), s.begin(), ::tolower);
    if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
    if (s == "0" || s == "false" || s == "no" || s == "off") return false;
    throw UsageError("option " + key + ": not a boolean: " + *v);
}

void KvConfig::load(std::istream& in) {
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::string t = trim(line);
        if (t.empty()) continue;
        size_t eq = t.find('=');
        if (eq == std::string::npos) {
            throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty()) {
            throw UsageError("config line " + std::to_string(lineno) + ": empty key");
        }
        set(key, value);
    }
}

void KvConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config: " + path);
    load(in);
}

void KvConfig::save(std::ostream& out) const {
    for (const auto& key : order_) out << key << " = " << values_.at(key) << '\n';
}

void KvConfig::save_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open config for writing: " + path);
    save(out);
}

}  // namespace qagnn
