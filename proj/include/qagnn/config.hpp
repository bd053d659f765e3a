#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace qagnn {

// Flat `key = value` configuration. Insertion order is preserved so saved
// manifests are stable. '#' starts a comment; blank lines are skipped.
class KvConfig {
public:
    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;
    std::optional<std::string> get(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::string require_string(const std::string& key) const;
    long get_int(const std::string& key, long fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    const std::vector<std::string>& keys() const { return order_; }

    void load(std::istream& in);
    void load_file(const std::string& path);
    void save(std::ostream& out) const;
    void save_file(const std::string& path) const;

private:
    std::vector<std::string> order_;
    std::unordered_map<std::string, std::string> values_;
};

}  // namespace qagnn
