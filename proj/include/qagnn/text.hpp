#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace qagnn {

// Lowercase, split on whitespace and punctuation, no stemming.
// Underscores count as separators, so entity names like "salt_water"
// tokenize to {"salt", "water"}.
std::vector<std::string> tokenize(std::string_view text);

std::string join_tokens(const std::vector<std::string>& tokens, char sep = ' ');

// Token id vocabulary for the bag-of-tokens context encoder. Id 0 is
// reserved for unknown tokens; ids are assigned in first-appearance order.
class TokenVocab {
public:
    static constexpr int kUnk = 0;

    TokenVocab();

    int add(const std::string& token);           // returns existing or new id
    int lookup(const std::string& token) const;  // kUnk when absent
    std::vector<int> encode(const std::vector<std::string>& tokens) const;

    size_t size() const { return tokens_.size(); }
    const std::string& token(int id) const { return tokens_.at(static_cast<size_t>(id)); }

    void save(std::ostream& out) const;  // one token per line, line = id
    static TokenVocab load(std::istream& in);

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> ids_;
};

}  // namespace qagnn
