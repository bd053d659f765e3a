#include "qagnn/text.hpp"

#include <cctype>
#include <istream>
#include <ostream>

#include "qagnn/errors.hpp"

namespace qagnn {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        unsigned char uc = static_cast<unsigned char>(c);
        if (std::isalnum(uc)) {
            cur.push_back(static_cast<char>(std::tolower(uc)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::string join_tokens(const std::vector<std::string>& tokens, char sep) {
    std::string out;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(sep);
        out += tokens[i];
    }
    return out;
}

TokenVocab::TokenVocab() {
    tokens_.push_back("<unk>");
    ids_.emplace("<unk>", kUnk);
}

int TokenVocab::add(const std::string& token) {
    auto it = ids_.find(token);
    if (it != ids_.end()) return it->second;
    int id = static_cast<int>(tokens_.size());
    tokens_.push_back(token);
    ids_.emplace(token, id);
    return id;
}

int TokenVocab::lookup(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnk : it->second;
}

std::vector<int> TokenVocab::encode(const std::vector<std::string>& tokens) const {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(lookup(t));
    return ids;
}

void TokenVocab::save(std::ostream& out) const {
    for (const auto& t : tokens_) out << t << '\n';
}

TokenVocab TokenVocab::load(std::istream& in) {
    TokenVocab v;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++lineno;
        if (lineno == 1) {
            if (line != "<unk>") throw DataError("token vocab: first entry must be <unk>");
            continue;
        }
        v.add(line);
    }
    return v;
}

}  // namespace qagnn
