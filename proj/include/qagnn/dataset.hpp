#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qagnn {

// One multiple-choice question record. Serialized as one JSON object per
// line with fields id, question, choices, answer_index.
struct QAExample {
    std::string id;
    std::string question;
    std::vector<std::string> choices;
    int answer_index = 0;
};

std::vector<QAExample> load_examples(std::istream& in);
std::vector<QAExample> load_examples_file(const std::string& path);
void save_examples(std::ostream& out, const std::vector<QAExample>& examples);
void save_examples_file(const std::string& path, const std::vector<QAExample>& examples);

}  // namespace qagnn
