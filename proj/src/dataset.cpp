#include "qagnn/dataset.hpp"

#include <fstream>

#include <json.hpp>

#include "qagnn/errors.hpp"

namespace qagnn {

using nlohmann::json;

std::vector<QAExample> load_examples(std::istream& in) {
    std::vector<QAExample> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError("dataset line " + std::to_string(lineno) + ": " + e.what());
        }
        QAExample ex;
        try {
            ex.id = j.at("id").get<std::string>();
            ex.question = j.at("question").get<std::string>();
            ex.choices = j.at("choices").get<std::vector<std::string>>();
            ex.answer_index = j.at("answer_index").get<int>();
        } catch (const json::exception& e) {
            throw DataError("dataset line " + std::to_string(lineno) + ": " + e.what());
        }
        if (ex.choices.empty()) {
            throw DataError("dataset line " + std::to_string(lineno) + ": no choices");
        }
        if (ex.answer_index < 0 ||
            static_cast<size_t>(ex.answer_index) >= ex.choices.size()) {
            throw DataError("dataset line " + std::to_string(lineno) +
                            ": answer_index out of range");
        }
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<QAExample> load_examples_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset: " + path);
    return load_examples(in);
}

void save_examples(std::ostream& out, const std::vector<QAExample>& examples) {
    for (const auto& ex : examples) {
        json j;
        j["id"] = ex.id;
        j["question"] = ex.question;
        j["choices"] = ex.choices;
        j["answer_index"] = ex.answer_index;
        out << j.dump() << '\n';
    }
}

void save_examples_file(const std::string& path, const std::vector<QAExample>& examples) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open dataset for writing: " + path);
    save_examples(out, examples);
}

}  // namespace qagnn
