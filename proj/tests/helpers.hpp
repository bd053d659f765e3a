#pragma once

#include <filesystem>
#include <random>
#include <sstream>
#include <string>

#include "qagnn/kg.hpp"

namespace qagnn_test {

// Unique scratch directory removed on destruction.
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static std::mt19937_64 rng(std::random_device{}());
        path = std::filesystem::temp_directory_path() /
               ("qagnn_test_" + std::to_string(rng()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string str(const std::string& name = "") const {
        return name.empty() ? path.string() : (path / name).string();
    }
};

inline qagnn::KnowledgeGraph kg_from_string(const std::string& tsv) {
    std::istringstream in(tsv);
    return qagnn::KnowledgeGraph::load(in);
}

}  // namespace qagnn_test
