#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "qagnn/tensor.hpp"

namespace qagnn {

// Named-tensor container: "QGNT" magic, one version byte, then
// (name, shape, row-major float64) records. Records are written in store
// order so files are byte-stable across runs.
namespace checkpoint {

constexpr char kMagic[4] = {'Q', 'G', 'N', 'T'};
constexpr uint8_t kVersion = 1;

void save(std::ostream& out, const ParamStore& params);
void save_file(const std::string& path, const ParamStore& params);

// Loads values into an existing store. Every stored name must exist with
// the same shape, and every store entry must be present in the file.
void load(std::istream& in, ParamStore& params);
void load_file(const std::string& path, ParamStore& params);

}  // namespace checkpoint

}  // namespace qagnn
