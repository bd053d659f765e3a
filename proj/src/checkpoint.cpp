#include "qagnn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <set>

#include "qagnn/errors.hpp"

namespace qagnn::checkpoint {

namespace {

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw DataError("checkpoint: truncated file");
    return v;
}

}  // namespace

void save(std::ostream& out, const ParamStore& params) {
    out.write(kMagic, 4);
    write_pod<uint8_t>(out, kVersion);
    write_pod<uint32_t>(out, static_cast<uint32_t>(params.names().size()));
    for (const auto& name : params.names()) {
        Tensor t = params.get(name);
        write_pod<uint32_t>(out, static_cast<uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod<uint8_t>(out, static_cast<uint8_t>(t.shape().size()));
        for (size_t d : t.shape()) write_pod<uint64_t>(out, d);
        out.write(reinterpret_cast<const char*>(t.data().data()),
                  static_cast<std::streamsize>(t.numel() * sizeof(double)));
    }
    if (!out) throw DataError("checkpoint: write failed");
}

void save_file(const std::string& path, const ParamStore& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open checkpoint for writing: " + path);
    save(out, params);
}

void load(std::istream& in, ParamStore& params) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw DataError("checkpoint: bad magic");
    }
    uint8_t version = read_pod<uint8_t>(in);
    if (version != kVersion) {
        throw DataError("checkpoint: unsupported version " + std::to_string(version));
    }
    uint32_t count = read_pod<uint32_t>(in);
    std::set<std::string> seen;
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t name_len = read_pod<uint32_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in) throw DataError("checkpoint: truncated file");
        uint8_t rank = read_pod<uint8_t>(in);
        std::vector<size_t> shape(rank);
        for (auto& d : shape) d = static_cast<size_t>(read_pod<uint64_t>(in));
        if (!params.has(name)) {
            throw DataError("checkpoint: unknown tensor '" + name + "' for this model");
        }
        Tensor t = params.get(name);
        if (t.shape() != shape) {
            throw DataError("checkpoint: shape mismatch for '" + name + "'");
        }
        in.read(reinterpret_cast<char*>(t.data().data()),
                static_cast<std::streamsize>(t.numel() * sizeof(double)));
        if (!in) throw DataError("checkpoint: truncated file");
        seen.insert(name);
    }
    for (const auto& name : params.names()) {
        if (!seen.count(name)) {
            throw DataError("checkpoint: missing tensor '" + name + "'");
        }
    }
}

void load_file(const std::string& path, ParamStore& params) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    load(in, params);
}

}  // namespace qagnn::checkpoint
