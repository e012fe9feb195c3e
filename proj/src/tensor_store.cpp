#include "fse/tensor_store.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "fse/errors.hpp"

namespace fse {

namespace {

constexpr char kMagic[4] = {'F', 'S', 'E', 'T'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw DataError("tensor store: truncated header");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw DataError("tensor store: truncated header");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

void TensorStore::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("tensor store: cannot open for write: " + path);
    os.write(kMagic, 4);
    write_u32(os, kVersion);
    write_u32(os, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, m] : tensors) {
        write_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        os.write("f64", 3);
        write_u32(os, 2);
        write_u64(os, static_cast<std::uint64_t>(m.rows()));
        write_u64(os, static_cast<std::uint64_t>(m.cols()));
    }
    for (const auto& [name, m] : tensors) {
        // row-major payload
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                double v = m(r, c);
                std::uint64_t bits;
                std::memcpy(&bits, &v, 8);
                write_u64(os, bits);
            }
        }
    }
    if (!os) throw DataError("tensor store: write failed: " + path);
}

TensorStore TensorStore::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("tensor store: cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("tensor store: bad magic in " + path);
    const std::uint32_t version = read_u32(is);
    if (version != kVersion)
        throw DataError("tensor store: unsupported version " + std::to_string(version));
    const std::uint32_t count = read_u32(is);

    struct Entry {
        std::string name;
        std::uint64_t rows, cols;
    };
    std::vector<Entry> manifest;
    manifest.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t len = read_u32(is);
        std::string name(len, '\0');
        is.read(name.data(), len);
        char dtype[3];
        is.read(dtype, 3);
        if (!is || std::memcmp(dtype, "f64", 3) != 0)
            throw DataError("tensor store: unsupported dtype for tensor " + name);
        const std::uint32_t ndim = read_u32(is);
        if (ndim != 2) throw DataError("tensor store: unsupported rank for tensor " + name);
        const std::uint64_t rows = read_u64(is);
        const std::uint64_t cols = read_u64(is);
        manifest.push_back({std::move(name), rows, cols});
    }

    TensorStore store;
    for (const auto& e : manifest) {
        Mat m(static_cast<Eigen::Index>(e.rows), static_cast<Eigen::Index>(e.cols));
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                const std::uint64_t bits = read_u64(is);
                double v;
                std::memcpy(&v, &bits, 8);
                m(r, c) = v;
            }
        }
        store.tensors.emplace(e.name, std::move(m));
    }
    return store;
}

}  // namespace fse
