#include "hal/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace hal {

namespace {

constexpr char kMagic[8] = {'H', 'A', 'L', 'C', 'K', 'P', 'T', '1'};

void put_u32(std::ofstream& f, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& f) {
    unsigned char b[4];
    if (!f.read(reinterpret_cast<char*>(b), 4))
        throw FormatError("checkpoint: truncated file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_named_tensors(const std::string& path,
                         const std::vector<NamedTensorF32>& tensors) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("checkpoint: cannot open '" + path + "' for writing");
    f.write(kMagic, 8);
    for (const auto& nt : tensors) {
        put_u32(f, static_cast<std::uint32_t>(nt.name.size()));
        f.write(nt.name.data(), static_cast<std::streamsize>(nt.name.size()));
        put_u32(f, static_cast<std::uint32_t>(nt.tensor.rank()));
        for (std::size_t e : nt.tensor.shape) put_u32(f, static_cast<std::uint32_t>(e));
        // f32 little-endian payload; this code targets little-endian hosts
        f.write(reinterpret_cast<const char*>(nt.tensor.data.data()),
                static_cast<std::streamsize>(nt.tensor.data.size() * sizeof(float)));
    }
    if (!f) throw FormatError("checkpoint: write to '" + path + "' failed");
}

std::vector<NamedTensorF32> read_named_tensors(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("checkpoint: cannot open '" + path + "'");
    char magic[8];
    if (!f.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
        throw FormatError("checkpoint: bad magic in '" + path + "'");
    std::vector<NamedTensorF32> out;
    while (f.peek() != std::ifstream::traits_type::eof()) {
        std::uint32_t name_len = get_u32(f);
        std::string name(name_len, '\0');
        if (!f.read(name.data(), name_len)) throw FormatError("checkpoint: truncated name");
        std::uint32_t rank = get_u32(f);
        std::vector<std::size_t> shape(rank);
        for (auto& e : shape) e = get_u32(f);
        Tensor<float> t(shape);
        if (!f.read(reinterpret_cast<char*>(t.data.data()),
                    static_cast<std::streamsize>(t.data.size() * sizeof(float))))
            throw FormatError("checkpoint: truncated payload for '" + name + "'");
        out.push_back({std::move(name), std::move(t)});
    }
    return out;
}

}  // namespace hal
