#include "colform/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace colform {

namespace {

constexpr char kMagic[8] = {'C', 'O', 'L', 'F', 'O', 'R', 'M', '1'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void write_f32(std::ostream& os, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(os, bits);
}

float read_f32(std::istream& is) {
    const uint32_t bits = read_u32(is);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const PolicyParams& params) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open checkpoint for writing: " + path);
    os.write(kMagic, sizeof(kMagic));
    write_u32(os, kVersion);
    write_u32(os, static_cast<uint32_t>(params.domain));
    write_u32(os, static_cast<uint32_t>(params.d_x));
    write_u32(os, static_cast<uint32_t>(params.cfg.d_h));
    write_u32(os, static_cast<uint32_t>(params.cfg.heads));
    write_u32(os, static_cast<uint32_t>(params.cfg.d_ff));
    write_u32(os, static_cast<uint32_t>(params.cfg.blocks));

    auto tensors = named_tensors(const_cast<PolicyParams&>(params));
    write_u32(os, static_cast<uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        write_u32(os, static_cast<uint32_t>(t.name.size()));
        os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        write_u32(os, 2);  // rank: every tensor here is a matrix
        write_u32(os, static_cast<uint32_t>(t.tensor->rows));
        write_u32(os, static_cast<uint32_t>(t.tensor->cols));
        for (double v : t.tensor->a) write_f32(os, static_cast<float>(v));
    }
    if (!os) throw IoError("checkpoint write failed: " + path);
}

PolicyParams load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw IoError("not a colform checkpoint: " + path);
    if (read_u32(is) != kVersion) throw IoError("unsupported checkpoint version: " + path);

    PolicyParams p;
    p.domain = static_cast<Domain>(read_u32(is));
    p.d_x = static_cast<int>(read_u32(is));
    p.cfg.d_h = static_cast<int>(read_u32(is));
    p.cfg.heads = static_cast<int>(read_u32(is));
    p.cfg.d_ff = static_cast<int>(read_u32(is));
    p.cfg.blocks = static_cast<int>(read_u32(is));
    if (!p.cfg.valid() || p.d_x != feature_dim(p.domain))
        throw IoError("corrupt checkpoint header: " + path);

    // Shape via a zero template, then fill tensors by name.
    PolicyParams shaped = make_policy(p.domain, p.cfg, 0);
    auto tensors = named_tensors(shaped);
    const uint32_t count = read_u32(is);
    if (count != tensors.size()) throw IoError("checkpoint tensor count mismatch: " + path);
    for (auto& t : tensors) {
        const uint32_t name_len = read_u32(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        if (name != t.name) throw IoError("checkpoint tensor order mismatch at " + name);
        const uint32_t rank = read_u32(is);
        if (rank != 2) throw IoError("unexpected tensor rank in " + path);
        const uint32_t rows = read_u32(is);
        const uint32_t cols = read_u32(is);
        if (rows != static_cast<uint32_t>(t.tensor->rows) ||
            cols != static_cast<uint32_t>(t.tensor->cols))
            throw IoError("checkpoint tensor shape mismatch at " + name);
        for (double& v : t.tensor->a) v = static_cast<double>(read_f32(is));
    }
    if (!is) throw IoError("checkpoint truncated: " + path);
    return shaped;
}

}  // namespace colform
