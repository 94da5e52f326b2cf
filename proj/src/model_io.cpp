#include "midicls/errors.hpp"
#include "midicls/mlstm.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace midicls {

namespace {

constexpr std::string_view kMagic = "MLSTM001";
constexpr std::size_t kHeaderBytes = 8 + 3 * 4;

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) {
    std::uint64_t hash = 14695981039346656037ULL;
    for (std::uint8_t b : bytes) {
        hash ^= b;
        hash *= 1099511628211ULL;
    }
    return hash;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(std::span<const std::uint8_t> bytes, std::size_t at, int width) {
    std::uint64_t v = 0;
    for (int i = width - 1; i >= 0; --i) v = (v << 8) | bytes[at + static_cast<std::size_t>(i)];
    return v;
}

std::size_t payload_floats(std::uint64_t v, std::uint64_t e, std::uint64_t h) {
    return v * e + h * e + h * h + 4 * h * e + 4 * h * h + 4 * h + v * h + v;
}

} // namespace

std::vector<std::uint8_t> serialize_model(const MlstmParams& params) {
    params.check_shapes();
    std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
    put_u32(out, static_cast<std::uint32_t>(params.vocab_size()));
    put_u32(out, static_cast<std::uint32_t>(params.embed_dim()));
    put_u32(out, static_cast<std::uint32_t>(params.hidden_dim()));
    const std::size_t payload_at = out.size();
    for (const auto& m : params.tensors) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(m(r, c))));
            }
        }
    }
    put_u64(out, fnv1a(std::span(out).subspan(payload_at)));
    return out;
}

MlstmParams deserialize_model(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderBytes + 8) throw FormatError("file too short for a model header");
    if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) throw FormatError("bad magic, expected MLSTM001");
    const std::uint64_t v = get_le(bytes, 8, 4);
    const std::uint64_t e = get_le(bytes, 12, 4);
    const std::uint64_t h = get_le(bytes, 16, 4);
    if (v == 0 || e == 0 || h == 0 || v > (1u << 20) || e > (1u << 20) || h > (1u << 20))
        throw FormatError("header dimensions out of range");
    const std::size_t floats = payload_floats(v, e, h);
    if (bytes.size() != kHeaderBytes + 4 * floats + 8)
        throw FormatError("payload length " + std::to_string(bytes.size()) + " inconsistent with header dims");
    const auto payload = bytes.subspan(kHeaderBytes, 4 * floats);
    if (fnv1a(payload) != get_le(bytes, kHeaderBytes + 4 * floats, 8)) throw FormatError("checksum mismatch");

    MlstmParams p = MlstmParams::zeros(static_cast<int>(v), static_cast<int>(e), static_cast<int>(h));
    std::size_t at = 0;
    for (auto& m : p.tensors) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                m(r, c) = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(payload, at, 4)));
                at += 4;
            }
        }
    }
    if (!p.all_finite()) throw FormatError("non-finite parameter in payload");
    return p;
}

void save_model(const MlstmParams& params, const ModelConfig& config, const std::string& path) {
    if (config.vocab_size != params.vocab_size() || config.embed_dim != params.embed_dim() ||
        config.hidden_dim != params.hidden_dim())
        throw ShapeError("config dimensions do not match parameters");
    const std::vector<std::uint8_t> bytes = serialize_model(params);
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IOError("cannot write " + path);
    file.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!file) throw IOError("write failed for " + path);
}

std::pair<MlstmParams, ModelConfig> load_model(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IOError("cannot open " + path);
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
    MlstmParams params = deserialize_model(bytes);
    ModelConfig config;
    config.vocab_size = params.vocab_size();
    config.embed_dim = params.embed_dim();
    config.hidden_dim = params.hidden_dim();
    return {std::move(params), config};
}

} // namespace midicls
