#pragma once

// Binary checkpoint container; layout documented in docs/checkpoint_format.md.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "scnn/error.hpp"
#include "scnn/model.hpp"
#include "scnn/serialize.hpp"
#include "scnn/text.hpp"

namespace scnn {

inline constexpr char checkpoint_magic[8] = {'S', 'C', 'N', 'N', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t checkpoint_version = 1;

struct Checkpoint {
    ModelConfig config;
    Vocabulary vocab;
    std::string vocab_hash;
    std::vector<std::string> class_names;
    ModelParams params;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}
inline std::uint32_t get_u32(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::vector<std::pair<std::string, const Tensor*>> named_tensors(const ModelParams& p) {
    std::vector<std::pair<std::string, const Tensor*>> out{{"embedding", &p.embedding}};
    for (const auto& b : p.branches) {
        out.emplace_back("conv" + std::to_string(b.width) + ".kernels", &b.kernels);
        out.emplace_back("conv" + std::to_string(b.width) + ".bias", &b.bias);
    }
    out.emplace_back("dense.weight", &p.dense_w);
    out.emplace_back("dense.bias", &p.dense_b);
    return out;
}

} // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& ck) {
    std::string payload;
    std::string vocab_blob;
    for (std::size_t i = 0; i < ck.vocab.size(); ++i) {
        vocab_blob += ck.vocab.words()[i];
        vocab_blob += '\n';
    }
    payload += vocab_blob;

    Json tensors = Json::array();
    for (const auto& [name, t] : detail::named_tensors(ck.params)) {
        tensors.push_back({{"name", name}, {"shape", t->shape()}, {"offset", payload.size()}, {"count", t->size()}});
        for (double v : t->data()) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof bits);
            detail::put_u64(payload, bits);
        }
    }
    Json header{{"format_version", checkpoint_version},
                {"config", to_json(ck.config)},
                {"vocab_hash", ck.vocab_hash},
                {"class_names", ck.class_names},
                {"vocabulary", {{"offset", 0}, {"bytes", vocab_blob.size()}, {"count", ck.vocab.size()}}},
                {"tensors", tensors},
                {"payload_bytes", payload.size()},
                {"payload_fnv1a64", detail::fnv1a(payload)}};
    const std::string h = header.dump();
    std::string out(checkpoint_magic, sizeof checkpoint_magic);
    detail::put_u32(out, checkpoint_version);
    detail::put_u64(out, h.size());
    out += h;
    out += payload;
    return out;
}

inline Checkpoint deserialize_checkpoint(const std::string& bytes) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (bytes.size() < 20 || std::memcmp(bytes.data(), checkpoint_magic, 8) != 0)
        throw FormatError("not a checkpoint (bad magic)");
    const auto version = detail::get_u32(p + 8);
    if (version != checkpoint_version)
        throw FormatError("unsupported checkpoint format version " + std::to_string(version));
    const auto hlen = detail::get_u64(p + 12);
    if (hlen > bytes.size() - 20) throw FormatError("checkpoint header is truncated");
    Json header;
    try {
        header = Json::parse(bytes.substr(20, hlen));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint header: ") + e.what());
    }
    const std::string payload = bytes.substr(20 + hlen);
    try {
        if (header.at("format_version").get<std::uint32_t>() != version)
            throw FormatError("checkpoint header version disagrees with preamble");
        if (header.at("payload_bytes").get<std::size_t>() != payload.size())
            throw FormatError("checkpoint payload is truncated or padded");
        if (header.at("payload_fnv1a64").get<std::uint64_t>() != detail::fnv1a(payload))
            throw FormatError("checkpoint payload checksum mismatch");

        Checkpoint ck;
        ck.config = model_config_from_json(header.at("config"));
        ck.vocab_hash = header.at("vocab_hash").get<std::string>();
        ck.class_names = header.at("class_names").get<std::vector<std::string>>();
        if (ck.class_names.size() != ck.config.num_classes) throw FormatError("class names disagree with the config");
        const auto& vj = header.at("vocabulary");
        const auto voff = vj.at("offset").get<std::size_t>(), vbytes = vj.at("bytes").get<std::size_t>();
        if (voff + vbytes > payload.size()) throw FormatError("vocabulary blob out of bounds");
        std::vector<std::string> words;
        std::istringstream vs(payload.substr(voff, vbytes));
        for (std::string w; std::getline(vs, w);) words.push_back(w);
        if (words.size() != vj.at("count").get<std::size_t>()) throw FormatError("vocabulary count mismatch");
        ck.vocab = Vocabulary::from_words(std::move(words));
        if (vocab_hash(ck.vocab) != ck.vocab_hash) throw FormatError("stored vocabulary does not match its hash");

        std::map<std::string, Tensor> found;
        for (const auto& tj : header.at("tensors")) {
            const auto name = tj.at("name").get<std::string>();
            const auto shape = tj.at("shape").get<Shape>();
            const auto off = tj.at("offset").get<std::size_t>();
            const auto count = tj.at("count").get<std::size_t>();
            if (shape_numel(shape) != count || off + count * 8 > payload.size())
                throw FormatError("tensor '" + name + "' is inconsistent with the payload");
            std::vector<double> data(count);
            const auto* src = reinterpret_cast<const unsigned char*>(payload.data()) + off;
            for (std::size_t i = 0; i < count; ++i) {
                const std::uint64_t bits = detail::get_u64(src + 8 * i);
                std::memcpy(&data[i], &bits, sizeof bits);
            }
            found.emplace(name, Tensor(shape, std::move(data)));
        }
        auto take = [&](const std::string& name) {
            auto it = found.find(name);
            if (it == found.end()) throw FormatError("checkpoint lacks tensor '" + name + "'");
            return std::move(it->second);
        };
        const auto& c = ck.config;
        ck.params.embedding = take("embedding");
        for (auto h : c.kernel_widths) {
            ConvBranch b;
            b.width = h;
            b.kernels = take("conv" + std::to_string(h) + ".kernels");
            b.bias = take("conv" + std::to_string(h) + ".bias");
            if (b.kernels.shape() != Shape{c.filters_per_width, h, c.embed_dim} ||
                b.bias.shape() != Shape{c.filters_per_width})
                throw FormatError("conv" + std::to_string(h) + " shapes disagree with the config");
            ck.params.branches.push_back(std::move(b));
        }
        ck.params.dense_w = take("dense.weight");
        ck.params.dense_b = take("dense.bias");
        if (ck.params.embedding.shape() != Shape{c.vocab_size, c.embed_dim} ||
            ck.params.dense_w.shape() != Shape{c.features(), c.outputs()} ||
            ck.params.dense_b.shape() != Shape{c.outputs()})
            throw FormatError("parameter shapes disagree with the config");
        if (ck.vocab.size() != c.vocab_size) throw FormatError("vocabulary size disagrees with the config");
        return ck;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint header: ") + e.what());
    } catch (const DimensionError& e) {
        throw FormatError(std::string("checkpoint tensor: ") + e.what());
    }
}

inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write checkpoint " + path.string());
    const auto bytes = serialize_checkpoint(ck);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot read checkpoint " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return deserialize_checkpoint(ss.str());
}

} // namespace scnn
