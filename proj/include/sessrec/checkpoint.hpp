#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "sessrec/errors.hpp"
#include "sessrec/io.hpp"
#include "sessrec/model.hpp"

namespace sessrec {

/// Model snapshot: self-describing header, named float32 tensors, and the
/// vocabulary, all little-endian.
struct Checkpoint {
    ItemId item_count = 0;
    int dim = 0;
    int steps = 1;
    ReadoutConfig readout;
    bool has_bias = true;  // false when the embedding was fine-tuned instead
    Matrix phi;
    ModelParams params;
    Vocab vocab;
};

namespace detail {

constexpr char kCkptMagic[8] = {'S', 'R', 'E', 'C', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCkptVersion = 1;

inline void put_u32(std::ostream& out, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
                           static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
    out.write(bytes, 4);
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
    put_u32(out, static_cast<std::uint32_t>(v));
    put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

inline void put_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

inline void put_string(std::ostream& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::uint32_t get_u32(std::istream& in, const std::string& path) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4)) throw ParseError(path + ": truncated");
    return static_cast<std::uint32_t>(bytes[0]) | static_cast<std::uint32_t>(bytes[1]) << 8 |
           static_cast<std::uint32_t>(bytes[2]) << 16 | static_cast<std::uint32_t>(bytes[3]) << 24;
}

inline std::uint64_t get_u64(std::istream& in, const std::string& path) {
    const std::uint64_t lo = get_u32(in, path);
    const std::uint64_t hi = get_u32(in, path);
    return lo | hi << 32;
}

inline double get_f64(std::istream& in, const std::string& path) {
    const std::uint64_t bits = get_u64(in, path);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

inline std::string get_string(std::istream& in, const std::string& path) {
    const std::uint32_t len = get_u32(in, path);
    std::string s(len, '\0');
    if (len > 0 && !in.read(s.data(), len)) throw ParseError(path + ": truncated string");
    return s;
}

inline void put_tensor(std::ostream& out, const std::string& name, const Matrix& m) {
    put_string(out, name);
    put_u32(out, 2);
    put_u64(out, m.rows());
    put_u64(out, m.cols());
    for (const double x : m.data()) {
        const auto f = static_cast<float>(x);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(out, bits);
    }
}

inline void put_tensor(std::ostream& out, const std::string& name, const Vector& v) {
    put_string(out, name);
    put_u32(out, 1);
    put_u64(out, v.size());
    for (const double x : v) {
        const auto f = static_cast<float>(x);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(out, bits);
    }
}

struct RawTensor {
    std::vector<std::uint64_t> dims;
    std::vector<double> values;

    Matrix as_matrix() const {
        if (dims.size() != 2) throw ParseError("tensor rank mismatch");
        Matrix m(dims[0], dims[1]);
        m.data() = values;
        return m;
    }

    Vector as_vector() const {
        if (dims.size() != 1) throw ParseError("tensor rank mismatch");
        return values;
    }
};

inline RawTensor get_tensor_body(std::istream& in, const std::string& path) {
    RawTensor t;
    const std::uint32_t ndim = get_u32(in, path);
    std::uint64_t total = 1;
    for (std::uint32_t i = 0; i < ndim; ++i) {
        t.dims.push_back(get_u64(in, path));
        total *= t.dims.back();
    }
    t.values.reserve(total);
    for (std::uint64_t i = 0; i < total; ++i) {
        const std::uint32_t bits = get_u32(in, path);
        float f;
        std::memcpy(&f, &bits, 4);
        t.values.push_back(static_cast<double>(f));
    }
    return t;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path);

    out.write(detail::kCkptMagic, 8);
    detail::put_u32(out, detail::kCkptVersion);
    detail::put_u64(out, static_cast<std::uint64_t>(ckpt.item_count));
    detail::put_u32(out, static_cast<std::uint32_t>(ckpt.dim));
    detail::put_u32(out, static_cast<std::uint32_t>(ckpt.steps));
    detail::put_string(out, readout_name(ckpt.readout.kind));
    detail::put_f64(out, ckpt.readout.tau);
    detail::put_u32(out, ckpt.has_bias ? 1 : 0);

    std::vector<std::pair<std::string, const Matrix*>> matrices = {
        {"phi", &ckpt.phi},
        {"msg_update", &ckpt.params.update_msg},
        {"msg_reset", &ckpt.params.reset_msg},
        {"msg_cand", &ckpt.params.cand_msg},
        {"state_update", &ckpt.params.update_state},
        {"state_reset", &ckpt.params.reset_state},
        {"state_cand", &ckpt.params.cand_state},
    };
    if (ckpt.has_bias) matrices.emplace_back("beta", &ckpt.params.beta);
    if (ckpt.readout.kind == ReadoutKind::Sum) {
        matrices.emplace_back("sum_proj", &ckpt.params.sum_proj);
    } else if (ckpt.readout.kind == ReadoutKind::Attention) {
        matrices.emplace_back("attn_last", &ckpt.params.attn_last);
        matrices.emplace_back("attn_pos", &ckpt.params.attn_pos);
        matrices.emplace_back("attn_out", &ckpt.params.attn_out);
    }
    std::vector<std::pair<std::string, const Vector*>> vectors = {
        {"msg_bias", &ckpt.params.msg_bias}};
    if (ckpt.readout.kind == ReadoutKind::Attention) {
        vectors.emplace_back("attn_bias", &ckpt.params.attn_bias);
        vectors.emplace_back("attn_score", &ckpt.params.attn_score);
    }

    detail::put_u32(out, static_cast<std::uint32_t>(matrices.size() + vectors.size()));
    for (const auto& [name, m] : matrices) detail::put_tensor(out, name, *m);
    for (const auto& [name, v] : vectors) detail::put_tensor(out, name, *v);

    detail::put_u64(out, static_cast<std::uint64_t>(ckpt.vocab.size()));
    for (ItemId i = 0; i < ckpt.vocab.size(); ++i) detail::put_string(out, ckpt.vocab.raw(i));
    if (!out) throw IoError("checkpoint write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);

    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, detail::kCkptMagic, 8) != 0) {
        throw ParseError(path + ": not a checkpoint file");
    }
    const std::uint32_t version = detail::get_u32(in, path);
    if (version != detail::kCkptVersion) {
        throw ParseError(path + ": unsupported checkpoint version " + std::to_string(version));
    }

    Checkpoint ckpt;
    ckpt.item_count = static_cast<ItemId>(detail::get_u64(in, path));
    ckpt.dim = static_cast<int>(detail::get_u32(in, path));
    ckpt.steps = static_cast<int>(detail::get_u32(in, path));
    const std::string readout = detail::get_string(in, path);
    const auto kind = readout_from_name(readout);
    if (!kind) throw ParseError(path + ": unknown readout '" + readout + "'");
    ckpt.readout.kind = *kind;
    ckpt.readout.tau = detail::get_f64(in, path);
    ckpt.has_bias = detail::get_u32(in, path) != 0;

    ckpt.params.dim = ckpt.dim;
    ckpt.params.steps = ckpt.steps;
    ckpt.params.readout = ckpt.readout;

    const std::uint32_t tensor_count = detail::get_u32(in, path);
    for (std::uint32_t i = 0; i < tensor_count; ++i) {
        const std::string name = detail::get_string(in, path);
        const detail::RawTensor tensor = detail::get_tensor_body(in, path);
        if (name == "phi") ckpt.phi = tensor.as_matrix();
        else if (name == "beta") ckpt.params.beta = tensor.as_matrix();
        else if (name == "msg_update") ckpt.params.update_msg = tensor.as_matrix();
        else if (name == "msg_reset") ckpt.params.reset_msg = tensor.as_matrix();
        else if (name == "msg_cand") ckpt.params.cand_msg = tensor.as_matrix();
        else if (name == "state_update") ckpt.params.update_state = tensor.as_matrix();
        else if (name == "state_reset") ckpt.params.reset_state = tensor.as_matrix();
        else if (name == "state_cand") ckpt.params.cand_state = tensor.as_matrix();
        else if (name == "sum_proj") ckpt.params.sum_proj = tensor.as_matrix();
        else if (name == "attn_last") ckpt.params.attn_last = tensor.as_matrix();
        else if (name == "attn_pos") ckpt.params.attn_pos = tensor.as_matrix();
        else if (name == "attn_out") ckpt.params.attn_out = tensor.as_matrix();
        else if (name == "msg_bias") ckpt.params.msg_bias = tensor.as_vector();
        else if (name == "attn_bias") ckpt.params.attn_bias = tensor.as_vector();
        else if (name == "attn_score") ckpt.params.attn_score = tensor.as_vector();
        else throw ParseError(path + ": unknown tensor '" + name + "'");
    }
    if (!ckpt.has_bias) {
        ckpt.params.beta = Matrix(static_cast<std::size_t>(ckpt.item_count),
                                  static_cast<std::size_t>(ckpt.dim));
    }

    const std::uint64_t vocab_size = detail::get_u64(in, path);
    for (std::uint64_t i = 0; i < vocab_size; ++i) ckpt.vocab.add(detail::get_string(in, path));
    if (ckpt.vocab.size() != ckpt.item_count) {
        throw ParseError(path + ": vocab size does not match item count");
    }
    return ckpt;
}

}  // namespace sessrec
