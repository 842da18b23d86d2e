#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "gradsample/error.hpp"
#include "gradsample/mlp.hpp"

namespace gradsample {

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

namespace detail {

template <typename T>
void write_raw(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in, const char* what) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw ParseError(std::string("checkpoint: truncated while reading ") + what);
    return value;
}

} // namespace detail

inline constexpr char kCheckpointMagic[8] = {'G', 'S', 'M', 'L', 'P', 'C', 'K', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void save_checkpoint(const MlpModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("checkpoint: cannot open for writing: " + path);
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    detail::write_raw(out, kCheckpointVersion);
    detail::write_raw(out, static_cast<std::uint32_t>(model.dims.size()));
    for (std::size_t d : model.dims) detail::write_raw(out, static_cast<std::uint64_t>(d));
    detail::write_raw(out, static_cast<std::uint32_t>(model.hidden_activations.size()));
    for (Activation a : model.hidden_activations)
        detail::write_raw(out, static_cast<std::uint8_t>(a == Activation::sine ? 1 : 0));
    detail::write_raw(out, model.omega0);
    detail::write_raw(out, static_cast<std::uint8_t>(
                               model.loss_kind == LossKind::squared_error ? 1 : 0));
    detail::write_raw(out, static_cast<std::uint64_t>(model.theta.size()));
    out.write(reinterpret_cast<const char*>(model.theta.data()),
              static_cast<std::streamsize>(model.theta.size() * sizeof(double)));
    if (!out) throw ParseError("checkpoint: write failed: " + path);
}

inline MlpModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("checkpoint: cannot open for reading: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw ParseError("checkpoint: bad magic: " + path);
    const auto version = detail::read_raw<std::uint32_t>(in, "version");
    if (version != kCheckpointVersion)
        throw ParseError("checkpoint: unsupported version in " + path);
    MlpModel model;
    const auto n_dims = detail::read_raw<std::uint32_t>(in, "dim count");
    if (n_dims < 2) throw ParseError("checkpoint: fewer than two layer dims in " + path);
    model.dims.resize(n_dims);
    for (auto& d : model.dims)
        d = static_cast<std::size_t>(detail::read_raw<std::uint64_t>(in, "dim"));
    const auto n_acts = detail::read_raw<std::uint32_t>(in, "activation count");
    if (n_acts != n_dims - 2)
        throw ParseError("checkpoint: activation tag count mismatch in " + path);
    model.hidden_activations.resize(n_acts);
    for (auto& a : model.hidden_activations) {
        const auto tag = detail::read_raw<std::uint8_t>(in, "activation tag");
        if (tag > 1) throw ParseError("checkpoint: unknown activation tag in " + path);
        a = tag == 1 ? Activation::sine : Activation::relu;
    }
    model.omega0 = detail::read_raw<double>(in, "omega0");
    const auto loss_tag = detail::read_raw<std::uint8_t>(in, "loss tag");
    if (loss_tag > 1) throw ParseError("checkpoint: unknown loss tag in " + path);
    model.loss_kind =
        loss_tag == 1 ? LossKind::squared_error : LossKind::softmax_cross_entropy;
    const auto count = detail::read_raw<std::uint64_t>(in, "parameter count");
    if (count != model.param_count())
        throw ParseError("checkpoint: parameter count does not match dims in " + path);
    model.theta.resize(count);
    in.read(reinterpret_cast<char*>(model.theta.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw ParseError("checkpoint: truncated parameter block in " + path);
    return model;
}

} // namespace gradsample
