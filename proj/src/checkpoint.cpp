#include "s2c/checkpoint.hpp"

#include "s2c/binary_io.hpp"

#include <openssl/sha.h>

#include <fstream>
#include <sstream>

namespace s2c {

template <typename S>
Checkpoint make_checkpoint(const std::string& config_json, const ParameterSet<S>& params) {
    Checkpoint c;
    c.config_json = config_json;
    for (const auto& p : params) {
        NamedTensor t;
        t.name = p.name;
        t.shape = {static_cast<std::uint32_t>(p.value.rows()), static_cast<std::uint32_t>(p.value.cols())};
        t.data.resize(static_cast<std::size_t>(p.value.size()));
        for (Index i = 0; i < p.value.size(); ++i) t.data[static_cast<std::size_t>(i)] = static_cast<float>(p.value.data()[i]);
        c.tensors.push_back(std::move(t));
    }
    return c;
}

template <typename S>
void apply_checkpoint(const Checkpoint& checkpoint, ParameterSet<S>& params) {
    if (checkpoint.tensors.size() != params.size())
        throw DataError("checkpoint holds " + std::to_string(checkpoint.tensors.size()) + " tensors, model has " +
                        std::to_string(params.size()) + " parameters");
    for (const auto& t : checkpoint.tensors) {
        auto* p = params.find(t.name);
        if (p == nullptr) throw DataError("checkpoint tensor '" + t.name + "' has no matching parameter");
        if (t.shape.size() != 2 || t.shape[0] != p->value.rows() || t.shape[1] != p->value.cols())
            throw DimensionError("checkpoint tensor '" + t.name + "' shape does not match " + shape_of(p->value));
        for (std::size_t i = 0; i < t.data.size(); ++i) p->value.data()[i] = static_cast<S>(t.data[i]);
    }
}

std::string checkpoint_bytes(const Checkpoint& c) {
    std::ostringstream out(std::ios::binary);
    BinaryWriter w(out);
    w.magic("S2CK");
    w.u32(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(c.config_json.size()));
    w.bytes(c.config_json);
    w.u32(static_cast<std::uint32_t>(c.tensors.size()));
    for (const auto& t : c.tensors) {
        w.u32(static_cast<std::uint32_t>(t.name.size()));
        w.bytes(t.name);
        w.u32(static_cast<std::uint32_t>(t.shape.size()));
        for (auto d : t.shape) w.u32(d);
        for (float v : t.data) w.f32(v);
    }
    return out.str();
}

Checkpoint parse_checkpoint(const std::string& bytes, const std::string& source) {
    std::istringstream in(bytes, std::ios::binary);
    BinaryReader r(in, source);
    r.expect_magic("S2CK");
    const auto version = r.u32();
    if (version != kCheckpointVersion) throw IoError(source + ": unsupported checkpoint version " + std::to_string(version));
    Checkpoint c;
    c.config_json = r.bytes(r.u32());
    const auto count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        NamedTensor t;
        t.name = r.bytes(r.u32());
        const auto dims = r.u32();
        if (dims > 8) throw IoError(source + ": tensor '" + t.name + "' has implausible rank");
        std::size_t n = 1;
        for (std::uint32_t d = 0; d < dims; ++d) {
            t.shape.push_back(r.u32());
            n *= t.shape.back();
        }
        if (n > bytes.size() / 4) throw IoError(source + ": tensor '" + t.name + "' is larger than the file");
        t.data.resize(n);
        for (auto& v : t.data) v = r.f32();
        c.tensors.push_back(std::move(t));
    }
    if (in.peek() != std::char_traits<char>::eof()) throw IoError(source + ": trailing bytes after parameter table");
    return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path);
    const auto bytes = checkpoint_bytes(checkpoint);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_checkpoint(buf.str(), path);
}

std::string git_blob_hash(const std::string& bytes) {
    const std::string payload = "blob " + std::to_string(bytes.size()) + '\0' + bytes;
    unsigned char digest[SHA_DIGEST_LENGTH];
    SHA1(reinterpret_cast<const unsigned char*>(payload.data()), payload.size(), digest);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned char b : digest) {
        out += hex[b >> 4];
        out += hex[b & 15];
    }
    return out;
}

template Checkpoint make_checkpoint(const std::string&, const ParameterSet<float>&);
template Checkpoint make_checkpoint(const std::string&, const ParameterSet<double>&);
template void apply_checkpoint(const Checkpoint&, ParameterSet<float>&);
template void apply_checkpoint(const Checkpoint&, ParameterSet<double>&);

} // namespace s2c
