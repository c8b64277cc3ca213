#ifndef S2C_CHECKPOINT_HPP
#define S2C_CHECKPOINT_HPP

#include "s2c/autodiff.hpp"

#include <string>
#include <vector>

namespace s2c {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
    std::string name;
    std::vector<std::uint32_t> shape;
    std::vector<float> data;
};

/// Decoded "S2CK" container: a config text block and a named parameter table.
struct Checkpoint {
    std::string config_json;
    std::vector<NamedTensor> tensors;
};

template <typename S>
Checkpoint make_checkpoint(const std::string& config_json, const ParameterSet<S>& params);

/// Copies every tensor into the parameter of the same name; names and shapes must match exactly.
template <typename S>
void apply_checkpoint(const Checkpoint& checkpoint, ParameterSet<S>& params);

std::string checkpoint_bytes(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(const std::string& bytes, const std::string& source = "checkpoint");

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

/// Hex SHA-1 of "blob <size>\0" + bytes, as git hashes file contents.
std::string git_blob_hash(const std::string& bytes);

} // namespace s2c

#endif
