#ifndef S2C_CONFIG_HPP
#define S2C_CONFIG_HPP

#include "s2c/synth.hpp"
#include "s2c/training.hpp"

#include <string>

namespace s2c {

enum class Precision { float32, float64 };

/// Everything that determines a run; serialized next to every output.
struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    AnchorGrid anchors;
    SynthSpec synth;
    Precision precision = Precision::float32;
    std::uint64_t model_seed = 1;
    /// Trailing share of the manifest held out for validation.
    double val_fraction = 0.2;

    void validate() const;
};

/// Stable, key-ordered JSON text.
std::string run_config_to_json(const RunConfig& config);
/// Missing keys keep their defaults; unknown keys are a ConfigError.
RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::string& path);

} // namespace s2c

#endif
