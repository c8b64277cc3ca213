#ifndef S2C_MODEL_HPP
#define S2C_MODEL_HPP

#include "s2c/aag.hpp"
#include "s2c/roi.hpp"

#include <span>
#include <string>
#include <vector>

namespace s2c {

enum class FeatureSource { backbone, featuremap };

FeatureSource parse_feature_source(const std::string& name);
std::string to_string(FeatureSource s);

struct ModelConfig {
    AagConfig aag;
    Index proposals = 10;
    int roi_size = 5;
    FeatureSource source = FeatureSource::backbone;
    /// Backbone output width, or the channel count of precomputed maps.
    Index map_channels = 32;
    SpatialVariant spatial = SpatialVariant::disemb;
    double eps = 0.2;
    /// Hidden width of the DisDrop perceptron / embedding width of DisEmb.
    Index spatial_hidden = 16;
    /// +1 uses the squared embedded distance as is; -1 negates it.
    double spatial_sign = 1.0;

    void validate() const;
};

/// One image as seen by the network: pixels for the backbone path or a
/// precomputed map, plus the original pixel extent.
struct SceneInput {
    const Image* image = nullptr;
    const FeatureMap<float>* feature_map = nullptr;
    double width = 0;
    double height = 0;
};

/// The full cropping network: features -> nodes -> edges -> AAG -> score.
template <typename S>
class Model {
public:
    Model(const ModelConfig& config, std::uint64_t seed);
    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;

    struct Features {
        Var<S> map;
        FeatureGeometry geometry;
        double image_width = 0;
        double image_height = 0;
    };

    const ModelConfig& config() const { return config_; }
    ParameterSet<S>& params() { return params_; }
    const ParameterSet<S>& params() const { return params_; }

    /// The single per-image feature pass (backbone run or map load onto the tape).
    Features features(Tape<S>& tape, const SceneInput& scene) const;

    /// K x 1 scores for `crops`; proposals must already be padded to config().proposals.
    Var<S> score(Tape<S>& tape, const Features& features, std::span<const RegionBox> proposals,
                 std::span<const RegionBox> crops, AdjacencyStats* stats = nullptr) const;

    /// Forward-only scoring of every crop with one feature pass.
    std::vector<double> score_candidates(const SceneInput& scene, std::span<const RegionBox> proposals,
                                         std::span<const RegionBox> crops, AdjacencyStats* stats = nullptr) const;

    std::size_t feature_passes() const { return feature_passes_; }
    void reset_feature_passes() { feature_passes_ = 0; }

    /// Copies parameter values (same config) from another model of any precision.
    template <typename T>
    void copy_values_from(const Model<T>& other);

private:
    ModelConfig config_;
    ParameterSet<S> params_;
    Backbone<S> backbone_;
    NodeProjection<S> projection_;
    SpatialEdgeParams<S> spatial_;
    AagParams<S> aag_;
    mutable std::size_t feature_passes_ = 0;
};

template <typename S>
template <typename T>
void Model<S>::copy_values_from(const Model<T>& other) {
    if (other.params().size() != params_.size()) throw ConfigError("copy_values_from: parameter sets differ");
    for (std::size_t i = 0; i < params_.size(); ++i) {
        const auto& src = other.params()[i];
        auto& dst = params_[i];
        if (src.name != dst.name || src.value.rows() != dst.value.rows() || src.value.cols() != dst.value.cols())
            throw ConfigError("copy_values_from: parameter '" + src.name + "' does not match");
        dst.value = src.value.template cast<S>();
    }
}

} // namespace s2c

#endif
