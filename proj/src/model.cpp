#include "s2c/model.hpp"

namespace s2c {

FeatureSource parse_feature_source(const std::string& name) {
    if (name == "backbone") return FeatureSource::backbone;
    if (name == "featuremap") return FeatureSource::featuremap;
    throw ConfigError("unknown feature source '" + name + "' (expected backbone or featuremap)");
}

std::string to_string(FeatureSource s) { return s == FeatureSource::backbone ? "backbone" : "featuremap"; }

void ModelConfig::validate() const {
    aag.validate();
    if (proposals < 1) throw ConfigError("model: proposal count must be >= 1");
    if (roi_size < 1) throw ConfigError("model: roi_size must be >= 1");
    if (map_channels < 1) throw ConfigError("model: map_channels must be >= 1");
    if (!(eps > 0)) throw ConfigError("model: eps must be positive");
    if (spatial_hidden < 1) throw ConfigError("model: spatial_hidden must be >= 1");
    if (spatial_sign != 1.0 && spatial_sign != -1.0) throw ConfigError("model: spatial_sign must be +1 or -1");
}

template <typename S>
Model<S>::Model(const ModelConfig& config, std::uint64_t seed) : config_(config) {
    config_.validate();
    Rng rng(seed);
    if (config_.source == FeatureSource::backbone) backbone_ = make_backbone(params_, config_.map_channels, rng);
    projection_ = make_node_projection(params_, config_.map_channels, config_.roi_size, config_.aag.d, rng);
    if (config_.aag.use_spatial)
        spatial_ = make_spatial_params(params_, config_.spatial, config_.eps, config_.spatial_hidden, rng);
    aag_ = make_aag_params(params_, config_.aag, rng);
}

template <typename S>
typename Model<S>::Features Model<S>::features(Tape<S>& tape, const SceneInput& scene) const {
    Features f;
    f.image_width = scene.width;
    f.image_height = scene.height;
    if (!(scene.width > 0) || !(scene.height > 0)) throw DataError("scene has no pixel extent");
    if (config_.source == FeatureSource::backbone) {
        if (scene.image == nullptr) throw DataError("backbone model needs an image input");
        f.map = toy_backbone(tape, backbone_, *scene.image, &f.geometry);
    } else {
        if (scene.feature_map == nullptr) throw DataError("feature-map model needs a precomputed feature map");
        const auto& fm = *scene.feature_map;
        if (fm.geometry.channels != config_.map_channels)
            throw DimensionError("feature map has " + std::to_string(fm.geometry.channels) +
                                 " channels, model expects " + std::to_string(config_.map_channels));
        f.geometry = fm.geometry;
        f.map = tape.constant(fm.data.template cast<S>());
    }
    ++feature_passes_;
    return f;
}

template <typename S>
Var<S> Model<S>::score(Tape<S>& tape, const Features& features, std::span<const RegionBox> proposals,
                       std::span<const RegionBox> crops, AdjacencyStats* stats) const {
    if (static_cast<Index>(proposals.size()) != config_.proposals)
        throw DataError("expected " + std::to_string(config_.proposals) + " prepared proposals, got " +
                        std::to_string(proposals.size()));
    auto nodes = build_nodes(tape, features.map, features.geometry, features.image_width, features.image_height, crops,
                             proposals, projection_, config_.roi_size);
    Var<S> spatial;
    if (config_.aag.use_spatial) {
        spatial = spatial_edges(tape, nodes.centers, nodes.group, spatial_);
        if (config_.spatial_sign < 0) spatial = scale(spatial, S(-1));
    }
    auto h = aag_block(tape, nodes.features, spatial, aag_, config_.aag, nodes.group, stats);
    return score_head(tape, h, aag_.head, nodes.group);
}

template <typename S>
std::vector<double> Model<S>::score_candidates(const SceneInput& scene, std::span<const RegionBox> proposals,
                                               std::span<const RegionBox> crops, AdjacencyStats* stats) const {
    Tape<S> tape(false);
    auto f = features(tape, scene);
    auto out = score(tape, f, proposals, crops, stats);
    std::vector<double> scores(static_cast<std::size_t>(out.rows()));
    for (Index i = 0; i < out.rows(); ++i) scores[static_cast<std::size_t>(i)] = static_cast<double>(out.value()(i, 0));
    return scores;
}

template class Model<float>;
template class Model<double>;

} // namespace s2c
