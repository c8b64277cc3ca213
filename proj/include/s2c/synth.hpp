#ifndef S2C_SYNTH_HPP
#define S2C_SYNTH_HPP

#include "s2c/candidates.hpp"
#include "s2c/dataset.hpp"

#include <string>
#include <vector>

namespace s2c {

/// Knobs of the planted scene generator and its scoring rule:
/// score = a + b * coverage(interest) - c * (objects cut) + t * occupancy(interest) + noise,
/// clipped to [1, 5]. The occupancy term rewards tight framing, so the crops
/// that contain the subject are not all tied.
struct SynthSpec {
    int width = 256;
    int height = 192;
    int min_objects = 3;
    int max_objects = 5;
    double text_strip_probability = 0.6;
    double a = 2.0;
    double b = 2.0;
    double c = 0.4;
    double t = 3.0;
    double noise = 0.02;
    AnchorGrid grid;

    void validate() const;
};

enum class ObjectShape { rectangle, ellipse, text_strip };

struct SynthObject {
    RegionBox box;
    ObjectShape shape = ObjectShape::rectangle;
    float color[3] = {0, 0, 0};
};

/// Ground truth of one generated image. objects[0] is the subject; its box is the interest region.
struct PlantedScene {
    std::string image_id;
    std::vector<SynthObject> objects;
    RegionBox interest;
};

/// Fraction of `region` covered by `crop`.
double coverage(const RegionBox& crop, const RegionBox& region);
/// Fraction of `crop` that lies inside `region`.
double occupancy(const RegionBox& crop, const RegionBox& region);
/// Objects overlapping the crop without lying fully inside it.
int cut_count(const RegionBox& crop, const std::vector<SynthObject>& objects);

/// The planted scoring rule without noise or clipping.
double planted_score(const SynthSpec& spec, const PlantedScene& scene, const RegionBox& crop);

struct SynthDataset {
    SynthSpec spec;
    std::vector<PlantedScene> scenes;
    std::vector<LoadedSample> samples;
};

Image render_scene(const SynthSpec& spec, const PlantedScene& scene, std::uint64_t texture_seed);

/// Deterministic in (n_images, seed, spec). Records reference images/<id>.ppm.
SynthDataset synth_dataset(int n_images, std::uint64_t seed, const SynthSpec& spec = {});

/// Writes images, manifest.jsonl and oracle.json under out_dir.
void write_synth_dataset(const SynthDataset& data, const std::string& out_dir);

std::string oracle_json(const SynthDataset& data);

} // namespace s2c

#endif
