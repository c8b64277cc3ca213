#ifndef S2C_ROI_HPP
#define S2C_ROI_HPP

#include "s2c/image.hpp"
#include "s2c/nn.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace s2c {

enum class BoxRole { crop_candidate, object_proposal };

/// Axis-aligned box in image pixels.
struct RegionBox {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
    BoxRole role = BoxRole::crop_candidate;
    double confidence = 1.0;
    /// False for padding proposals that stand in for missing detections.
    bool active = true;

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double area() const { return width() * height(); }
    double center_x() const { return 0.5 * (x1 + x2); }
    double center_y() const { return 0.5 * (y1 + y2); }

    bool operator==(const RegionBox& o) const {
        return x1 == o.x1 && y1 == o.y1 && x2 == o.x2 && y2 == o.y2;
    }
};

RegionBox make_box(double x1, double y1, double x2, double y2, BoxRole role = BoxRole::crop_candidate,
                   double confidence = 1.0);
double intersection_area(const RegionBox& a, const RegionBox& b);
double iou(const RegionBox& a, const RegionBox& b);
RegionBox flip_box(const RegionBox& box, double image_width);
/// Clips to [0, w] x [0, h]; throws RegionError if nothing is left.
RegionBox clip_box(const RegionBox& box, double image_width, double image_height);

struct FeatureGeometry {
    Index channels = 0;
    Index height = 0;
    Index width = 0;
    double stride = 1.0;

    Index positions() const { return height * width; }
    double extent_width() const { return static_cast<double>(width) * stride; }
    double extent_height() const { return static_cast<double>(height) * stride; }
};

/// Feature activations packed spatial-major: data is (height*width) x channels,
/// row y*width + x holding the channel vector of cell (y, x).
template <typename S>
struct FeatureMap {
    FeatureGeometry geometry;
    Matrix<S> data;
};

/// Reads/writes the binary S2FM container (channel-major float32 payload).
FeatureMap<float> read_feature_map(const std::string& path);
void write_feature_map(const std::string& path, const FeatureMap<float>& fm);

// Region pooling. Output rows hold out_size x out_size cells, each `channels`
// wide, flattened as (cell_y * out_size + cell_x) * channels + channel.
// Box coordinates are mapped to feature space by dividing by the stride with a
// half-cell offset (cell (y, x) is centred at ((x + 0.5) s, (y + 0.5) s)), and
// each cell averages a regular 2x2 grid of bilinear samples.

PoolPlan roi_align_plan(const FeatureGeometry& geometry, std::span<const RegionBox> boxes, int out_size);
/// Pools the full map extent with cells whose centres lie inside each crop removed.
PoolPlan rod_align_plan(const FeatureGeometry& geometry, std::span<const RegionBox> crops, int out_size);

/// out_size*out_size x channels for a single box.
template <typename S>
Matrix<S> roi_align(const FeatureMap<S>& fm, const RegionBox& box, int out_size);
template <typename S>
Matrix<S> rod_align(const FeatureMap<S>& fm, const RegionBox& crop, int out_size);

/// Four stride-2 3x3 convolutions (widths 8/16/32/map_channels), overall stride 16.
template <typename S>
struct Backbone {
    std::array<Dense<S>, 4> convs;

    Index map_channels() const { return convs[3].out_dim(); }
};

template <typename S>
Backbone<S> make_backbone(ParameterSet<S>& params, Index map_channels, Rng& rng);

/// Image pixels centred at zero, as a (height*width) x 3 matrix.
template <typename S>
Matrix<S> image_matrix(const Image& image);

/// Runs the backbone on the tape; the result is a (h*w) x map_channels node.
template <typename S>
Var<S> toy_backbone(Tape<S>& tape, const Backbone<S>& net, const Image& image, FeatureGeometry* geometry);

/// Projections from pooled regions to d-dimensional nodes.
template <typename S>
struct NodeProjection {
    Dense<S> crop;      // from concat(RoI, RoD)
    Dense<S> proposal;  // from RoI
    Parameter<S>* null_embedding = nullptr;  // added to inactive proposals

    Index dim() const { return crop.out_dim(); }
};

template <typename S>
NodeProjection<S> make_node_projection(ParameterSet<S>& params, Index channels, int out_size, Index dim, Rng& rng);

/// K crop candidates sharing one proposal set, stacked as K groups of N+1 rows.
/// Row g*(N+1) is crop g; the following N rows are the proposals.
template <typename S>
struct NodeBatch {
    Var<S> features;
    Matrix<S> centers;  // (K*(N+1)) x 2, normalized by image width/height
    Index group = 0;    // N + 1
    Index candidates = 0;
};

/// Sorts by confidence (stable), truncates to n, pads with inactive full-image boxes.
std::vector<RegionBox> prepare_proposals(std::span<const RegionBox> proposals, std::size_t n, double image_width,
                                         double image_height);

template <typename S>
NodeBatch<S> build_nodes(Tape<S>& tape, const Var<S>& feature_map, const FeatureGeometry& geometry,
                         double image_width, double image_height, std::span<const RegionBox> crops,
                         std::span<const RegionBox> proposals, const NodeProjection<S>& projection, int out_size);

/// Deterministic proposal fallback: centre-surround luminance contrast over a
/// multi-scale sliding grid, greedy NMS at IoU 0.5, ties in scan order.
std::vector<RegionBox> heuristic_proposals(const Image& image, std::size_t n);

} // namespace s2c

#endif
