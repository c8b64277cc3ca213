#include "s2c/roi.hpp"

#include "s2c/binary_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace s2c {

RegionBox make_box(double x1, double y1, double x2, double y2, BoxRole role, double confidence) {
    RegionBox b;
    b.x1 = x1;
    b.y1 = y1;
    b.x2 = x2;
    b.y2 = y2;
    b.role = role;
    b.confidence = confidence;
    return b;
}

double intersection_area(const RegionBox& a, const RegionBox& b) {
    const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
    const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
    return (w > 0 && h > 0) ? w * h : 0.0;
}

double iou(const RegionBox& a, const RegionBox& b) {
    const double inter = intersection_area(a, b);
    const double uni = a.area() + b.area() - inter;
    return uni > 0 ? inter / uni : 0.0;
}

RegionBox flip_box(const RegionBox& box, double image_width) {
    RegionBox out = box;
    out.x1 = image_width - box.x2;
    out.x2 = image_width - box.x1;
    return out;
}

RegionBox clip_box(const RegionBox& box, double image_width, double image_height) {
    RegionBox out = box;
    out.x1 = std::clamp(box.x1, 0.0, image_width);
    out.x2 = std::clamp(box.x2, 0.0, image_width);
    out.y1 = std::clamp(box.y1, 0.0, image_height);
    out.y2 = std::clamp(box.y2, 0.0, image_height);
    if (!(out.x2 > out.x1) || !(out.y2 > out.y1))
        throw RegionError("box [" + std::to_string(box.x1) + ", " + std::to_string(box.y1) + ", " +
                          std::to_string(box.x2) + ", " + std::to_string(box.y2) +
                          "] has zero area inside the image");
    return out;
}

// ---------------------------------------------------------------------------
// S2FM container

FeatureMap<float> read_feature_map(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open feature map " + path);
    BinaryReader r(in, path);
    r.expect_magic("S2FM");
    const auto version = r.u32();
    if (version != 1) throw IoError(path + ": unsupported feature map version " + std::to_string(version));
    FeatureMap<float> fm;
    fm.geometry.channels = r.u32();
    fm.geometry.height = r.u32();
    fm.geometry.width = r.u32();
    fm.geometry.stride = r.f32();
    if (fm.geometry.channels == 0 || fm.geometry.height == 0 || fm.geometry.width == 0 || !(fm.geometry.stride > 0))
        throw IoError(path + ": invalid feature map geometry");
    const Index hw = fm.geometry.positions();
    fm.data.resize(hw, fm.geometry.channels);
    for (Index c = 0; c < fm.geometry.channels; ++c)
        for (Index p = 0; p < hw; ++p) fm.data(p, c) = r.f32();
    return fm;
}

void write_feature_map(const std::string& path, const FeatureMap<float>& fm) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write feature map " + path);
    BinaryWriter w(out);
    w.magic("S2FM");
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(fm.geometry.channels));
    w.u32(static_cast<std::uint32_t>(fm.geometry.height));
    w.u32(static_cast<std::uint32_t>(fm.geometry.width));
    w.f32(static_cast<float>(fm.geometry.stride));
    for (Index c = 0; c < fm.geometry.channels; ++c)
        for (Index p = 0; p < fm.geometry.positions(); ++p) w.f32(fm.data(p, c));
    if (!out) throw IoError("short write to " + path);
}

// ---------------------------------------------------------------------------
// Pooling plans

namespace {

void bilinear_taps(double y, double x, const FeatureGeometry& g, double weight, const std::vector<char>* masked,
                   std::vector<PoolTap>& taps) {
    const auto H = static_cast<double>(g.height), W = static_cast<double>(g.width);
    if (y < -1.0 || y > H || x < -1.0 || x > W) return;
    y = std::max(y, 0.0);
    x = std::max(x, 0.0);
    auto yl = static_cast<Index>(std::floor(y)), xl = static_cast<Index>(std::floor(x));
    Index yh, xh;
    if (yl >= g.height - 1) {
        yl = yh = g.height - 1;
        y = static_cast<double>(yl);
    } else {
        yh = yl + 1;
    }
    if (xl >= g.width - 1) {
        xl = xh = g.width - 1;
        x = static_cast<double>(xl);
    } else {
        xh = xl + 1;
    }
    const double ly = y - static_cast<double>(yl), lx = x - static_cast<double>(xl);
    const double hy = 1.0 - ly, hx = 1.0 - lx;
    const Index rows[4] = {yl * g.width + xl, yl * g.width + xh, yh * g.width + xl, yh * g.width + xh};
    const double ws[4] = {hy * hx, hy * lx, ly * hx, ly * lx};
    for (int k = 0; k < 4; ++k) {
        if (ws[k] == 0.0) continue;
        if (masked != nullptr && (*masked)[static_cast<std::size_t>(rows[k])]) continue;
        taps.push_back({rows[k], weight * ws[k]});
    }
}

void append_box_cells(const FeatureGeometry& g, const RegionBox& box, int out_size, const std::vector<char>* masked,
                      PoolPlan& plan) {
    const double fx1 = box.x1 / g.stride - 0.5, fy1 = box.y1 / g.stride - 0.5;
    const double bin_w = box.width() / g.stride / out_size, bin_h = box.height() / g.stride / out_size;
    for (int iy = 0; iy < out_size; ++iy)
        for (int ix = 0; ix < out_size; ++ix) {
            std::vector<PoolTap> taps;
            for (int sy = 0; sy < 2; ++sy)
                for (int sx = 0; sx < 2; ++sx) {
                    const double y = fy1 + (iy + (sy + 0.5) / 2.0) * bin_h;
                    const double x = fx1 + (ix + (sx + 0.5) / 2.0) * bin_w;
                    bilinear_taps(y, x, g, 0.25, masked, taps);
                }
            plan.taps.push_back(std::move(taps));
        }
}

void check_geometry(const FeatureGeometry& g, int out_size) {
    if (out_size < 1) throw DataError("pooling out_size must be >= 1, got " + std::to_string(out_size));
    if (g.height < 1 || g.width < 1 || !(g.stride > 0)) throw DataError("invalid feature geometry");
}

} // namespace

PoolPlan roi_align_plan(const FeatureGeometry& geometry, std::span<const RegionBox> boxes, int out_size) {
    check_geometry(geometry, out_size);
    PoolPlan plan;
    plan.out_rows = static_cast<Index>(boxes.size());
    plan.cells = static_cast<Index>(out_size) * out_size;
    plan.taps.reserve(boxes.size() * static_cast<std::size_t>(plan.cells));
    for (const auto& b : boxes) {
        const auto clipped = clip_box(b, geometry.extent_width(), geometry.extent_height());
        append_box_cells(geometry, clipped, out_size, nullptr, plan);
    }
    return plan;
}

PoolPlan rod_align_plan(const FeatureGeometry& geometry, std::span<const RegionBox> crops, int out_size) {
    check_geometry(geometry, out_size);
    PoolPlan plan;
    plan.out_rows = static_cast<Index>(crops.size());
    plan.cells = static_cast<Index>(out_size) * out_size;
    plan.taps.reserve(crops.size() * static_cast<std::size_t>(plan.cells));
    const auto full = make_box(0, 0, geometry.extent_width(), geometry.extent_height());
    std::vector<char> masked(static_cast<std::size_t>(geometry.positions()));
    for (const auto& b : crops) {
        const auto crop = clip_box(b, geometry.extent_width(), geometry.extent_height());
        for (Index y = 0; y < geometry.height; ++y)
            for (Index x = 0; x < geometry.width; ++x) {
                const double cx = (static_cast<double>(x) + 0.5) * geometry.stride;
                const double cy = (static_cast<double>(y) + 0.5) * geometry.stride;
                masked[static_cast<std::size_t>(y * geometry.width + x)] =
                    cx >= crop.x1 && cx <= crop.x2 && cy >= crop.y1 && cy <= crop.y2;
            }
        append_box_cells(geometry, full, out_size, &masked, plan);
    }
    return plan;
}

namespace {

template <typename S>
Matrix<S> pool_single(const FeatureMap<S>& fm, const PoolPlan& plan) {
    Tape<S> tape(false);
    auto out = sparse_pool(tape.constant(fm.data), plan);
    const Index c = fm.geometry.channels;
    Matrix<S> cells = Eigen::Map<const Matrix<S>>(out.value().data(), plan.cells, c);
    return cells;
}

} // namespace

template <typename S>
Matrix<S> roi_align(const FeatureMap<S>& fm, const RegionBox& box, int out_size) {
    return pool_single(fm, roi_align_plan(fm.geometry, std::span<const RegionBox>(&box, 1), out_size));
}

template <typename S>
Matrix<S> rod_align(const FeatureMap<S>& fm, const RegionBox& crop, int out_size) {
    return pool_single(fm, rod_align_plan(fm.geometry, std::span<const RegionBox>(&crop, 1), out_size));
}

// ---------------------------------------------------------------------------
// Backbone

template <typename S>
Backbone<S> make_backbone(ParameterSet<S>& params, Index map_channels, Rng& rng) {
    const Index widths[5] = {3, 8, 16, 32, map_channels};
    Backbone<S> net;
    for (int i = 0; i < 4; ++i)
        net.convs[i] = make_dense(params, "backbone.conv" + std::to_string(i + 1), 9 * widths[i], widths[i + 1], rng);
    return net;
}

template <typename S>
Matrix<S> image_matrix(const Image& image) {
    Matrix<S> m(static_cast<Index>(image.width) * image.height, 3);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            for (int c = 0; c < 3; ++c)
                m(static_cast<Index>(y) * image.width + x, c) = static_cast<S>(image.at(x, y, c)) - S(0.5);
    return m;
}

template <typename S>
Var<S> toy_backbone(Tape<S>& tape, const Backbone<S>& net, const Image& image, FeatureGeometry* geometry) {
    if (image.width < 32 || image.height < 32)
        throw DataError("backbone input must be at least 32x32, got " + std::to_string(image.width) + "x" +
                        std::to_string(image.height));
    Index h = image.height, w = image.width;
    auto x = tape.constant(image_matrix<S>(image));
    for (int i = 0; i < 4; ++i) {
        x = conv3x3_s2(x, h, w, tape.param(*net.convs[i].weight), tape.param(*net.convs[i].bias));
        h = conv_s2_extent(h);
        w = conv_s2_extent(w);
        if (i < 3) x = relu(x);
    }
    if (geometry != nullptr) *geometry = FeatureGeometry{net.map_channels(), h, w, 16.0};
    return x;
}

// ---------------------------------------------------------------------------
// Nodes

template <typename S>
NodeProjection<S> make_node_projection(ParameterSet<S>& params, Index channels, int out_size, Index dim, Rng& rng) {
    const Index flat = channels * out_size * out_size;
    NodeProjection<S> p;
    p.crop = make_dense(params, "nodes.crop_fc", 2 * flat, dim, rng);
    p.proposal = make_dense(params, "nodes.proposal_fc", flat, dim, rng);
    p.null_embedding = &params.add("nodes.null_embedding", uniform_matrix<S>(1, dim, 1.0 / std::sqrt(double(dim)), rng));
    return p;
}

std::vector<RegionBox> prepare_proposals(std::span<const RegionBox> proposals, std::size_t n, double image_width,
                                         double image_height) {
    std::vector<RegionBox> sorted(proposals.begin(), proposals.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const RegionBox& a, const RegionBox& b) { return a.confidence > b.confidence; });
    if (sorted.size() > n) sorted.resize(n);
    for (auto& b : sorted) b.role = BoxRole::object_proposal;
    while (sorted.size() < n) {
        auto pad = make_box(0, 0, image_width, image_height, BoxRole::object_proposal, 0.0);
        pad.active = false;
        sorted.push_back(pad);
    }
    return sorted;
}

template <typename S>
NodeBatch<S> build_nodes(Tape<S>& tape, const Var<S>& feature_map, const FeatureGeometry& geometry,
                         double image_width, double image_height, std::span<const RegionBox> crops,
                         std::span<const RegionBox> proposals, const NodeProjection<S>& projection, int out_size) {
    if (crops.empty()) throw DataError("build_nodes: no crop candidates");
    if (proposals.empty()) throw DataError("build_nodes: no proposals (use heuristic_proposals as fallback)");
    if (feature_map.cols() != geometry.channels || feature_map.rows() != geometry.positions())
        throw DimensionError("build_nodes: feature map " + shape_of(feature_map.value()) +
                             " does not match its geometry");
    const auto K = static_cast<Index>(crops.size());
    const auto N = static_cast<Index>(proposals.size());
    const Index n = N + 1;

    auto roi_props = sparse_pool(feature_map, roi_align_plan(geometry, proposals, out_size));
    auto prop_nodes = dense_forward(tape, projection.proposal, roi_props);
    Matrix<S> inactive = Matrix<S>::Zero(N, 1);
    bool any_inactive = false;
    for (Index j = 0; j < N; ++j)
        if (!proposals[static_cast<std::size_t>(j)].active) {
            inactive(j, 0) = S(1);
            any_inactive = true;
        }
    if (any_inactive)
        prop_nodes = add(prop_nodes, matmul(tape.constant(std::move(inactive)), tape.param(*projection.null_embedding)));

    auto roi_crops = sparse_pool(feature_map, roi_align_plan(geometry, crops, out_size));
    auto rod_crops = sparse_pool(feature_map, rod_align_plan(geometry, crops, out_size));
    auto crop_nodes = dense_forward(tape, projection.crop, concat_cols<S>({roi_crops, rod_crops}));

    std::vector<Index> index(static_cast<std::size_t>(K * n));
    NodeBatch<S> batch;
    batch.group = n;
    batch.candidates = K;
    batch.centers.resize(K * n, 2);
    for (Index g = 0; g < K; ++g) {
        index[static_cast<std::size_t>(g * n)] = g;
        const auto& c = crops[static_cast<std::size_t>(g)];
        batch.centers(g * n, 0) = static_cast<S>(c.center_x() / image_width);
        batch.centers(g * n, 1) = static_cast<S>(c.center_y() / image_height);
        for (Index j = 0; j < N; ++j) {
            index[static_cast<std::size_t>(g * n + 1 + j)] = K + j;
            const auto& p = proposals[static_cast<std::size_t>(j)];
            batch.centers(g * n + 1 + j, 0) = static_cast<S>(p.center_x() / image_width);
            batch.centers(g * n + 1 + j, 1) = static_cast<S>(p.center_y() / image_height);
        }
    }
    batch.features = gather_rows(concat_rows<S>({crop_nodes, prop_nodes}), std::move(index));
    return batch;
}

// ---------------------------------------------------------------------------
// Heuristic proposals

std::vector<RegionBox> heuristic_proposals(const Image& image, std::size_t n) {
    if (n == 0) throw UsageError("heuristic_proposals: n must be >= 1");
    const int W = image.width, H = image.height;
    if (W < 2 || H < 2) throw DataError("heuristic_proposals: image too small");
    std::vector<double> integral(static_cast<std::size_t>(W + 1) * (H + 1), 0.0);
    auto I = [&](int x, int y) -> double& { return integral[static_cast<std::size_t>(y) * (W + 1) + x]; };
    for (int y = 0; y < H; ++y) {
        double row = 0;
        for (int x = 0; x < W; ++x) {
            row += image.luminance(x, y);
            I(x + 1, y + 1) = I(x + 1, y) + row;
        }
    }
    auto box_sum = [&](int x1, int y1, int x2, int y2) { return I(x2, y2) - I(x1, y2) - I(x2, y1) + I(x1, y1); };

    struct Scored {
        RegionBox box;
        double energy;
    };
    std::vector<Scored> all;
    const double fractions[] = {0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5};
    for (double fh : fractions)
        for (double fw : fractions) {
            const int bw = std::max(2, static_cast<int>(std::lround(fw * W)));
            const int bh = std::max(2, static_cast<int>(std::lround(fh * H)));
            const int sx = std::max(1, bw / 4), sy = std::max(1, bh / 4);
            for (int y = 0; y + bh <= H; y += sy)
                for (int x = 0; x + bw <= W; x += sx) {
                    const int ox1 = std::max(0, x - bw / 2), oy1 = std::max(0, y - bh / 2);
                    const int ox2 = std::min(W, x + bw + bw / 2), oy2 = std::min(H, y + bh + bh / 2);
                    const double inner = box_sum(x, y, x + bw, y + bh);
                    const double outer = box_sum(ox1, oy1, ox2, oy2) - inner;
                    const double ring_area = double(ox2 - ox1) * (oy2 - oy1) - double(bw) * bh;
                    double energy = 0.0;
                    if (ring_area > 0) energy = std::abs(inner / (double(bw) * bh) - outer / ring_area);
                    energy = std::round(energy * 1e9) / 1e9;
                    all.push_back({make_box(x, y, x + bw, y + bh, BoxRole::object_proposal, energy), energy});
                }
        }
    std::stable_sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) { return a.energy > b.energy; });
    std::vector<RegionBox> kept;
    for (const auto& s : all) {
        if (kept.size() == n) break;
        bool overlaps = false;
        for (const auto& k : kept)
            if (iou(k, s.box) > 0.5) {
                overlaps = true;
                break;
            }
        if (!overlaps) kept.push_back(s.box);
    }
    return kept;
}

#define S2C_INSTANTIATE_ROI(S)                                                                                    \
    template Matrix<S> roi_align(const FeatureMap<S>&, const RegionBox&, int);                                    \
    template Matrix<S> rod_align(const FeatureMap<S>&, const RegionBox&, int);                                    \
    template Backbone<S> make_backbone(ParameterSet<S>&, Index, Rng&);                                            \
    template Matrix<S> image_matrix<S>(const Image&);                                                             \
    template Var<S> toy_backbone(Tape<S>&, const Backbone<S>&, const Image&, FeatureGeometry*);                   \
    template NodeProjection<S> make_node_projection(ParameterSet<S>&, Index, int, Index, Rng&);                   \
    template NodeBatch<S> build_nodes(Tape<S>&, const Var<S>&, const FeatureGeometry&, double, double,            \
                                      std::span<const RegionBox>, std::span<const RegionBox>,                     \
                                      const NodeProjection<S>&, int);

S2C_INSTANTIATE_ROI(float)
S2C_INSTANTIATE_ROI(double)

} // namespace s2c
