#include "s2c/candidates.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace s2c {

std::vector<RegionBox> grid_anchor_pool(double image_w, double image_h, const AnchorGrid& grid) {
    if (!(image_w > 0) || !(image_h > 0)) throw DataError("grid_anchors: image dimensions must be positive");
    if (grid.bins < 2) throw ConfigError("grid_anchors: bins must be >= 2");
    const double image_area = image_w * image_h;
    auto corner = [&](int i, double extent) {
        return i == grid.bins - 1 ? extent : extent * i / (grid.bins - 1);
    };
    std::vector<RegionBox> out;
    for (int ix1 = 0; ix1 < grid.bins; ++ix1)
        for (int ix2 = ix1 + 1; ix2 < grid.bins; ++ix2)
            for (int iy1 = 0; iy1 < grid.bins; ++iy1)
                for (int iy2 = iy1 + 1; iy2 < grid.bins; ++iy2) {
                    auto b = make_box(corner(ix1, image_w), corner(iy1, image_h), corner(ix2, image_w),
                                      corner(iy2, image_h));
                    if (b.area() < grid.min_area_ratio * image_area * (1 - 1e-12)) continue;
                    if (b.width() < grid.min_side_ratio * image_w * (1 - 1e-12)) continue;
                    if (b.height() < grid.min_side_ratio * image_h * (1 - 1e-12)) continue;
                    out.push_back(b);
                }
    return out;
}

std::vector<RegionBox> grid_anchors(double image_w, double image_h, const AnchorGrid& grid, bool* unsatisfiable) {
    auto pool = grid_anchor_pool(image_w, image_h, grid);
    if (unsatisfiable != nullptr) *unsatisfiable = pool.empty();
    if (pool.empty()) return {make_box(0, 0, image_w, image_h)};
    std::stable_sort(pool.begin(), pool.end(), [](const RegionBox& a, const RegionBox& b) { return a.area() < b.area(); });
    if (grid.target_count == 0 || pool.size() <= grid.target_count) return pool;
    std::vector<RegionBox> out;
    out.reserve(grid.target_count);
    for (std::size_t i = 0; i < grid.target_count; ++i) out.push_back(pool[i * pool.size() / grid.target_count]);
    return out;
}

namespace {

double scale_at(int i, int scales, double smallest) {
    if (scales <= 1) return 1.0;
    return 1.0 - (1.0 - smallest) * i / (scales - 1);
}

double offset_at(int j, int positions, double slack) {
    if (positions <= 1) return 0.5 * slack;
    return slack * j / (positions - 1);
}

void push_unique(std::vector<RegionBox>& out, const RegionBox& b) {
    for (const auto& o : out)
        if (std::abs(o.x1 - b.x1) < 1e-9 && std::abs(o.y1 - b.y1) < 1e-9 && std::abs(o.x2 - b.x2) < 1e-9 &&
            std::abs(o.y2 - b.y2) < 1e-9)
            return;
    out.push_back(b);
}

} // namespace

std::vector<RegionBox> ratio_anchors(double image_w, double image_h, int ratio_w, int ratio_h, int scales,
                                     int positions, double min_side_ratio) {
    if (ratio_w <= 0 || ratio_h <= 0) throw UsageError("ratio_anchors: ratio terms must be positive");
    if (scales < 1 || positions < 1) throw UsageError("ratio_anchors: scales and positions must be >= 1");
    if (!(image_w > 0) || !(image_h > 0)) throw DataError("ratio_anchors: image dimensions must be positive");
    const double r = static_cast<double>(ratio_w) / ratio_h;
    double bw = image_w, bh = image_w / r;
    if (bh > image_h) {
        bh = image_h;
        bw = image_h * r;
    }
    const double smallest = std::min(1.0, std::max(min_side_ratio * image_w / bw, min_side_ratio * image_h / bh));
    std::vector<RegionBox> out;
    for (int s = 0; s < scales; ++s) {
        const double f = scale_at(s, scales, smallest);
        const double w = bw * f, h = bh * f;
        for (int py = 0; py < positions; ++py)
            for (int px = 0; px < positions; ++px) {
                const double x1 = offset_at(px, positions, image_w - w);
                const double y1 = offset_at(py, positions, image_h - h);
                auto b = make_box(x1, y1, std::min(image_w, x1 + w), std::min(image_h, y1 + h));
                if (std::abs(b.width() / b.height() - r) / r >= kRatioTolerance) continue;
                push_unique(out, b);
            }
    }
    return out;
}

std::size_t ratio_anchor_enumeration_count(int scales, int positions) {
    return static_cast<std::size_t>(scales) * positions * positions;
}

std::vector<std::pair<Circle, RegionBox>> circular_crop(double image_w, double image_h, int scales, int positions,
                                                        double min_side_ratio) {
    if (!(std::min(image_w, image_h) >= 1)) throw DataError("circular_crop: image must be at least 1 pixel");
    std::vector<std::pair<Circle, RegionBox>> out;
    for (const auto& sq : ratio_anchors(image_w, image_h, 1, 1, scales, positions, min_side_ratio)) {
        Circle c{sq.center_x(), sq.center_y(), 0.5 * sq.width()};
        out.emplace_back(c, sq);
    }
    return out;
}

std::vector<CropResult> rank_crops(std::span<const double> scores, std::span<const RegionBox> boxes) {
    if (scores.empty()) throw DataError("rank_crops: no scores");
    if (!boxes.empty() && boxes.size() != scores.size()) throw DataError("rank_crops: boxes and scores differ in length");
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (std::isnan(scores[i])) throw NumericalError("rank_crops: candidate " + std::to_string(i) + " scored NaN");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<CropResult> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i].index = i;
        out[i].score = scores[i];
        if (!boxes.empty()) out[i].box = boxes[i];
    }
    for (std::size_t r = 0; r < order.size(); ++r) out[order[r]].rank = r + 1;
    return out;
}

std::vector<CropResult> top_crops(const std::vector<CropResult>& ranked, std::size_t k) {
    std::vector<CropResult> sorted = ranked;
    std::sort(sorted.begin(), sorted.end(), [](const CropResult& a, const CropResult& b) { return a.rank < b.rank; });
    if (sorted.size() > k) sorted.resize(k);
    return sorted;
}

} // namespace s2c
