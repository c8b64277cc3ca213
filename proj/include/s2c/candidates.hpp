#ifndef S2C_CANDIDATES_HPP
#define S2C_CANDIDATES_HPP

#include "s2c/roi.hpp"

#include <span>
#include <utility>
#include <vector>

namespace s2c {

/// Corner-grid anchor layout. Corners sit at i * extent / (bins - 1).
struct AnchorGrid {
    int bins = 12;
    double min_area_ratio = 0.4;
    double min_side_ratio = 0.3;
    std::size_t target_count = 90;
};

/// All grid boxes meeting the area and side constraints, in enumeration order
/// (x1, x2, y1, y2 nested loops).
std::vector<RegionBox> grid_anchor_pool(double image_w, double image_h, const AnchorGrid& grid);

/// grid_anchor_pool, stably sorted by area and subsampled at a fixed stride
/// down to target_count. If nothing satisfies the constraints the full-image
/// box is returned and `unsatisfiable` (when given) is set.
std::vector<RegionBox> grid_anchors(double image_w, double image_h, const AnchorGrid& grid,
                                    bool* unsatisfiable = nullptr);

inline constexpr double kRatioTolerance = 1e-3;

/// Boxes at aspect ratio_w:ratio_h; `scales` sizes from the largest fitting
/// box down to min_side_ratio, each at positions x positions translations.
/// Duplicates (from axes with no slack) are removed.
std::vector<RegionBox> ratio_anchors(double image_w, double image_h, int ratio_w, int ratio_h, int scales,
                                     int positions, double min_side_ratio = 0.3);

/// Number of boxes ratio_anchors enumerates before duplicate removal.
std::size_t ratio_anchor_enumeration_count(int scales, int positions);

struct Circle {
    double cx = 0, cy = 0, radius = 0;
};

/// Circles with diameters from min(w, h) down to min_side_ratio * min(w, h), each
/// paired with its circumscribed square, which is what gets scored.
std::vector<std::pair<Circle, RegionBox>> circular_crop(double image_w, double image_h, int scales, int positions,
                                                        double min_side_ratio = 0.3);

struct CropResult {
    std::size_t index = 0;  // position in the scored list
    RegionBox box;
    double score = 0;
    std::size_t rank = 0;  // 1-based
};

/// Ranks in input order; rank 1 is the highest score, ties go to the lower index.
/// Throws NumericalError on NaN.
std::vector<CropResult> rank_crops(std::span<const double> scores, std::span<const RegionBox> boxes = {});

/// The k best results, best first.
std::vector<CropResult> top_crops(const std::vector<CropResult>& ranked, std::size_t k);

} // namespace s2c

#endif
