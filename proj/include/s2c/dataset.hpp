#ifndef S2C_DATASET_HPP
#define S2C_DATASET_HPP

#include "s2c/model.hpp"

#include <memory>
#include <string>
#include <vector>

namespace s2c {

/// One image's candidate crops with their mean opinion scores.
struct AnnotationRecord {
    std::string image_id;
    std::string source;  // image (.ppm) or feature map (.s2fm) path
    double width = 0;    // pixel extent of the source image
    double height = 0;
    std::vector<RegionBox> proposals;
    std::vector<RegionBox> candidates;
    std::vector<double> mos;
};

/// Problems found in a record; empty when valid.
std::vector<std::string> validate_record(const AnnotationRecord& record);
/// Throws DataError listing every problem.
void require_valid(const AnnotationRecord& record);

std::string record_to_json_line(const AnnotationRecord& record);
AnnotationRecord record_from_json_line(const std::string& line);

void write_manifest(const std::string& path, const std::vector<AnnotationRecord>& records);
std::vector<AnnotationRecord> read_manifest(const std::string& path);

/// Box list file: one {"image_id", "boxes": [[x1, y1, x2, y2, confidence], ...]} per line.
struct BoxList {
    std::string image_id;
    std::vector<RegionBox> boxes;
};
std::vector<BoxList> read_box_lists(const std::string& path);
void write_box_lists(const std::string& path, const std::vector<BoxList>& lists);

/// Candidate list output: {"image_id", "boxes": [[x1, y1, x2, y2], ...]} per line.
std::string candidate_list_json_line(const std::string& image_id, const std::vector<RegionBox>& boxes);

/// A record with its pixels or feature map resident in memory.
struct LoadedSample {
    AnnotationRecord record;
    std::shared_ptr<const Image> image;
    std::shared_ptr<const FeatureMap<float>> feature_map;

    SceneInput scene() const;
};

/// Loads every record's source, resolving relative paths against `base_dir`.
std::vector<LoadedSample> load_samples(const std::vector<AnnotationRecord>& records, const std::string& base_dir);

/// Horizontally mirrored sample: pixels (or feature columns) and every box.
LoadedSample flip_sample(const LoadedSample& sample);

} // namespace s2c

#endif
