#include "s2c/dataset.hpp"

#include "json.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace s2c {

using nlohmann::json;

std::vector<std::string> validate_record(const AnnotationRecord& r) {
    std::vector<std::string> issues;
    if (r.image_id.empty()) issues.push_back("empty image_id");
    if (!(r.width > 0) || !(r.height > 0)) issues.push_back("non-positive image extent");
    if (r.candidates.size() < 2) issues.push_back("fewer than 2 candidates");
    if (r.mos.size() != r.candidates.size())
        issues.push_back("mos count " + std::to_string(r.mos.size()) + " != candidate count " +
                         std::to_string(r.candidates.size()));
    for (std::size_t i = 0; i < r.mos.size(); ++i)
        if (!(r.mos[i] >= 1.0 && r.mos[i] <= 5.0))
            issues.push_back("mos[" + std::to_string(i) + "] = " + std::to_string(r.mos[i]) + " outside [1, 5]");
    auto check_box = [&](const RegionBox& b, const std::string& what) {
        if (!(b.x2 > b.x1) || !(b.y2 > b.y1)) issues.push_back(what + " is degenerate");
        else if (intersection_area(b, make_box(0, 0, r.width, r.height)) <= 0)
            issues.push_back(what + " does not intersect the image");
    };
    for (std::size_t i = 0; i < r.candidates.size(); ++i) check_box(r.candidates[i], "candidate " + std::to_string(i));
    for (std::size_t i = 0; i < r.proposals.size(); ++i) check_box(r.proposals[i], "proposal " + std::to_string(i));
    return issues;
}

void require_valid(const AnnotationRecord& record) {
    const auto issues = validate_record(record);
    if (issues.empty()) return;
    std::string msg = "invalid record '" + record.image_id + "':";
    for (const auto& i : issues) msg += " " + i + ";";
    throw DataError(msg);
}

namespace {

json box_array(const RegionBox& b, bool with_confidence) {
    json a = json::array({b.x1, b.y1, b.x2, b.y2});
    if (with_confidence) a.push_back(b.confidence);
    return a;
}

RegionBox parse_box(const json& a, BoxRole role) {
    if (!a.is_array() || a.size() < 4) throw DataError("box must be an array [x1, y1, x2, y2, ...]");
    auto b = make_box(a[0].get<double>(), a[1].get<double>(), a[2].get<double>(), a[3].get<double>(), role);
    if (a.size() > 4) b.confidence = a[4].get<double>();
    return b;
}

json parse_line(const std::string& line) {
    try {
        return json::parse(line);
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed JSON line: ") + e.what());
    }
}

} // namespace

std::string record_to_json_line(const AnnotationRecord& r) {
    json j;
    j["image_id"] = r.image_id;
    j["source"] = r.source;
    j["width"] = r.width;
    j["height"] = r.height;
    j["proposals"] = json::array();
    for (const auto& b : r.proposals) j["proposals"].push_back(box_array(b, true));
    j["candidates"] = json::array();
    for (const auto& b : r.candidates) j["candidates"].push_back(box_array(b, false));
    j["mos"] = r.mos;
    return j.dump();
}

AnnotationRecord record_from_json_line(const std::string& line) {
    const json j = parse_line(line);
    AnnotationRecord r;
    try {
        r.image_id = j.at("image_id").get<std::string>();
        r.source = j.value("source", std::string());
        r.width = j.at("width").get<double>();
        r.height = j.at("height").get<double>();
        for (const auto& b : j.value("proposals", json::array())) r.proposals.push_back(parse_box(b, BoxRole::object_proposal));
        for (const auto& b : j.at("candidates")) r.candidates.push_back(parse_box(b, BoxRole::crop_candidate));
        r.mos = j.at("mos").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed annotation record: ") + e.what());
    }
    return r;
}

void write_manifest(const std::string& path, const std::vector<AnnotationRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write manifest " + path);
    for (const auto& r : records) out << record_to_json_line(r) << '\n';
    if (!out) throw IoError("short write to " + path);
}

std::vector<AnnotationRecord> read_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open manifest " + path);
    std::vector<AnnotationRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        records.push_back(record_from_json_line(line));
    }
    return records;
}

std::vector<BoxList> read_box_lists(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open box list " + path);
    std::vector<BoxList> lists;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const json j = parse_line(line);
        BoxList l;
        try {
            l.image_id = j.at("image_id").get<std::string>();
            for (const auto& b : j.at("boxes")) l.boxes.push_back(parse_box(b, BoxRole::object_proposal));
        } catch (const json::exception& e) {
            throw DataError(std::string("malformed box list line: ") + e.what());
        }
        lists.push_back(std::move(l));
    }
    return lists;
}

void write_box_lists(const std::string& path, const std::vector<BoxList>& lists) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write box list " + path);
    for (const auto& l : lists) {
        json j;
        j["image_id"] = l.image_id;
        j["boxes"] = json::array();
        for (const auto& b : l.boxes) j["boxes"].push_back(box_array(b, true));
        out << j.dump() << '\n';
    }
}

std::string candidate_list_json_line(const std::string& image_id, const std::vector<RegionBox>& boxes) {
    json j;
    j["image_id"] = image_id;
    j["boxes"] = json::array();
    for (const auto& b : boxes) j["boxes"].push_back(box_array(b, false));
    return j.dump();
}

SceneInput LoadedSample::scene() const {
    SceneInput s;
    s.image = image.get();
    s.feature_map = feature_map.get();
    s.width = record.width;
    s.height = record.height;
    return s;
}

std::vector<LoadedSample> load_samples(const std::vector<AnnotationRecord>& records, const std::string& base_dir) {
    namespace fs = std::filesystem;
    std::vector<LoadedSample> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        require_valid(r);
        LoadedSample s;
        s.record = r;
        fs::path p(r.source);
        if (p.is_relative()) p = fs::path(base_dir) / p;
        if (p.extension() == ".ppm") {
            s.image = std::make_shared<const Image>(read_ppm(p.string()));
        } else if (p.extension() == ".s2fm") {
            s.feature_map = std::make_shared<const FeatureMap<float>>(read_feature_map(p.string()));
        } else {
            throw DataError("record '" + r.image_id + "': unsupported source type " + p.string());
        }
        out.push_back(std::move(s));
    }
    return out;
}

LoadedSample flip_sample(const LoadedSample& sample) {
    LoadedSample out;
    out.record = sample.record;
    double extent = sample.record.width;
    if (sample.image) out.image = std::make_shared<const Image>(flip_horizontal(*sample.image));
    if (sample.feature_map) {
        auto fm = std::make_shared<FeatureMap<float>>();
        fm->geometry = sample.feature_map->geometry;
        fm->data.resize(sample.feature_map->data.rows(), sample.feature_map->data.cols());
        const Index w = fm->geometry.width;
        for (Index y = 0; y < fm->geometry.height; ++y)
            for (Index x = 0; x < w; ++x) fm->data.row(y * w + x) = sample.feature_map->data.row(y * w + (w - 1 - x));
        // mirror about the map extent so feature cells and boxes stay aligned
        extent = fm->geometry.extent_width();
        out.feature_map = fm;
    }
    for (auto& b : out.record.candidates) b = flip_box(b, extent);
    for (auto& b : out.record.proposals) b = flip_box(b, extent);
    return out;
}

} // namespace s2c
