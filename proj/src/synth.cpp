#include "s2c/synth.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

namespace s2c {

void SynthSpec::validate() const {
    if (width < 32 || height < 32) throw ConfigError("synth: images must be at least 32x32");
    if (min_objects < 1 || max_objects < min_objects) throw ConfigError("synth: need 1 <= min_objects <= max_objects");
    if (!(noise >= 0)) throw ConfigError("synth: noise must be >= 0");
    if (!(text_strip_probability >= 0 && text_strip_probability <= 1))
        throw ConfigError("synth: text_strip_probability must be in [0, 1]");
}

double coverage(const RegionBox& crop, const RegionBox& region) {
    const double a = region.area();
    return a > 0 ? intersection_area(crop, region) / a : 0.0;
}

double occupancy(const RegionBox& crop, const RegionBox& region) {
    const double a = crop.area();
    return a > 0 ? intersection_area(crop, region) / a : 0.0;
}

int cut_count(const RegionBox& crop, const std::vector<SynthObject>& objects) {
    int cuts = 0;
    for (const auto& o : objects) {
        const double f = coverage(crop, o.box);
        if (f > 1e-9 && f < 1.0 - 1e-9) ++cuts;
    }
    return cuts;
}

double planted_score(const SynthSpec& spec, const PlantedScene& scene, const RegionBox& crop) {
    return spec.a + spec.b * coverage(crop, scene.interest) - spec.c * cut_count(crop, scene.objects) +
           spec.t * occupancy(crop, scene.interest);
}

namespace {

void random_color(Rng& rng, float out[3], double lo, double hi) {
    // one saturated channel keeps objects distinct from the muted background
    const auto hot = rng.below(3);
    for (int c = 0; c < 3; ++c) out[c] = static_cast<float>(rng.uniform(lo, hi) * (c == static_cast<int>(hot) ? 1.0 : 0.45));
}

RegionBox place(Rng& rng, double w, double h, double width, double height) {
    const double x1 = rng.uniform(0, width - w);
    const double y1 = rng.uniform(0, height - h);
    return make_box(std::round(x1), std::round(y1), std::round(x1 + w), std::round(y1 + h), BoxRole::object_proposal);
}

bool overlaps(const RegionBox& b, const std::vector<SynthObject>& objects, double limit) {
    for (const auto& o : objects)
        if (intersection_area(b, o.box) > limit * std::min(b.area(), o.box.area())) return true;
    return false;
}

PlantedScene make_scene(const SynthSpec& spec, Rng& rng, const std::string& id) {
    PlantedScene s;
    s.image_id = id;
    const double W = spec.width, H = spec.height;
    const int extra = spec.min_objects - 1 + static_cast<int>(rng.below(spec.max_objects - spec.min_objects + 1));

    SynthObject subject;
    subject.shape = rng.bernoulli(0.5) ? ObjectShape::rectangle : ObjectShape::ellipse;
    subject.box = place(rng, rng.uniform(0.22, 0.36) * W, rng.uniform(0.26, 0.42) * H, W, H);
    random_color(rng, subject.color, 0.75, 1.0);
    s.objects.push_back(subject);

    if (rng.bernoulli(spec.text_strip_probability)) {
        SynthObject strip;
        strip.shape = ObjectShape::text_strip;
        for (int tries = 0; tries < 50; ++tries) {
            auto b = place(rng, rng.uniform(0.3, 0.5) * W, rng.uniform(0.07, 0.1) * H, W, H);
            if (!overlaps(b, s.objects, 0.05)) {
                strip.box = b;
                strip.color[0] = strip.color[1] = strip.color[2] = 0.92f;
                s.objects.push_back(strip);
                break;
            }
        }
    }
    for (int i = 0; i < extra; ++i) {
        for (int tries = 0; tries < 50; ++tries) {
            auto b = place(rng, rng.uniform(0.09, 0.18) * W, rng.uniform(0.1, 0.22) * H, W, H);
            if (overlaps(b, s.objects, 0.1)) continue;
            SynthObject o;
            o.box = b;
            o.shape = rng.bernoulli(0.5) ? ObjectShape::rectangle : ObjectShape::ellipse;
            random_color(rng, o.color, 0.35, 0.7);
            s.objects.push_back(o);
            break;
        }
    }
    s.interest = s.objects[0].box;
    return s;
}

bool inside(const SynthObject& o, double x, double y) {
    const auto& b = o.box;
    if (x < b.x1 || x >= b.x2 || y < b.y1 || y >= b.y2) return false;
    if (o.shape != ObjectShape::ellipse) return true;
    const double u = (x - b.center_x()) / (0.5 * b.width());
    const double v = (y - b.center_y()) / (0.5 * b.height());
    return u * u + v * v <= 1.0;
}

} // namespace

Image render_scene(const SynthSpec& spec, const PlantedScene& scene, std::uint64_t texture_seed) {
    Rng rng(texture_seed);
    Image img(spec.width, spec.height);
    float base0[3], base1[3];
    for (int c = 0; c < 3; ++c) {
        base0[c] = static_cast<float>(rng.uniform(0.15, 0.35));
        base1[c] = static_cast<float>(rng.uniform(0.15, 0.35));
    }
    const double fx = rng.uniform(0.02, 0.08), fy = rng.uniform(0.02, 0.08), ph = rng.uniform(0, 2 * std::numbers::pi);
    // glyph pattern of the text strip: alternating ink/gap runs
    std::vector<int> runs;
    for (int x = 0; x < spec.width;) {
        const int len = 1 + static_cast<int>(rng.below(4));
        runs.insert(runs.end(), len, static_cast<int>(runs.size() % 2 == 0 ? rng.below(2) : 0));
        x += len;
    }
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) {
            const double gx = static_cast<double>(x) / spec.width;
            const double tex = 0.04 * std::sin(fx * x + ph) * std::cos(fy * y);
            float px[3];
            for (int c = 0; c < 3; ++c)
                px[c] = static_cast<float>((1 - gx) * base0[c] + gx * base1[c] + tex + 0.02 * (rng.uniform() - 0.5));
            const double cx = x + 0.5, cy = y + 0.5;
            for (const auto& o : scene.objects) {
                if (!inside(o, cx, cy)) continue;
                const auto& b = o.box;
                const bool edge = cx - b.x1 < 2 || b.x2 - cx < 2 || cy - b.y1 < 2 || b.y2 - cy < 2;
                for (int c = 0; c < 3; ++c) px[c] = o.color[c];
                if (o.shape == ObjectShape::text_strip) {
                    const double vy = (cy - b.y1) / b.height();
                    const bool ink = vy > 0.2 && vy < 0.8 && runs[static_cast<std::size_t>(x - static_cast<int>(b.x1)) % runs.size()];
                    if (ink) px[0] = px[1] = px[2] = 0.08f;
                } else if (edge && o.shape == ObjectShape::rectangle) {
                    for (int c = 0; c < 3; ++c) px[c] *= 0.6f;
                }
            }
            for (int c = 0; c < 3; ++c)
                img.at(x, y, c) = std::round(std::clamp(px[c], 0.0f, 1.0f) * 255.0f) / 255.0f;
        }
    return img;
}

SynthDataset synth_dataset(int n_images, std::uint64_t seed, const SynthSpec& spec) {
    if (n_images < 1) throw UsageError("synth: n_images must be >= 1");
    spec.validate();
    SynthDataset data;
    data.spec = spec;
    Rng rng(seed);
    const auto candidates = grid_anchors(spec.width, spec.height, spec.grid);
    for (int i = 0; i < n_images; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "synth_%04d", i);
        auto scene = make_scene(spec, rng, id);
        const std::uint64_t texture_seed = rng.next();

        LoadedSample sample;
        auto& r = sample.record;
        r.image_id = scene.image_id;
        r.source = "images/" + scene.image_id + ".ppm";
        r.width = spec.width;
        r.height = spec.height;
        for (std::size_t k = 0; k < scene.objects.size(); ++k) {
            auto b = scene.objects[k].box;
            b.role = BoxRole::object_proposal;
            b.confidence = k == 0 ? 1.0 : 0.9 - 0.05 * static_cast<double>(k);
            r.proposals.push_back(b);
        }
        r.candidates = candidates;
        for (const auto& c : candidates) {
            const double noisy = planted_score(spec, scene, c) + spec.noise * rng.normal();
            r.mos.push_back(std::clamp(noisy, 1.0, 5.0));
        }
        sample.image = std::make_shared<const Image>(render_scene(spec, scene, texture_seed));
        data.scenes.push_back(std::move(scene));
        data.samples.push_back(std::move(sample));
    }
    return data;
}

std::string oracle_json(const SynthDataset& data) {
    nlohmann::ordered_json j;
    const auto& s = data.spec;
    j["rule"] = "a + b * coverage(interest) - c * objects_cut - t * area_fraction + noise, clipped to [1, 5]";
    j["a"] = s.a;
    j["b"] = s.b;
    j["c"] = s.c;
    j["t"] = s.t;
    j["noise_sigma"] = s.noise;
    j["width"] = s.width;
    j["height"] = s.height;
    j["scenes"] = nlohmann::ordered_json::array();
    for (const auto& sc : data.scenes) {
        nlohmann::ordered_json e;
        e["image_id"] = sc.image_id;
        e["interest"] = {sc.interest.x1, sc.interest.y1, sc.interest.x2, sc.interest.y2};
        e["objects"] = nlohmann::ordered_json::array();
        for (const auto& o : sc.objects) {
            const char* shape = o.shape == ObjectShape::rectangle ? "rectangle"
                                : o.shape == ObjectShape::ellipse ? "ellipse"
                                                                  : "text_strip";
            e["objects"].push_back({{"shape", shape}, {"box", {o.box.x1, o.box.y1, o.box.x2, o.box.y2}}});
        }
        j["scenes"].push_back(e);
    }
    return j.dump(2) + "\n";
}

void write_synth_dataset(const SynthDataset& data, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / "images", ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
    std::vector<AnnotationRecord> records;
    for (const auto& s : data.samples) {
        write_ppm((fs::path(out_dir) / s.record.source).string(), *s.image);
        records.push_back(s.record);
    }
    write_manifest((fs::path(out_dir) / "manifest.jsonl").string(), records);
    std::ofstream out(fs::path(out_dir) / "oracle.json", std::ios::binary);
    if (!out) throw IoError("cannot write oracle.json in " + out_dir);
    out << oracle_json(data);
}

} // namespace s2c
