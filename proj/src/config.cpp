#include "s2c/config.hpp"

#include "json.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace s2c {

using ojson = nlohmann::ordered_json;

void RunConfig::validate() const {
    model.validate();
    train.validate();
    synth.validate();
    if (anchors.bins < 2) throw ConfigError("anchors: bins must be >= 2");
    if (!(val_fraction >= 0 && val_fraction < 1)) throw ConfigError("val_fraction must be in [0, 1)");
}

namespace {

class Section {
public:
    Section(const ojson& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_object()) throw ConfigError("config section '" + name_ + "' must be an object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const ojson::exception& e) {
            throw ConfigError("config key '" + name_ + "." + key + "': " + e.what());
        }
    }

    template <typename E, typename Parse>
    void get_enum(const char* key, E& out, Parse parse) {
        std::string s;
        get(key, s);
        if (!s.empty()) out = parse(s);
    }

    const ojson* child(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void finish() const {
        for (const auto& item : j_.items())
            if (!seen_.count(item.key())) throw ConfigError("unknown config key '" + name_ + "." + item.key() + "'");
    }

private:
    const ojson& j_;
    std::string name_;
    std::set<std::string> seen_;
};

Precision parse_precision(const std::string& s) {
    if (s == "float32") return Precision::float32;
    if (s == "float64") return Precision::float64;
    throw ConfigError("unknown precision '" + s + "' (expected float32 or float64)");
}

ojson grid_json(const AnchorGrid& g) {
    return {{"bins", g.bins}, {"min_area_ratio", g.min_area_ratio}, {"min_side_ratio", g.min_side_ratio},
            {"target_count", g.target_count}};
}

void read_grid(const ojson& j, const std::string& name, AnchorGrid& g) {
    Section s(j, name);
    s.get("bins", g.bins);
    s.get("min_area_ratio", g.min_area_ratio);
    s.get("min_side_ratio", g.min_side_ratio);
    s.get("target_count", g.target_count);
    s.finish();
}

} // namespace

std::string run_config_to_json(const RunConfig& c) {
    ojson j;
    const auto& a = c.model.aag;
    j["model"] = {
        {"d", a.d},
        {"layers", a.layers},
        {"heads", a.heads},
        {"ffn_hidden", a.ffn_hidden},
        {"head_hidden", a.head_hidden},
        {"use_gate", a.use_gate},
        {"use_semantic", a.use_semantic},
        {"use_spatial", a.use_spatial},
        {"adjacency", to_string(a.adjacency)},
        {"proposals", c.model.proposals},
        {"roi_size", c.model.roi_size},
        {"source", to_string(c.model.source)},
        {"map_channels", c.model.map_channels},
        {"spatial", to_string(c.model.spatial)},
        {"eps", c.model.eps},
        {"spatial_hidden", c.model.spatial_hidden},
        {"spatial_sign", c.model.spatial_sign},
    };
    const auto& t = c.train;
    j["train"] = {
        {"learning_rate", t.learning_rate},
        {"epochs", t.epochs},
        {"weight_decay", t.weight_decay},
        {"lambda_rank", t.lambda_rank},
        {"rank_margin", t.rank_margin},
        {"literal_rank", t.literal_rank},
        {"weighting", to_string(t.weighting)},
        {"batch_images", t.batch_images},
        {"candidate_sample_k", t.candidate_sample_k},
        {"seed", t.seed},
        {"flip_probability", t.flip_probability},
        {"allow_heuristic", t.allow_heuristic},
    };
    j["anchors"] = grid_json(c.anchors);
    const auto& s = c.synth;
    j["synth"] = {
        {"width", s.width},
        {"height", s.height},
        {"min_objects", s.min_objects},
        {"max_objects", s.max_objects},
        {"text_strip_probability", s.text_strip_probability},
        {"a", s.a},
        {"b", s.b},
        {"c", s.c},
        {"t", s.t},
        {"noise", s.noise},
        {"grid", grid_json(s.grid)},
    };
    j["precision"] = c.precision == Precision::float32 ? "float32" : "float64";
    j["model_seed"] = c.model_seed;
    j["val_fraction"] = c.val_fraction;
    return j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text) {
    ojson j;
    try {
        j = ojson::parse(text);
    } catch (const ojson::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig c;
    Section root(j, "config");
    if (const auto* m = root.child("model")) {
        Section s(*m, "model");
        auto& a = c.model.aag;
        s.get("d", a.d);
        s.get("layers", a.layers);
        s.get("heads", a.heads);
        s.get("ffn_hidden", a.ffn_hidden);
        s.get("head_hidden", a.head_hidden);
        s.get("use_gate", a.use_gate);
        s.get("use_semantic", a.use_semantic);
        s.get("use_spatial", a.use_spatial);
        s.get_enum("adjacency", a.adjacency, parse_adjacency_mode);
        s.get("proposals", c.model.proposals);
        s.get("roi_size", c.model.roi_size);
        s.get_enum("source", c.model.source, parse_feature_source);
        s.get("map_channels", c.model.map_channels);
        s.get_enum("spatial", c.model.spatial, parse_spatial_variant);
        s.get("eps", c.model.eps);
        s.get("spatial_hidden", c.model.spatial_hidden);
        s.get("spatial_sign", c.model.spatial_sign);
        s.finish();
    }
    if (const auto* tj = root.child("train")) {
        Section s(*tj, "train");
        auto& t = c.train;
        s.get("learning_rate", t.learning_rate);
        s.get("epochs", t.epochs);
        s.get("weight_decay", t.weight_decay);
        s.get("lambda_rank", t.lambda_rank);
        s.get("rank_margin", t.rank_margin);
        s.get("literal_rank", t.literal_rank);
        s.get_enum("weighting", t.weighting, parse_pred_weighting);
        s.get("batch_images", t.batch_images);
        s.get("candidate_sample_k", t.candidate_sample_k);
        s.get("seed", t.seed);
        s.get("flip_probability", t.flip_probability);
        s.get("allow_heuristic", t.allow_heuristic);
        s.finish();
    }
    if (const auto* g = root.child("anchors")) read_grid(*g, "anchors", c.anchors);
    if (const auto* sj = root.child("synth")) {
        Section s(*sj, "synth");
        auto& sp = c.synth;
        s.get("width", sp.width);
        s.get("height", sp.height);
        s.get("min_objects", sp.min_objects);
        s.get("max_objects", sp.max_objects);
        s.get("text_strip_probability", sp.text_strip_probability);
        s.get("a", sp.a);
        s.get("b", sp.b);
        s.get("c", sp.c);
        s.get("t", sp.t);
        s.get("noise", sp.noise);
        if (const auto* g = s.child("grid")) read_grid(*g, "synth.grid", sp.grid);
        s.finish();
    }
    root.get_enum("precision", c.precision, parse_precision);
    root.get("model_seed", c.model_seed);
    root.get("val_fraction", c.val_fraction);
    root.finish();
    c.validate();
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return run_config_from_json(text.str());
}

} // namespace s2c
