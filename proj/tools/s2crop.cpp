// s2crop: synthetic data, training, cropping, evaluation and benchmarks.

#include "s2c/ablation.hpp"
#include "s2c/checkpoint.hpp"
#include "s2c/config.hpp"
#include "s2c/gradient_suite.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace s2c;
using ojson = nlohmann::ordered_json;

namespace {

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<std::string> spatial;
    std::optional<double> eps;
    std::optional<Index> proposals;
    std::optional<Index> layers;
    std::optional<Index> heads;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config_path, "JSON run configuration");
    cmd->add_option("--seed", o.seed, "seed for every random decision");
    cmd->add_option("--out", o.out, "output directory (or file for crop)");
    cmd->add_option("--spatial", o.spatial, "spatial edge variant")->check(CLI::IsMember({"disdrop", "disemb"}));
    cmd->add_option("--eps", o.eps, "DisDrop distance threshold");
    cmd->add_option("--proposals", o.proposals, "proposal nodes per graph");
    cmd->add_option("--layers", o.layers, "stacked AAG layers");
    cmd->add_option("--heads", o.heads, "attention heads");
}

RunConfig resolve_config(const CommonOptions& o) {
    RunConfig c = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
    if (o.seed) {
        c.train.seed = *o.seed;
        c.model_seed = *o.seed;
    }
    if (o.spatial) c.model.spatial = parse_spatial_variant(*o.spatial);
    if (o.eps) c.model.eps = *o.eps;
    if (o.proposals) c.model.proposals = *o.proposals;
    if (o.layers) c.model.aag.layers = *o.layers;
    if (o.heads) c.model.aag.heads = *o.heads;
    c.validate();
    return c;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("short write to " + path.string());
}

fs::path ensure_dir(const std::string& dir) {
    const fs::path p = dir.empty() ? fs::path(".") : fs::path(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw IoError("cannot create directory " + p.string() + ": " + ec.message());
    return p;
}

std::string timing_json(double seconds, std::optional<double> images_per_second = std::nullopt) {
    ojson j;
    j["seconds"] = seconds;
    if (images_per_second) j["images_per_second"] = *images_per_second;
    return j.dump(2) + "\n";
}

template <typename S>
S scalar_of(const Model<S>&);

// Runs `fn` with a Model of the configured precision.
template <typename Fn>
void with_model(const RunConfig& config, std::uint64_t seed, Fn&& fn) {
    if (config.precision == Precision::float64) {
        Model<double> model(config.model, seed);
        fn(model);
    } else {
        Model<float> model(config.model, seed);
        fn(model);
    }
}

// Checkpoint -> (config, model) for commands that score.
template <typename Fn>
void with_checkpoint(const std::string& path, Fn&& fn) {
    const auto ckpt = load_checkpoint(path);
    const auto config = run_config_from_json(ckpt.config_json);
    with_model(config, config.model_seed, [&](auto& model) {
        apply_checkpoint(ckpt, model.params());
        fn(config, model);
    });
}

struct Split {
    std::vector<LoadedSample> train, val;
};

Split load_split(const std::string& manifest, double val_fraction) {
    const auto records = read_manifest(manifest);
    if (records.size() < 2) throw DataError("manifest " + manifest + " needs at least 2 records");
    auto samples = load_samples(records, fs::path(manifest).parent_path().string());
    auto n_val = static_cast<std::size_t>(static_cast<double>(samples.size()) * val_fraction + 0.5);
    if (val_fraction > 0) n_val = std::clamp<std::size_t>(n_val, 1, samples.size() - 1);
    Split s;
    s.train.assign(samples.begin(), samples.end() - static_cast<std::ptrdiff_t>(n_val));
    s.val.assign(samples.end() - static_cast<std::ptrdiff_t>(n_val), samples.end());
    return s;
}

// ---------------------------------------------------------------- synth

int cmd_synth(const CommonOptions& o, int n_images) {
    auto config = resolve_config(o);
    const std::uint64_t seed = o.seed.value_or(config.train.seed);
    const auto out = ensure_dir(o.out.empty() ? "synth" : o.out);
    const auto data = synth_dataset(n_images, seed, config.synth);
    write_synth_dataset(data, out.string());
    write_text(out / "config.json", run_config_to_json(config));
    std::cout << "wrote " << data.samples.size() << " records to " << (out / "manifest.jsonl").string() << "\n";
    return 0;
}

// ---------------------------------------------------------------- train

int cmd_train(const CommonOptions& o, const std::string& manifest, std::optional<int> epochs) {
    auto config = resolve_config(o);
    if (epochs) config.train.epochs = *epochs;
    config.validate();
    const auto out = ensure_dir(o.out.empty() ? "run" : o.out);
    const auto split = load_split(manifest, config.val_fraction);
    const auto config_text = run_config_to_json(config);
    write_text(out / "config.json", config_text);
    const auto ckpt_path = out / "checkpoint.s2ck";
    std::string best_hash;
    TrainResult result;
    std::vector<EpochLog> history;
    int status = 0;
    std::string failure;
    with_model(config, config.model_seed, [&](auto& model) {
        using S = decltype(scalar_of(model));
        auto on_best = [&](const Model<S>& m, const EpochLog&) {
            const auto bytes = checkpoint_bytes(make_checkpoint(config_text, m.params()));
            write_text(ckpt_path, bytes);
            best_hash = git_blob_hash(bytes);
        };
        auto on_epoch = [&](const EpochLog& e) {
            history.push_back(e);
            std::printf("epoch %3d  loss %.5f  val_srcc %.4f  acc5 %.2f  acc10 %.2f\n", e.epoch, e.train_loss, e.val_srcc,
                        e.val_acc5, e.val_acc10);
            std::fflush(stdout);
        };
        try {
            result = train(model, split.train, split.val, config.train, BestCallback<S>(on_best), on_epoch);
        } catch (const NumericalError& e) {
            status = e.exit_code();
            failure = e.what();
        }
    });
    write_text(out / "metrics.csv", metrics_csv(history));
    ojson summary;
    summary["train_images"] = split.train.size();
    summary["val_images"] = split.val.size();
    summary["best_epoch"] = result.best_epoch;
    summary["best_val_srcc"] = result.best_srcc;
    summary["checkpoint"] = ckpt_path.filename().string();
    summary["checkpoint_sha1"] = best_hash;
    if (status != 0) summary["error"] = failure;
    write_text(out / "summary.json", summary.dump(2) + "\n");
    write_text(out / "timing.json", timing_json(result.seconds));
    if (status != 0) {
        std::cerr << "s2crop: " << failure << " (last good checkpoint kept at " << ckpt_path.string() << ")\n";
        return status;
    }
    std::cout << "best epoch " << result.best_epoch << " val_srcc " << result.best_srcc << " checkpoint " << best_hash
              << "\n";
    return 0;
}

// ---------------------------------------------------------------- crop

struct CropOptions {
    std::string checkpoint;
    std::string image;
    std::string featuremap;
    std::string boxes;
    std::string ratio;
    bool circle = false;
    bool free = false;
    bool no_heuristic = false;
    std::size_t top = 5;
    int scales = 5;
    int positions = 5;
};

std::pair<int, int> parse_ratio(const std::string& text) {
    const auto colon = text.find(':');
    try {
        if (colon == std::string::npos) throw std::invalid_argument("no colon");
        const int w = std::stoi(text.substr(0, colon));
        const int h = std::stoi(text.substr(colon + 1));
        if (w <= 0 || h <= 0) throw std::invalid_argument("non-positive");
        return {w, h};
    } catch (const std::exception&) {
        throw UsageError("--ratio expects W:H with positive integers, got '" + text + "'");
    }
}

int cmd_crop(const CommonOptions& o, const CropOptions& c) {
    if (c.checkpoint.empty()) throw UsageError("crop needs --checkpoint");
    if (c.image.empty() == c.featuremap.empty()) throw UsageError("crop needs exactly one of --image or --featuremap");
    if (static_cast<int>(!c.ratio.empty()) + static_cast<int>(c.circle) + static_cast<int>(c.free) > 1)
        throw UsageError("--ratio, --circle and --free are mutually exclusive");
    if (c.top < 1) throw UsageError("--top must be >= 1");

    LoadedSample sample;
    if (!c.image.empty()) {
        sample.image = std::make_shared<const Image>(read_ppm(c.image));
        sample.record.width = sample.image->width;
        sample.record.height = sample.image->height;
        sample.record.image_id = fs::path(c.image).stem().string();
    } else {
        sample.feature_map = std::make_shared<const FeatureMap<float>>(read_feature_map(c.featuremap));
        sample.record.width = sample.feature_map->geometry.extent_width();
        sample.record.height = sample.feature_map->geometry.extent_height();
        sample.record.image_id = fs::path(c.featuremap).stem().string();
    }
    const double w = sample.record.width, h = sample.record.height;
    if (!c.boxes.empty()) {
        for (auto& list : read_box_lists(c.boxes))
            if (list.image_id == sample.record.image_id) sample.record.proposals = list.boxes;
        if (sample.record.proposals.empty())
            throw DataError("box list " + c.boxes + " has no entry for '" + sample.record.image_id + "'");
    }

    std::string mode = "free";
    std::vector<RegionBox> candidates;
    std::vector<Circle> circles;
    if (!c.ratio.empty()) {
        const auto [rw, rh] = parse_ratio(c.ratio);
        candidates = ratio_anchors(w, h, rw, rh, c.scales, c.positions);
        mode = "ratio " + c.ratio;
    } else if (c.circle) {
        for (const auto& [circle, square] : circular_crop(w, h, c.scales, c.positions)) {
            circles.push_back(circle);
            candidates.push_back(square);
        }
        mode = "circle";
    }

    ojson out;
    with_checkpoint(c.checkpoint, [&](const RunConfig& config, const auto& model) {
        if (mode == "free") candidates = grid_anchors(w, h, config.anchors);
        const auto props = sample_proposals(sample, config.model.proposals, !c.no_heuristic);
        const auto scores = model.score_candidates(sample.scene(), props, candidates);
        const auto ranked = top_crops(rank_crops(scores, candidates), c.top);
        out["image_id"] = sample.record.image_id;
        out["mode"] = mode;
        out["candidates"] = candidates.size();
        out["results"] = ojson::array();
        for (const auto& r : ranked) {
            ojson e;
            e["rank"] = r.rank;
            e["score"] = r.score;
            e["box"] = {r.box.x1, r.box.y1, r.box.x2, r.box.y2};
            if (!circles.empty()) {
                const auto& ci = circles[r.index];
                e["circle"] = {{"cx", ci.cx}, {"cy", ci.cy}, {"radius", ci.radius}};
            }
            out["results"].push_back(e);
        }
    });
    (void)o;
    const std::string text = out.dump(2) + "\n";
    if (o.out.empty())
        std::cout << text;
    else
        write_text(o.out, text);
    return 0;
}

// ---------------------------------------------------------------- eval

int cmd_eval(const CommonOptions& o, const std::string& checkpoint, const std::string& manifest, bool oracle) {
    if (checkpoint.empty() == !oracle) throw UsageError("eval needs exactly one of --checkpoint or --oracle");
    const auto records = read_manifest(manifest);
    const auto samples = load_samples(records, fs::path(manifest).parent_path().string());
    const auto out = ensure_dir(o.out.empty() ? "eval" : o.out);
    EvalReport report;
    if (oracle) {
        report = evaluate_scores(samples, [](const LoadedSample& s) { return s.record.mos; });
    } else {
        with_checkpoint(checkpoint, [&](const RunConfig& config, const auto& model) {
            report = evaluate(model, samples, config.train.allow_heuristic);
            write_text(out / "config.json", run_config_to_json(config));
        });
    }
    write_text(out / "report.csv", report_csv(report));
    write_text(out / "summary.json", report_summary_json(report));
    write_text(out / "scatter.csv", scatter_csv(report, samples));
    write_text(out / "timing.json", timing_json(report.seconds, report.images_per_second));
    std::printf("srcc %.4f  acc5 %.2f  acc10 %.2f  images/s %.1f\n", report.srcc_mean, report.acc5, report.acc10,
                report.images_per_second);
    std::printf("(%s)\n", kAccConvention);
    return 0;
}

// ---------------------------------------------------------------- ablate

int cmd_ablate(const CommonOptions& o, const std::string& manifest, const std::string& held_out,
               const std::string& axis_name, std::optional<int> epochs) {
    auto config = resolve_config(o);
    if (epochs) config.train.epochs = *epochs;
    config.validate();
    const auto axis = parse_ablation_axis(axis_name);
    const auto split = load_split(manifest, config.val_fraction);
    std::vector<LoadedSample> test;
    if (!held_out.empty()) test = load_samples(read_manifest(held_out), fs::path(held_out).parent_path().string());
    const auto out = ensure_dir(o.out.empty() ? "ablate" : o.out);
    write_text(out / "config.json", run_config_to_json(config));
    const auto grid = ablation_grid(config.model, axis);
    auto on_row = [](const AblationRow& r) {
        std::printf("%-22s srcc %.4f  acc5 %.2f  acc10 %.2f  (epoch %d)\n", r.label.c_str(), r.srcc, r.acc5, r.acc10,
                    r.best_epoch);
        std::fflush(stdout);
    };
    const auto rows = config.precision == Precision::float64
                          ? ablation_run<double>(grid, split.train, split.val, test, config.train, config.model_seed, on_row)
                          : ablation_run<float>(grid, split.train, split.val, test, config.train, config.model_seed, on_row);
    write_text(out / ("ablation_" + to_string(axis) + ".csv"), ablation_csv(rows));
    return 0;
}

// ---------------------------------------------------------------- gradcheck

int cmd_gradcheck(const CommonOptions& o, const std::string& corrupt) {
    const auto start = std::chrono::steady_clock::now();
    const auto reports = run_gradient_suite(o.seed.value_or(42), corrupt);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    int failures = 0;
    for (const auto& r : reports) {
        std::printf("%-26s %s  max_rel_err %.3e  entries %ld\n", r.name.c_str(), r.passed ? "PASS" : "FAIL",
                    r.max_rel_error, static_cast<long>(r.entries_checked));
        failures += r.passed ? 0 : 1;
    }
    std::printf("%zu checks, %d failed, %.2f s\n", reports.size(), failures, seconds);
    return failures == 0 ? 0 : NumericalError("").exit_code();
}

// ---------------------------------------------------------------- bench

int cmd_bench(const CommonOptions& o, const std::string& checkpoint, int iterations) {
    if (iterations < 1) throw UsageError("--iterations must be >= 1");
    auto config = resolve_config(o);
    const auto data = synth_dataset(1, config.train.seed, config.synth);
    const auto& sample = data.samples.front();
    double seconds = 0;
    std::size_t passes = 0, candidates = 0;
    auto run = [&](const auto& model) {
        const auto props = sample_proposals(sample, model.config().proposals);
        const auto boxes = grid_anchors(sample.record.width, sample.record.height, config.anchors);
        candidates = boxes.size();
        model.score_candidates(sample.scene(), props, boxes);  // warm-up
        const std::size_t before = model.feature_passes();
        const auto start = std::chrono::steady_clock::now();
        for (int i = 0; i < iterations; ++i) model.score_candidates(sample.scene(), props, boxes);
        seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        passes = model.feature_passes() - before;
    };
    if (!checkpoint.empty())
        with_checkpoint(checkpoint, [&](const RunConfig&, const auto& model) { run(model); });
    else
        with_model(config, config.model_seed, [&](const auto& model) { run(model); });
    const double ips = iterations / std::max(seconds, 1e-12);
    std::printf("%d images x %zu candidates: %.2f ms/image, %.1f images/s, %zu feature passes\n", iterations, candidates,
                1e3 * seconds / iterations, ips, passes);
    if (!o.out.empty()) {
        const auto out = ensure_dir(o.out);
        ojson j;
        j["iterations"] = iterations;
        j["candidates"] = candidates;
        j["feature_passes"] = passes;
        j["ms_per_image"] = 1e3 * seconds / iterations;
        j["images_per_second"] = ips;
        write_text(out / "bench.json", j.dump(2) + "\n");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"s2crop: spatial-semantic collaborative crop scoring"};
    app.require_subcommand(1);
    CommonOptions common;

    int n_images = 250;
    auto* synth = app.add_subcommand("synth", "render a planted synthetic dataset");
    add_common(synth, common);
    synth->add_option("--n", n_images, "number of images")->check(CLI::PositiveNumber);

    std::string manifest;
    std::optional<int> epochs;
    auto* train_cmd = app.add_subcommand("train", "train on a manifest, keeping the best held-out checkpoint");
    add_common(train_cmd, common);
    train_cmd->add_option("--manifest", manifest, "dataset manifest (JSON lines)")->required();
    train_cmd->add_option("--epochs", epochs, "override the configured epoch count");

    CropOptions crop_opts;
    auto* crop = app.add_subcommand("crop", "rank crops of one image");
    add_common(crop, common);
    crop->add_option("--checkpoint", crop_opts.checkpoint, "trained checkpoint")->required();
    crop->add_option("--image", crop_opts.image, "input image (binary PPM)");
    crop->add_option("--featuremap", crop_opts.featuremap, "precomputed feature map (S2FM)");
    crop->add_option("--boxes", crop_opts.boxes, "object proposals (box list JSON lines)");
    crop->add_flag("--no-heuristic", crop_opts.no_heuristic, "fail instead of using heuristic proposals");
    crop->add_option("--ratio", crop_opts.ratio, "fixed aspect ratio W:H");
    crop->add_flag("--circle", crop_opts.circle, "circular crops via circumscribed squares");
    crop->add_flag("--free", crop_opts.free, "unconstrained grid anchors (default)");
    crop->add_option("--top", crop_opts.top, "number of crops to return");
    crop->add_option("--scales", crop_opts.scales, "sizes for --ratio / --circle");
    crop->add_option("--positions", crop_opts.positions, "translations per axis for --ratio / --circle");

    std::string checkpoint;
    bool oracle = false;
    auto* eval = app.add_subcommand("eval", "score a manifest and report SRCC / ACC");
    add_common(eval, common);
    eval->add_option("--checkpoint", checkpoint, "trained checkpoint");
    eval->add_flag("--oracle", oracle, "score with the annotated MOS itself (upper bound)");
    eval->add_option("--manifest", manifest, "dataset manifest")->required();

    std::string axis = "spatial";
    auto* ablate = app.add_subcommand("ablate", "train a grid of configurations with a shared seed");
    add_common(ablate, common);
    ablate->add_option("--manifest", manifest, "dataset manifest")->required();
    std::string held_out;
    ablate->add_option("--held-out", held_out, "manifest scored with each setting's chosen parameters");
    ablate->add_option("--axis", axis, "spatial | proposals | components");
    ablate->add_option("--epochs", epochs, "override the configured epoch count");

    std::string corrupt;
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every differentiable op");
    add_common(gradcheck, common);
    gradcheck->add_option("--corrupt", corrupt, "negate one check's analytic gradient (negative control)");

    int iterations = 20;
    auto* bench = app.add_subcommand("bench", "time scoring of one image's anchor set");
    add_common(bench, common);
    bench->add_option("--checkpoint", checkpoint, "trained checkpoint (fresh model if omitted)");
    bench->add_option("--iterations", iterations, "timed repetitions");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*synth) return cmd_synth(common, n_images);
        if (*train_cmd) return cmd_train(common, manifest, epochs);
        if (*crop) return cmd_crop(common, crop_opts);
        if (*eval) return cmd_eval(common, checkpoint, manifest, oracle);
        if (*ablate) return cmd_ablate(common, manifest, held_out, axis, epochs);
        if (*gradcheck) {
            if (!corrupt.empty()) {
                const auto names = gradient_suite_names();
                if (std::find(names.begin(), names.end(), corrupt) == names.end())
                    throw UsageError("unknown check '" + corrupt + "'");
            }
            return cmd_gradcheck(common, corrupt);
        }
        if (*bench) return cmd_bench(common, checkpoint, iterations);
    } catch (const Error& e) {
        std::cerr << "s2crop: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "s2crop: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
