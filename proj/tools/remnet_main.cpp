// Command-line driver: dataset synthesis, split, augmentation, training,
// evaluation, patch scoring and the gradient-check battery. Every run writes
// its effective configuration into the output directory so it can be replayed
// with --config; nothing is written outside --out.
//
// Exit codes: 0 success, 1 unexpected error, 2 argument/parse error,
// 3 I/O error, 4 constraint violation (bad value/shape, failed gradcheck),
// 5 split produced protocol violations.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "remnet/augment.hpp"
#include "remnet/checkpoint.hpp"
#include "remnet/eval.hpp"
#include "remnet/gradcheck.hpp"
#include "remnet/image.hpp"
#include "remnet/manifest.hpp"
#include "remnet/model.hpp"
#include "remnet/quality.hpp"
#include "remnet/synth.hpp"
#include "remnet/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace remnet;

namespace {

constexpr int kExitUnexpected = 1;
constexpr int kExitParse = 2;
constexpr int kExitIo = 3;
constexpr int kExitConstraint = 4;
constexpr int kExitSplitViolations = 5;

std::string absolute_path(const std::string& p) { return fs::absolute(p).string(); }

void write_run_config(const std::string& out_dir, const json& cfg) {
    fs::create_directories(out_dir);
    std::ofstream f(out_dir + "/run_config.json");
    if (!f) throw IoError("cannot write run config under " + out_dir);
    f << cfg.dump(2) << "\n";
}

json load_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw ValueError("config file " + path + " is not valid JSON: " + e.what());
    }
    return j;
}

int infer_n_class(const Manifest& m) {
    int top = -1;
    for (const ImageRecord& r : m.records) top = std::max(top, r.model_label);
    if (top < 1) throw ValueError("manifest labels do not span at least two classes");
    return top + 1;
}

// ---------------------------------------------------------------- synth ----

struct SynthArgs {
    std::string out, config;
    std::uint64_t seed = 1234;
    int models = 4, devices = 3, scenes = 40, size = 512;
};

int cmd_synth(const SynthArgs& a, const CLI::App* cmd) {
    SynthConfig cfg;
    if (!a.config.empty()) {
        json j = load_json_file(a.config);
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("models")) cfg.n_models = j.at("models").get<int>();
        if (j.contains("devices")) cfg.devices_per_model = j.at("devices").get<int>();
        if (j.contains("scenes")) cfg.scenes = j.at("scenes").get<int>();
        if (j.contains("size")) cfg.image_size = j.at("size").get<int>();
    } else {
        cfg.seed = a.seed;
        cfg.n_models = a.models;
        cfg.devices_per_model = a.devices;
        cfg.scenes = a.scenes;
        cfg.image_size = a.size;
    }
    if (cmd->count("--seed")) cfg.seed = a.seed;
    if (cmd->count("--models")) cfg.n_models = a.models;
    if (cmd->count("--devices")) cfg.devices_per_model = a.devices;
    if (cmd->count("--scenes")) cfg.scenes = a.scenes;
    if (cmd->count("--size")) cfg.image_size = a.size;
    cfg.out_dir = a.out;

    SynthResult res = generate_dataset(cfg);
    write_run_config(a.out, json{{"command", "synth"},
                                 {"seed", cfg.seed},
                                 {"models", cfg.n_models},
                                 {"devices", cfg.devices_per_model},
                                 {"scenes", cfg.scenes},
                                 {"size", cfg.image_size}});
    std::cout << "wrote " << res.images_written << " images, manifest " << res.manifest_path
              << "\n";
    return 0;
}

// ---------------------------------------------------------------- split ----

struct SplitArgs {
    std::string manifest, out;
    std::uint64_t seed = 0;
    double test_scene_fraction = 0.25;
    double val_fraction = 0.2;
};

int cmd_split(const SplitArgs& a) {
    Manifest m = read_manifest(a.manifest);
    SplitConfig cfg;
    cfg.seed = a.seed;
    cfg.test_scene_fraction = a.test_scene_fraction;
    cfg.val_fraction = a.val_fraction;
    SplitResult res = split_by_device_scene(m, cfg);

    fs::create_directories(a.out);
    write_manifest(a.out + "/train.csv", res.train);
    write_manifest(a.out + "/val.csv", res.val);
    write_manifest(a.out + "/test.csv", res.test);

    json summary;
    summary["dropped"] = res.dropped;
    summary["test_scenes"] = res.test_scenes;
    summary["violations"] = res.violations;
    json devs = json::object();
    for (const auto& [label, dev] : res.test_device) devs[std::to_string(label)] = dev;
    summary["test_device"] = devs;
    summary["counts"] = {{"train", res.train.size()}, {"val", res.val.size()},
                         {"test", res.test.size()}};
    {
        std::ofstream f(a.out + "/split.json");
        if (!f) throw IoError("cannot write split summary under " + a.out);
        f << summary.dump(2) << "\n";
    }
    write_run_config(a.out, json{{"command", "split"},
                                 {"manifest", absolute_path(a.manifest)},
                                 {"seed", a.seed},
                                 {"test_scene_fraction", a.test_scene_fraction},
                                 {"val_fraction", a.val_fraction}});
    std::cout << "train=" << res.train.size() << " val=" << res.val.size()
              << " test=" << res.test.size() << " dropped=" << res.dropped << "\n";
    if (!res.violations.empty()) {
        std::cerr << "error kind=split_violation msg=\"" << res.violations.size()
                  << " protocol violation(s); see split.json\"\n";
        return kExitSplitViolations;
    }
    return 0;
}

// -------------------------------------------------------------- augment ----

struct AugmentArgs {
    std::string manifest, out;
};

int cmd_augment(const AugmentArgs& a) {
    Manifest m = read_manifest(a.manifest);
    if (m.empty()) throw ValueError("manifest has no images");
    fs::create_directories(a.out + "/images");
    Manifest out_m;
    std::vector<AugmentationSpec> specs = nine_fold_specs();
    for (const ImageRecord& r : m.records) {
        ImageU8 img = read_ppm(r.path);
        const std::string stem = fs::path(r.path).stem().string();
        auto emit = [&](const ImageU8& variant, const std::string& tag) {
            const std::string rel = "images/" + stem + "_" + tag + ".ppm";
            write_ppm(a.out + "/" + rel, variant);
            ImageRecord nr = r;
            nr.path = rel;
            nr.width = variant.width;
            nr.height = variant.height;
            out_m.records.push_back(nr);
        };
        emit(img, "none");
        for (const AugmentationSpec& s : specs) emit(augment(img, s), s.tag());
    }
    write_manifest(a.out + "/manifest.csv", out_m);
    write_run_config(a.out, json{{"command", "augment"},
                                 {"manifest", absolute_path(a.manifest)}});
    std::cout << "wrote " << out_m.size() << " images (" << m.size() << " x "
              << (specs.size() + 1) << ")\n";
    return 0;
}

// ---------------------------------------------------------------- train ----

struct TrainArgs {
    std::string manifest, val_manifest, out, config;
    std::uint64_t seed = 0;
    int epochs = -1, batch_size = -1, clusters_per_image = 20, stride = 64, n_class = -1;
};

int cmd_train(const TrainArgs& a, const CLI::App* cmd) {
    std::string train_manifest = a.manifest;
    std::string val_manifest = a.val_manifest;
    TrainConfig tc;
    tc.seed = a.seed;
    int clusters_per_image = a.clusters_per_image;
    int stride = a.stride;
    int n_class = a.n_class;
    std::string model_json;

    if (!a.config.empty()) {
        json j = load_json_file(a.config);
        if (j.contains("train_manifest")) train_manifest = j.at("train_manifest").get<std::string>();
        if (j.contains("val_manifest")) val_manifest = j.at("val_manifest").get<std::string>();
        if (j.contains("seed")) tc.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("clusters_per_image")) clusters_per_image = j.at("clusters_per_image").get<int>();
        if (j.contains("stride")) stride = j.at("stride").get<int>();
        if (j.contains("n_class")) n_class = j.at("n_class").get<int>();
        if (j.contains("model")) model_json = j.at("model").dump();
        if (j.contains("train")) {
            const json& t = j.at("train");
            if (t.contains("batch_size")) tc.batch_size = t.at("batch_size").get<int>();
            if (t.contains("lr_init")) tc.lr_init = t.at("lr_init").get<float>();
            if (t.contains("lr_decay")) tc.lr_decay = t.at("lr_decay").get<float>();
            if (t.contains("plateau_patience")) tc.plateau_patience = t.at("plateau_patience").get<int>();
            if (t.contains("lr_floor")) tc.lr_floor = t.at("lr_floor").get<float>();
            if (t.contains("max_epochs")) tc.max_epochs = t.at("max_epochs").get<int>();
            if (t.contains("min_delta")) tc.min_delta = t.at("min_delta").get<float>();
        }
    }
    if (cmd->count("--manifest")) train_manifest = a.manifest;
    if (cmd->count("--val-manifest")) val_manifest = a.val_manifest;
    if (cmd->count("--seed")) tc.seed = a.seed;
    if (cmd->count("--epochs")) tc.max_epochs = a.epochs;
    if (cmd->count("--batch-size")) tc.batch_size = a.batch_size;
    if (cmd->count("--clusters-per-image")) clusters_per_image = a.clusters_per_image;
    if (cmd->count("--stride")) stride = a.stride;
    if (cmd->count("--n-class")) n_class = a.n_class;
    if (train_manifest.empty()) throw ValueError("a training manifest is required");
    if (val_manifest.empty()) throw ValueError("a validation manifest is required");

    Manifest train_m = read_manifest(train_manifest);
    Manifest val_m = read_manifest(val_manifest);
    if (n_class < 0) n_class = std::max(infer_n_class(train_m), infer_n_class(val_m));

    ModelConfig mc = model_json.empty() ? desk_config(n_class) : ModelConfig::from_json(model_json);
    if (mc.n_class != n_class && model_json.empty()) mc = desk_config(n_class);
    Model model = build_model(mc, tc.seed);

    write_run_config(a.out, json{{"command", "train"},
                                 {"train_manifest", absolute_path(train_manifest)},
                                 {"val_manifest", absolute_path(val_manifest)},
                                 {"seed", tc.seed},
                                 {"n_class", n_class},
                                 {"clusters_per_image", clusters_per_image},
                                 {"stride", stride},
                                 {"model", json::parse(mc.to_json())},
                                 {"train", {{"batch_size", tc.batch_size},
                                            {"lr_init", tc.lr_init},
                                            {"lr_decay", tc.lr_decay},
                                            {"plateau_patience", tc.plateau_patience},
                                            {"lr_floor", tc.lr_floor},
                                            {"max_epochs", tc.max_epochs},
                                            {"min_delta", tc.min_delta}}}});

    LabeledClusters train_c = load_cluster_corpus(train_m, clusters_per_image, stride, n_class);
    LabeledClusters val_c = load_cluster_corpus(val_m, clusters_per_image, stride, n_class);
    TrainResult res = train_model(model, train_c, val_c, tc, a.out);
    std::cout << "best_epoch=" << res.best_epoch << " best_val_loss=" << res.best_val_loss
              << " checkpoint=" << res.checkpoint_path << "\n";
    return 0;
}

// ----------------------------------------------------------------- eval ----

struct EvalArgs {
    std::string checkpoint, manifest, out;
    int n_votes = 20, stride = 64;
    bool worst_quality = false;
};

int cmd_eval(const EvalArgs& a) {
    LoadedCheckpoint ck = load_checkpoint(a.checkpoint);
    Manifest m = read_manifest(a.manifest);
    PatchPredictor predict = model_predictor(ck.model);
    EvalOptions opt;
    opt.n_votes = a.n_votes;
    opt.stride = a.stride;
    opt.worst_quality = a.worst_quality;
    EvalResult res = evaluate_manifest(predict, m, ck.model.config.n_class, opt);

    fs::create_directories(a.out);
    json metrics;
    metrics["accuracy_pct"] = res.accuracy_pct;
    metrics["n_images"] = res.records.size();
    metrics["n_votes"] = a.n_votes;
    metrics["worst_quality"] = a.worst_quality;
    metrics["confusion"] = res.confusion;
    {
        std::ofstream f(a.out + "/metrics.json");
        if (!f) throw IoError("cannot write metrics under " + a.out);
        f << metrics.dump(2) << "\n";
    }
    write_predictions_csv(a.out + "/predictions.csv", res.records);
    write_run_config(a.out, json{{"command", "eval"},
                                 {"checkpoint", absolute_path(a.checkpoint)},
                                 {"manifest", absolute_path(a.manifest)},
                                 {"n_votes", a.n_votes},
                                 {"stride", a.stride},
                                 {"worst_quality", a.worst_quality}});
    std::cout << "accuracy=" << res.accuracy_pct << "% over " << res.records.size()
              << " images\n";
    return 0;
}

// ---------------------------------------------------------- score-patch ----

struct ScoreArgs {
    std::string image, out;
    int stride = 64, window = 256;
};

int cmd_score_patch(const ScoreArgs& a) {
    ImageU8 img = read_ppm(a.image);
    std::vector<ClusterRecord> all =
        extract_top_clusters(img, std::numeric_limits<int>::max() / 2, a.stride, a.window);
    std::sort(all.begin(), all.end(), [](const ClusterRecord& x, const ClusterRecord& y) {
        return std::tie(x.row, x.col) < std::tie(y.row, y.col);
    });
    fs::create_directories(a.out);
    {
        std::ofstream f(a.out + "/quality_map.csv");
        if (!f) throw IoError("cannot write quality map under " + a.out);
        f << "row,col,quality\n";
        char buf[96];
        for (const ClusterRecord& c : all) {
            std::snprintf(buf, sizeof(buf), "%d,%d,%.9f\n", c.row, c.col, c.quality);
            f << buf;
        }
    }
    write_run_config(a.out, json{{"command", "score-patch"},
                                 {"image", absolute_path(a.image)},
                                 {"stride", a.stride},
                                 {"window", a.window}});
    const ClusterRecord* best = &all[0];
    for (const ClusterRecord& c : all)
        if (c.quality > best->quality) best = &c;
    std::cout << "windows=" << all.size() << " best_row=" << best->row
              << " best_col=" << best->col << " best_quality=" << best->quality << "\n";
    return 0;
}

// ------------------------------------------------------------ gradcheck ----

int cmd_gradcheck(std::uint64_t seed) {
    std::vector<GradCheckReport> reports = run_standard_gradchecks(seed);
    std::cout << format_gradcheck_table(reports);
    for (const GradCheckReport& r : reports) {
        if (!r.passed) {
            std::cerr << "error kind=gradcheck msg=\"op " << r.op_name
                      << " exceeded tolerance\"\n";
            return kExitConstraint;
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"camera-model identification toolkit"};
    app.require_subcommand(1);

    SynthArgs sa;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic camera dataset");
    synth->add_option("--out", sa.out, "output directory")->required();
    synth->add_option("--config", sa.config, "JSON config to replay");
    synth->add_option("--seed", sa.seed, "master seed");
    synth->add_option("--models", sa.models, "camera models");
    synth->add_option("--devices", sa.devices, "devices per model");
    synth->add_option("--scenes", sa.scenes, "scenes");
    synth->add_option("--size", sa.size, "image side length");

    SplitArgs pa;
    CLI::App* split = app.add_subcommand("split", "device- and scene-disjoint split");
    split->add_option("--manifest", pa.manifest, "input manifest CSV")->required();
    split->add_option("--out", pa.out, "output directory")->required();
    split->add_option("--seed", pa.seed, "train/val assignment seed");
    split->add_option("--test-scene-fraction", pa.test_scene_fraction, "scene share for test");
    split->add_option("--val-fraction", pa.val_fraction, "validation share");

    AugmentArgs aa;
    CLI::App* augment_cmd = app.add_subcommand("augment", "materialize the nine-fold augmentation set");
    augment_cmd->add_option("--manifest", aa.manifest, "input manifest CSV")->required();
    augment_cmd->add_option("--out", aa.out, "output directory")->required();

    TrainArgs ta;
    CLI::App* train = app.add_subcommand("train", "train a model on cluster patches");
    train->add_option("--manifest", ta.manifest, "training manifest CSV");
    train->add_option("--val-manifest", ta.val_manifest, "validation manifest CSV");
    train->add_option("--out", ta.out, "output directory")->required();
    train->add_option("--config", ta.config, "JSON run config (flags override)");
    train->add_option("--seed", ta.seed, "master seed");
    train->add_option("--epochs", ta.epochs, "maximum epochs");
    train->add_option("--batch-size", ta.batch_size, "batch size");
    train->add_option("--clusters-per-image", ta.clusters_per_image, "clusters per image");
    train->add_option("--stride", ta.stride, "cluster grid stride");
    train->add_option("--n-class", ta.n_class, "number of classes");

    EvalArgs ea;
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a manifest");
    eval_cmd->add_option("--checkpoint", ea.checkpoint, "checkpoint path")->required();
    eval_cmd->add_option("--manifest", ea.manifest, "evaluation manifest CSV")->required();
    eval_cmd->add_option("--out", ea.out, "output directory")->required();
    eval_cmd->add_option("--n-votes", ea.n_votes, "clusters voting per image");
    eval_cmd->add_option("--stride", ea.stride, "cluster grid stride");
    eval_cmd->add_flag("--worst-quality", ea.worst_quality, "vote over lowest-quality clusters");

    ScoreArgs ca;
    CLI::App* score = app.add_subcommand("score-patch", "quality map over an image's windows");
    score->add_option("--image", ca.image, "PPM image path")->required();
    score->add_option("--out", ca.out, "output directory")->required();
    score->add_option("--stride", ca.stride, "window grid stride");
    score->add_option("--window", ca.window, "window side length");

    std::uint64_t gc_seed = 20240915;
    CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient battery");
    gradcheck->add_option("--seed", gc_seed, "instance seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitParse;
    }

    try {
        if (synth->parsed()) return cmd_synth(sa, synth);
        if (split->parsed()) return cmd_split(pa);
        if (augment_cmd->parsed()) return cmd_augment(aa);
        if (train->parsed()) return cmd_train(ta, train);
        if (eval_cmd->parsed()) return cmd_eval(ea);
        if (score->parsed()) return cmd_score_patch(ca);
        if (gradcheck->parsed()) return cmd_gradcheck(gc_seed);
    } catch (const IoError& e) {
        std::cerr << "error kind=io msg=\"" << e.what() << "\"\n";
        return kExitIo;
    } catch (const ShapeError& e) {
        std::cerr << "error kind=shape msg=\"" << e.what() << "\"\n";
        return kExitConstraint;
    } catch (const ValueError& e) {
        std::cerr << "error kind=value msg=\"" << e.what() << "\"\n";
        return kExitConstraint;
    } catch (const std::exception& e) {
        std::cerr << "error kind=unexpected msg=\"" << e.what() << "\"\n";
        return kExitUnexpected;
    }
    return kExitParse;
}
