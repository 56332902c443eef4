#include "remnet/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace remnet {

namespace {
constexpr const char* kHeader = "path,model_label,device_id,scene_id";
}

Manifest read_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("manifest: cannot open '" + path + "'");
    const std::filesystem::path base = std::filesystem::path(path).parent_path();

    std::string line;
    if (!std::getline(is, line)) throw IoError("manifest: '" + path + "' is empty");
    if (line != kHeader)
        throw IoError("manifest: '" + path + "' must start with header '" + std::string(kHeader) +
                      "'");

    Manifest m;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 4)
            throw IoError("manifest: line " + std::to_string(lineno) + " of '" + path +
                          "' has " + std::to_string(fields.size()) + " fields, expected 4");
        ImageRecord rec;
        std::filesystem::path p(fields[0]);
        rec.path = p.is_absolute() ? p.string() : (base / p).string();
        try {
            rec.model_label = std::stoi(fields[1]);
        } catch (const std::exception&) {
            throw IoError("manifest: line " + std::to_string(lineno) + ": bad model_label '" +
                          fields[1] + "'");
        }
        rec.device_id = fields[2];
        rec.scene_id = fields[3];
        m.records.push_back(std::move(rec));
    }
    return m;
}

void write_manifest(const std::string& path, const Manifest& m) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("manifest: cannot open '" + path + "' for writing");
    os << kHeader << "\n";
    for (const auto& r : m.records)
        os << r.path << "," << r.model_label << "," << r.device_id << "," << r.scene_id << "\n";
    if (!os) throw IoError("manifest: write to '" + path + "' failed");
}

SplitResult split_by_device_scene(const Manifest& m, const SplitConfig& cfg) {
    if (m.empty()) throw ValueError("split: manifest is empty");
    if (cfg.test_scene_fraction <= 0.0 || cfg.test_scene_fraction >= 1.0)
        throw ValueError("split: test_scene_fraction must be in (0,1)");
    if (cfg.val_fraction < 0.0 || cfg.val_fraction >= 1.0)
        throw ValueError("split: val_fraction must be in [0,1)");

    std::map<int, std::set<std::string>> devices_by_model;
    std::set<std::string> scenes;
    for (const auto& r : m.records) {
        devices_by_model[r.model_label].insert(r.device_id);
        scenes.insert(r.scene_id);
    }
    for (const auto& [label, devs] : devices_by_model)
        if (devs.size() < 2)
            throw ValueError("split: model " + std::to_string(label) + " has only " +
                             std::to_string(devs.size()) +
                             " device(s); need at least 2 to hold one out");

    SplitResult out;
    for (const auto& [label, devs] : devices_by_model) out.test_device[label] = *devs.rbegin();

    const std::vector<std::string> scene_list(scenes.begin(), scenes.end());
    const int n_test_scenes = std::max(
        1, static_cast<int>(std::ceil(cfg.test_scene_fraction * static_cast<double>(scene_list.size()))));
    if (n_test_scenes >= static_cast<int>(scene_list.size()))
        out.violations.push_back("test scene fraction leaves no scenes for training");
    std::set<std::string> test_scene_set;
    for (std::size_t i = scene_list.size() - std::min<std::size_t>(n_test_scenes, scene_list.size());
         i < scene_list.size(); ++i)
        test_scene_set.insert(scene_list[i]);
    out.test_scenes.assign(test_scene_set.begin(), test_scene_set.end());

    for (const auto& r : m.records) {
        const bool test_dev = out.test_device.at(r.model_label) == r.device_id;
        const bool test_scene = test_scene_set.count(r.scene_id) > 0;
        if (test_dev && test_scene) {
            out.test.records.push_back(r);
        } else if (!test_dev && !test_scene) {
            // seeded, order-independent train/val draw per image identity
            Rng rng(derive_seed(cfg.seed, r.path + "|" + r.device_id + "|" + r.scene_id));
            if (next_double(rng) < cfg.val_fraction)
                out.val.records.push_back(r);
            else
                out.train.records.push_back(r);
        } else {
            ++out.dropped;  // would leak a test device or scene into training
        }
    }

    std::set<int> labels;
    for (const auto& [label, devs] : devices_by_model) labels.insert(label);
    auto models_of = [](const Manifest& mf) {
        std::set<int> s;
        for (const auto& r : mf.records) s.insert(r.model_label);
        return s;
    };
    if (models_of(out.train) != labels)
        out.violations.push_back("some model has no training images");
    if (models_of(out.test) != labels) out.violations.push_back("some model has no test images");
    return out;
}

}  // namespace remnet
