#pragma once

#include <map>
#include <string>
#include <vector>

#include "remnet/common.hpp"

namespace remnet {

struct ImageRecord {
    std::string path;
    int model_label = -1;
    std::string device_id;
    std::string scene_id;
    int width = 0, height = 0;  // filled lazily; 0 = unknown
};

struct Manifest {
    std::vector<ImageRecord> records;

    bool empty() const { return records.empty(); }
    std::size_t size() const { return records.size(); }
};

// CSV with header "path,model_label,device_id,scene_id". Relative paths are
// resolved against the manifest file's directory on read.
Manifest read_manifest(const std::string& path);
void write_manifest(const std::string& path, const Manifest& m);

struct SplitConfig {
    double test_scene_fraction = 0.25;  // share of scenes reserved for test
    double val_fraction = 0.2;          // share of the remaining pool held for validation
    std::uint64_t seed = 0;             // drives the train/val assignment
};

struct SplitResult {
    Manifest train, val, test;
    std::map<int, std::string> test_device;  // per model label
    std::vector<std::string> test_scenes;
    int dropped = 0;  // images excluded to keep devices and scenes disjoint
    std::vector<std::string> violations;
};

// Device- and scene-disjoint protocol: per model, the lexicographically last
// device is reserved for test; the lexicographically last fraction of scenes
// becomes the test scene set. Test = test device ∩ test scenes; train/val =
// other devices ∩ other scenes (the rest is dropped); train vs val assignment
// is a seeded per-image draw. A model with fewer than two devices is
// rejected. Unsatisfiable constraints are reported in `violations`.
SplitResult split_by_device_scene(const Manifest& m, const SplitConfig& cfg = {});

}  // namespace remnet
