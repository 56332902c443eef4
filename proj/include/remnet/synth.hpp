#pragma once

#include <array>
#include <string>
#include <vector>

#include "remnet/image.hpp"
#include "remnet/manifest.hpp"

namespace remnet {

// Per-model acquisition fingerprint. The simulator is a surrogate for real
// camera processing: every knob only has to be distinctive and deterministic,
// not radiometrically accurate.
struct CameraModelSpec {
    std::string model_id;
    int label = -1;
    std::string bayer_pattern = "RGGB";  // RGGB, BGGR, GRBG, or GBRG
    int demosaic_kernel = 0;             // 0 bilinear, 1 nearest, 2 wide/smooth
    std::array<double, 9> color_matrix = {1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major
    std::string noise_shape = "high";    // spectral emphasis: low, mid, high
    double noise_sigma = 2.0 / 255.0;    // added noise level in [0,1] units
    int jpeg_qf = 92;
    double jpeg_quant_scale = 1.0;
};

// One physical unit of a model, carrying its fixed multiplicative sensor
// pattern (strength ≤ 2%).
struct DeviceSpec {
    std::string device_id;
    std::string model_id;
    std::uint64_t prnu_seed = 0;
    double prnu_strength = 0.01;
};

struct SceneSpec {
    std::string scene_id;
    std::uint64_t seed = 0;
};

// Procedural scene: gradients, noise octaves and flat shapes, so both
// high-quality (textured, mid-bright) and low-quality (dark, flat) windows
// occur. Deterministic per seed; independent of any camera spec.
ImageU8 render_scene(const SceneSpec& scene, int size);

// The device's fixed unit-variance pattern field, deterministic per seed.
Tensor prnu_field(const DeviceSpec& dev, int height, int width);

// Mosaic + demosaic only (the reference for nulled-stage comparisons).
ImageU8 mosaic_demosaic(const ImageU8& ideal, const CameraModelSpec& model);

// Full capture chain: mosaic → demosaic → PRNU gain → color matrix →
// spectrally shaped noise → compression round trip. Deterministic given
// (image, specs, shot_seed).
ImageU8 apply_pipeline(const ImageU8& ideal, const CameraModelSpec& model, const DeviceSpec& dev,
                       std::uint64_t shot_seed);

// Hand-tuned spec set; any two differ in at least two fields (validated).
std::vector<CameraModelSpec> default_model_specs(int n);
void check_spec_separation(const std::vector<CameraModelSpec>& specs);

struct SynthConfig {
    int n_models = 4;
    int devices_per_model = 3;
    int scenes = 40;
    int image_size = 512;
    std::uint64_t seed = 1234;
    std::string out_dir;
};

struct SynthResult {
    std::string manifest_path;
    std::string descriptor_path;
    int images_written = 0;
};

// Writes images/, manifest.csv and dataset.json under out_dir. Every image is
// one (model, device, scene) capture. Partial output is removed on failure.
SynthResult generate_dataset(const SynthConfig& cfg);

}  // namespace remnet
