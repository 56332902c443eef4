#include "remnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "remnet/jpeg_core.hpp"

namespace remnet {

namespace {

// Bilinearly interpolated lattice of gaussian values ("value noise").
struct NoiseOctave {
    int cell;
    std::vector<double> lattice;
    int lw, lh;

    NoiseOctave(int width, int height, int cell_, Rng& rng) : cell(cell_) {
        lw = width / cell + 2;
        lh = height / cell + 2;
        lattice.resize(static_cast<std::size_t>(lw) * lh);
        for (auto& v : lattice) v = next_gaussian(rng);
    }

    double at(int y, int x) const {
        const double fy = static_cast<double>(y) / cell, fx = static_cast<double>(x) / cell;
        const int iy = static_cast<int>(fy), ix = static_cast<int>(fx);
        const double ty = fy - iy, tx = fx - ix;
        auto l = [&](int r, int c) { return lattice[static_cast<std::size_t>(r) * lw + c]; };
        return (1 - ty) * ((1 - tx) * l(iy, ix) + tx * l(iy, ix + 1)) +
               ty * ((1 - tx) * l(iy + 1, ix) + tx * l(iy + 1, ix + 1));
    }
};

}  // namespace

ImageU8 render_scene(const SceneSpec& scene, int size) {
    if (size < 256) throw ValueError("render_scene: size must be at least 256");
    Rng rng(derive_seed(scene.seed, "scene-content"));

    // Smooth base: two-corner gradient per channel around mid brightness.
    double base[3], gx[3], gy[3];
    for (int c = 0; c < 3; ++c) {
        base[c] = 0.35 + 0.3 * next_double(rng);
        gx[c] = (next_double(rng) - 0.5) * 0.3 / size;
        gy[c] = (next_double(rng) - 0.5) * 0.3 / size;
    }

    // Texture octaves shared across channels with per-channel gains.
    NoiseOctave coarse(size, size, 48, rng), mid(size, size, 12, rng), fine(size, size, 3, rng);
    double gain[3];
    for (int c = 0; c < 3; ++c) gain[c] = 0.8 + 0.4 * next_double(rng);
    const double amp_coarse = 0.05 + 0.05 * next_double(rng);
    const double amp_mid = 0.05 + 0.06 * next_double(rng);
    const double amp_fine = 0.04 + 0.05 * next_double(rng);

    std::vector<double> px(static_cast<std::size_t>(size) * size * 3);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double t = amp_coarse * coarse.at(y, x) + amp_mid * mid.at(y, x) +
                             amp_fine * fine.at(y, x);
            for (int c = 0; c < 3; ++c)
                px[(static_cast<std::size_t>(y) * size + x) * 3 + c] =
                    base[c] + gx[c] * x + gy[c] * y + gain[c] * t;
        }

    // Flat filled shapes: rectangles and discs of near-constant colour.
    const int n_shapes = 4 + static_cast<int>(uniform_below(rng, 5));
    for (int s = 0; s < n_shapes; ++s) {
        const bool disc = uniform_below(rng, 2) == 0;
        const int cx = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(size)));
        const int cy = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(size)));
        const int r = 20 + static_cast<int>(uniform_below(rng, 60));
        double col[3];
        for (int c = 0; c < 3; ++c) col[c] = 0.15 + 0.7 * next_double(rng);
        const int y0 = std::max(0, cy - r), y1 = std::min(size - 1, cy + r);
        const int x0 = std::max(0, cx - r), x1 = std::min(size - 1, cx + r);
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                if (disc && (y - cy) * (y - cy) + (x - cx) * (x - cx) > r * r) continue;
                for (int c = 0; c < 3; ++c)
                    px[(static_cast<std::size_t>(y) * size + x) * 3 + c] = col[c];
            }
    }

    // With high probability, one corner becomes a dark, nearly flat region so
    // low-quality windows exist.
    if (next_double(rng) < 0.7) {
        const int corner = static_cast<int>(uniform_below(rng, 4));
        const int ext = std::min(size, 288);
        const int y0 = (corner & 1) ? size - ext : 0;
        const int x0 = (corner & 2) ? size - ext : 0;
        const double dark = 0.03 + 0.03 * next_double(rng);
        for (int y = y0; y < y0 + ext; ++y)
            for (int x = x0; x < x0 + ext; ++x)
                for (int c = 0; c < 3; ++c)
                    px[(static_cast<std::size_t>(y) * size + x) * 3 + c] =
                        dark + 0.004 * fine.at(y, x);
    }

    ImageU8 out(size, size);
    for (std::size_t i = 0; i < px.size(); ++i)
        out.pixels[i] =
            static_cast<std::uint8_t>(std::lround(std::min(1.0, std::max(0.0, px[i])) * 255.0));
    return out;
}

namespace {

// Channel index (0=R,1=G,2=B) of the colour filter at parity (y%2, x%2).
std::array<int, 4> bayer_layout(const std::string& pattern) {
    auto ch = [](char c) {
        switch (c) {
            case 'R': return 0;
            case 'G': return 1;
            case 'B': return 2;
        }
        throw ValueError("bayer pattern may only contain R, G, B");
    };
    if (pattern.size() != 4) throw ValueError("bayer pattern must have 4 letters");
    if (pattern != "RGGB" && pattern != "BGGR" && pattern != "GRBG" && pattern != "GBRG")
        throw ValueError("unknown bayer pattern '" + pattern + "'");
    return {ch(pattern[0]), ch(pattern[1]), ch(pattern[2]), ch(pattern[3])};
}

}  // namespace

ImageU8 mosaic_demosaic(const ImageU8& ideal, const CameraModelSpec& model) {
    const auto layout = bayer_layout(model.bayer_pattern);
    const int w = ideal.width, h = ideal.height;

    // Mosaic: keep one channel per pixel.
    std::vector<float> cfa(static_cast<std::size_t>(w) * h);
    auto cfa_ch = [&](int y, int x) { return layout[(y & 1) * 2 + (x & 1)]; };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            cfa[static_cast<std::size_t>(y) * w + x] =
                ideal.at(y, x, cfa_ch(y, x)) / 255.0f;

    const int radius = model.demosaic_kernel == 2 ? 2 : 1;
    ImageU8 out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                float v;
                if (cfa_ch(y, x) == c) {
                    v = cfa[static_cast<std::size_t>(y) * w + x];
                } else if (model.demosaic_kernel == 1) {
                    // nearest available sample in scan order
                    v = 0.0f;
                    bool found = false;
                    for (int dy = -1; dy <= 1 && !found; ++dy)
                        for (int dx = -1; dx <= 1 && !found; ++dx) {
                            const int yy = std::min(h - 1, std::max(0, y + dy));
                            const int xx = std::min(w - 1, std::max(0, x + dx));
                            if (cfa_ch(yy, xx) == c) {
                                v = cfa[static_cast<std::size_t>(yy) * w + xx];
                                found = true;
                            }
                        }
                } else {
                    // average of available samples in the window
                    float sum = 0.0f;
                    int cnt = 0;
                    for (int dy = -radius; dy <= radius; ++dy)
                        for (int dx = -radius; dx <= radius; ++dx) {
                            const int yy = std::min(h - 1, std::max(0, y + dy));
                            const int xx = std::min(w - 1, std::max(0, x + dx));
                            if (cfa_ch(yy, xx) == c) {
                                sum += cfa[static_cast<std::size_t>(yy) * w + xx];
                                ++cnt;
                            }
                        }
                    v = cnt > 0 ? sum / static_cast<float>(cnt) : 0.0f;
                }
                out.at(y, x, c) = static_cast<std::uint8_t>(
                    std::lround(std::min(1.0f, std::max(0.0f, v)) * 255.0f));
            }
    return out;
}

Tensor prnu_field(const DeviceSpec& dev, int height, int width) {
    Tensor f({height, width});
    Rng rng(derive_seed(dev.prnu_seed, "prnu-field"));
    for (auto& v : f.data) v = static_cast<float>(next_gaussian(rng));
    return f;
}

namespace {

std::vector<float> box_blur(const std::vector<float>& src, int h, int w, int radius) {
    std::vector<float> tmp(src.size()), dst(src.size());
    const int win = 2 * radius + 1;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float s = 0.0f;
            for (int d = -radius; d <= radius; ++d)
                s += src[static_cast<std::size_t>(y) * w + std::min(w - 1, std::max(0, x + d))];
            tmp[static_cast<std::size_t>(y) * w + x] = s / win;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float s = 0.0f;
            for (int d = -radius; d <= radius; ++d)
                s += tmp[static_cast<std::size_t>(std::min(h - 1, std::max(0, y + d))) * w + x];
            dst[static_cast<std::size_t>(y) * w + x] = s / win;
        }
    return dst;
}

void normalize_power(std::vector<float>& v) {
    double sumsq = 0.0;
    for (float x : v) sumsq += static_cast<double>(x) * x;
    const double rms = std::sqrt(sumsq / static_cast<double>(v.size()));
    if (rms > 0) {
        const float inv = static_cast<float>(1.0 / rms);
        for (auto& x : v) x *= inv;
    }
}

}  // namespace

ImageU8 apply_pipeline(const ImageU8& ideal, const CameraModelSpec& model, const DeviceSpec& dev,
                       std::uint64_t shot_seed) {
    if (dev.prnu_strength < 0.0 || dev.prnu_strength > 0.02)
        throw ValueError("device pattern strength must be in [0, 0.02]");
    if (model.noise_shape != "low" && model.noise_shape != "mid" && model.noise_shape != "high")
        throw ValueError("noise_shape must be low, mid, or high");
    if (model.noise_sigma < 0.0) throw ValueError("noise_sigma must be non-negative");

    ImageU8 captured = mosaic_demosaic(ideal, model);
    const int w = captured.width, h = captured.height;
    const std::size_t n = static_cast<std::size_t>(w) * h;

    std::vector<float> rgb(n * 3);
    for (std::size_t i = 0; i < n * 3; ++i) rgb[i] = captured.pixels[i] / 255.0f;

    // Fixed per-device multiplicative gain field, shared by all channels.
    if (dev.prnu_strength > 0.0) {
        const Tensor field = prnu_field(dev, h, w);
        for (std::size_t i = 0; i < n; ++i) {
            const float g = 1.0f + static_cast<float>(dev.prnu_strength) * field.data[i];
            rgb[i * 3 + 0] *= g;
            rgb[i * 3 + 1] *= g;
            rgb[i * 3 + 2] *= g;
        }
    }

    // Colour rendition.
    const auto& m = model.color_matrix;
    for (std::size_t i = 0; i < n; ++i) {
        const float r = rgb[i * 3], g = rgb[i * 3 + 1], b = rgb[i * 3 + 2];
        rgb[i * 3 + 0] = static_cast<float>(m[0] * r + m[1] * g + m[2] * b);
        rgb[i * 3 + 1] = static_cast<float>(m[3] * r + m[4] * g + m[5] * b);
        rgb[i * 3 + 2] = static_cast<float>(m[6] * r + m[7] * g + m[8] * b);
    }

    // Spectrally shaped sensor noise, independent per channel.
    if (model.noise_sigma > 0.0) {
        Rng rng(derive_seed(shot_seed, "shot-noise"));
        for (int c = 0; c < 3; ++c) {
            std::vector<float> noise(n);
            for (auto& v : noise) v = static_cast<float>(next_gaussian(rng));
            if (model.noise_shape == "low") {
                noise = box_blur(noise, h, w, 2);
            } else if (model.noise_shape == "mid") {
                std::vector<float> wide = box_blur(noise, h, w, 3);
                std::vector<float> narrow = box_blur(noise, h, w, 1);
                for (std::size_t i = 0; i < n; ++i) noise[i] = narrow[i] - wide[i];
            } else {
                std::vector<float> smooth = box_blur(noise, h, w, 1);
                for (std::size_t i = 0; i < n; ++i) noise[i] -= smooth[i];
            }
            normalize_power(noise);
            const float s = static_cast<float>(model.noise_sigma);
            for (std::size_t i = 0; i < n; ++i) rgb[i * 3 + c] += s * noise[i];
        }
    }

    ImageU8 staged(w, h);
    for (std::size_t i = 0; i < n * 3; ++i)
        staged.pixels[i] = static_cast<std::uint8_t>(
            std::lround(std::min(1.0f, std::max(0.0f, rgb[i])) * 255.0f));

    return jpeg_round_trip(staged, model.jpeg_qf, model.jpeg_quant_scale);
}

std::vector<CameraModelSpec> default_model_specs(int n) {
    if (n < 1) throw ValueError("default_model_specs: need at least one model");
    const std::array<std::string, 4> bayers = {"RGGB", "BGGR", "GRBG", "GBRG"};
    const std::array<std::string, 3> shapes = {"low", "high", "mid"};
    // Near-identity colour matrices with distinct channel mixing.
    const std::array<std::array<double, 9>, 4> matrices = {{
        {1.06, -0.03, -0.03, -0.02, 1.02, 0.00, -0.01, -0.04, 1.05},   // warm
        {0.97, 0.00, 0.03, 0.00, 0.98, 0.02, 0.04, -0.02, 1.08},       // cool
        {1.00, 0.04, -0.04, 0.03, 1.04, -0.07, -0.03, 0.05, 0.98},     // green shift
        {1.10, -0.06, -0.04, -0.05, 1.08, -0.03, -0.04, -0.06, 1.10},  // saturated
    }};
    std::vector<CameraModelSpec> specs;
    for (int i = 0; i < n; ++i) {
        CameraModelSpec s;
        s.model_id = "cam" + std::to_string(i);
        s.label = i;
        s.bayer_pattern = bayers[i % 4];
        s.demosaic_kernel = i % 3;
        s.color_matrix = matrices[i % 4];
        s.noise_shape = shapes[i % 3];
        s.noise_sigma = (1.5 + 0.5 * i) / 255.0;
        s.jpeg_qf = 94 - 3 * (i % 5);
        s.jpeg_quant_scale = 0.8 + 0.35 * (i % 4);
        specs.push_back(std::move(s));
    }
    check_spec_separation(specs);
    return specs;
}

void check_spec_separation(const std::vector<CameraModelSpec>& specs) {
    for (std::size_t a = 0; a < specs.size(); ++a)
        for (std::size_t b = a + 1; b < specs.size(); ++b) {
            const auto& x = specs[a];
            const auto& y = specs[b];
            int diff = 0;
            diff += x.bayer_pattern != y.bayer_pattern;
            diff += x.demosaic_kernel != y.demosaic_kernel;
            diff += x.color_matrix != y.color_matrix;
            diff += x.noise_shape != y.noise_shape;
            diff += std::fabs(x.noise_sigma - y.noise_sigma) > 1e-12;
            diff += x.jpeg_qf != y.jpeg_qf;
            diff += std::fabs(x.jpeg_quant_scale - y.jpeg_quant_scale) > 1e-12;
            if (diff < 2)
                throw ValueError("camera specs '" + x.model_id + "' and '" + y.model_id +
                                 "' differ in fewer than 2 fields");
        }
}

namespace {

nlohmann::json spec_to_json(const CameraModelSpec& s) {
    return {{"model_id", s.model_id},
            {"label", s.label},
            {"bayer_pattern", s.bayer_pattern},
            {"demosaic_kernel", s.demosaic_kernel},
            {"color_matrix", s.color_matrix},
            {"noise_shape", s.noise_shape},
            {"noise_sigma", s.noise_sigma},
            {"jpeg_qf", s.jpeg_qf},
            {"jpeg_quant_scale", s.jpeg_quant_scale}};
}

}  // namespace

SynthResult generate_dataset(const SynthConfig& cfg) {
    namespace fs = std::filesystem;
    if (cfg.n_models < 2) throw ValueError("synth: need at least 2 camera models");
    if (cfg.devices_per_model < 2)
        throw ValueError("synth: need at least 2 devices per model (one is held out)");
    if (cfg.scenes < 1) throw ValueError("synth: need at least 1 scene");
    if (cfg.image_size < 256) throw ValueError("synth: image size must be at least 256");
    if (cfg.out_dir.empty()) throw ValueError("synth: output directory not set");

    const fs::path root(cfg.out_dir);
    const fs::path img_dir = root / "images";
    std::error_code ec;
    fs::create_directories(img_dir, ec);
    if (ec) throw IoError("synth: cannot create '" + img_dir.string() + "': " + ec.message());

    const auto specs = default_model_specs(cfg.n_models);
    std::vector<DeviceSpec> devices;
    for (int mi = 0; mi < cfg.n_models; ++mi)
        for (int di = 0; di < cfg.devices_per_model; ++di) {
            DeviceSpec d;
            d.device_id = specs[mi].model_id + "_unit" + std::to_string(di);
            d.model_id = specs[mi].model_id;
            d.prnu_seed = derive_seed(derive_seed(cfg.seed, "prnu"),
                                      {static_cast<std::uint64_t>(mi), static_cast<std::uint64_t>(di)});
            devices.push_back(std::move(d));
        }

    Manifest manifest;
    int written = 0;
    try {
        for (int si = 0; si < cfg.scenes; ++si) {
            char scene_name[16];
            std::snprintf(scene_name, sizeof scene_name, "scene%03d", si);
            SceneSpec scene{scene_name, derive_seed(derive_seed(cfg.seed, "scene"),
                                                    {static_cast<std::uint64_t>(si)})};
            const ImageU8 ideal = render_scene(scene, cfg.image_size);
            for (int mi = 0; mi < cfg.n_models; ++mi)
                for (int di = 0; di < cfg.devices_per_model; ++di) {
                    const DeviceSpec& dev = devices[static_cast<std::size_t>(mi) * cfg.devices_per_model + di];
                    const std::uint64_t shot =
                        derive_seed(cfg.seed, {static_cast<std::uint64_t>(mi),
                                               static_cast<std::uint64_t>(di),
                                               static_cast<std::uint64_t>(si)});
                    const ImageU8 shotimg = apply_pipeline(ideal, specs[mi], dev, shot);
                    const std::string fname = specs[mi].model_id + "_" + dev.device_id + "_" +
                                              scene_name + ".ppm";
                    write_ppm((img_dir / fname).string(), shotimg);
                    ++written;
                    ImageRecord rec;
                    rec.path = "images/" + fname;
                    rec.model_label = specs[mi].label;
                    rec.device_id = dev.device_id;
                    rec.scene_id = scene_name;
                    rec.width = cfg.image_size;
                    rec.height = cfg.image_size;
                    manifest.records.push_back(std::move(rec));
                }
        }

        const fs::path manifest_path = root / "manifest.csv";
        write_manifest(manifest_path.string(), manifest);

        nlohmann::json desc;
        desc["seed"] = cfg.seed;
        desc["n_models"] = cfg.n_models;
        desc["devices_per_model"] = cfg.devices_per_model;
        desc["scenes"] = cfg.scenes;
        desc["image_size"] = cfg.image_size;
        desc["models"] = nlohmann::json::array();
        for (const auto& s : specs) desc["models"].push_back(spec_to_json(s));
        desc["devices"] = nlohmann::json::array();
        for (const auto& d : devices)
            desc["devices"].push_back({{"device_id", d.device_id},
                                       {"model_id", d.model_id},
                                       {"prnu_seed", d.prnu_seed},
                                       {"prnu_strength", d.prnu_strength}});
        const fs::path desc_path = root / "dataset.json";
        std::ofstream os(desc_path);
        if (!os) throw IoError("synth: cannot write '" + desc_path.string() + "'");
        os << desc.dump(2) << "\n";

        return {manifest_path.string(), desc_path.string(), written};
    } catch (...) {
        // do not leave a half-written dataset behind
        fs::remove_all(img_dir, ec);
        fs::remove(root / "manifest.csv", ec);
        fs::remove(root / "dataset.json", ec);
        throw;
    }
}

}  // namespace remnet
