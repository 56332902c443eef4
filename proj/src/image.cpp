#include "remnet/image.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "remnet/common.hpp"

namespace remnet {

ImageU8::ImageU8(int w, int h) : width(w), height(h) {
    if (w < 1 || h < 1) throw ValueError("image: extents must be positive");
    pixels.assign(static_cast<std::size_t>(w) * h * 3, 0);
}

void write_ppm(const std::string& path, const ImageU8& img) {
    if (img.width < 1 || img.height < 1 ||
        img.pixels.size() != static_cast<std::size_t>(img.width) * img.height * 3)
        throw ValueError("write_ppm: malformed image");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("write_ppm: cannot open '" + path + "'");
    os << "P6\n" << img.width << " " << img.height << "\n255\n";
    os.write(reinterpret_cast<const char*>(img.pixels.data()),
             static_cast<std::streamsize>(img.pixels.size()));
    if (!os) throw IoError("write_ppm: write to '" + path + "' failed");
}

namespace {

// Reads one whitespace-delimited token, skipping '#' comments.
std::string ppm_token(std::istream& is) {
    std::string tok;
    int c;
    while ((c = is.get()) != EOF) {
        if (c == '#') {
            while ((c = is.get()) != EOF && c != '\n') {}
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

struct PpmHeader {
    int width, height;
};

PpmHeader read_ppm_header(std::istream& is, const std::string& path) {
    if (ppm_token(is) != "P6") throw IoError("read_ppm: '" + path + "' is not binary PPM (P6)");
    int w, h, maxval;
    try {
        w = std::stoi(ppm_token(is));
        h = std::stoi(ppm_token(is));
        maxval = std::stoi(ppm_token(is));
    } catch (const std::exception&) {
        throw IoError("read_ppm: malformed header in '" + path + "'");
    }
    if (w < 1 || h < 1 || maxval != 255)
        throw IoError("read_ppm: unsupported dimensions or maxval in '" + path + "'");
    return {w, h};
}

}  // namespace

ImageU8 read_ppm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("read_ppm: cannot open '" + path + "'");
    const PpmHeader hd = read_ppm_header(is, path);
    ImageU8 img(hd.width, hd.height);
    is.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (is.gcount() != static_cast<std::streamsize>(img.pixels.size()))
        throw IoError("read_ppm: truncated pixel data in '" + path + "'");
    return img;
}

std::pair<int, int> read_ppm_size(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("read_ppm: cannot open '" + path + "'");
    const PpmHeader hd = read_ppm_header(is, path);
    return {hd.width, hd.height};
}

Tensor image_to_float(const ImageU8& img) {
    Tensor t({img.height, img.width, 3});
    constexpr float scale = 1.0f / 255.0f;
    for (std::size_t i = 0; i < img.pixels.size(); ++i) t.data[i] = img.pixels[i] * scale;
    return t;
}

ImageU8 float_to_image(const Tensor& t) {
    if (t.shape.size() != 3 || t.shape[2] != 3)
        throw ShapeError("float_to_image: expected [H,W,3], got " + shape_str(t.shape));
    ImageU8 img(t.shape[1], t.shape[0]);
    for (std::size_t i = 0; i < t.data.size(); ++i) {
        const float v = std::min(1.0f, std::max(0.0f, t.data[i]));
        img.pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
    return img;
}

double psnr(const ImageU8& a, const ImageU8& b) {
    if (a.width != b.width || a.height != b.height)
        throw ShapeError("psnr: image dimensions differ");
    double sse = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = static_cast<double>(a.pixels[i]) - b.pixels[i];
        sse += d * d;
    }
    if (sse == 0.0) return std::numeric_limits<double>::infinity();
    const double mse = sse / static_cast<double>(a.pixels.size());
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace remnet
