#include "remnet/augment.hpp"

#include <cmath>

#include "remnet/common.hpp"
#include "remnet/jpeg_core.hpp"

namespace remnet {

namespace {

bool in_set(double v, std::initializer_list<double> legal) {
    for (double x : legal)
        if (std::fabs(v - x) < 1e-9) return true;
    return false;
}

std::string factor_tag(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    std::string s(buf);
    for (auto& ch : s)
        if (ch == '.') ch = 'p';
    return s;
}

// Cubic convolution weight, a = -0.5.
double cubic_weight(double t) {
    t = std::fabs(t);
    if (t <= 1.0) return (1.5 * t - 2.5) * t * t + 1.0;
    if (t < 2.0) return ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0;
    return 0.0;
}

// Resamples each row of a plane from length `in_n` to `out_n`.
std::vector<double> resample_rows(const std::vector<double>& src, int rows, int in_n, int out_n) {
    std::vector<double> dst(static_cast<std::size_t>(rows) * out_n);
    const double step = static_cast<double>(in_n) / out_n;
    for (int j = 0; j < out_n; ++j) {
        const double center = (j + 0.5) * step - 0.5;
        const int base = static_cast<int>(std::floor(center)) - 1;
        double w[4];
        for (int k = 0; k < 4; ++k) w[k] = cubic_weight(center - (base + k));
        const double wsum = w[0] + w[1] + w[2] + w[3];
        for (int k = 0; k < 4; ++k) w[k] /= wsum;
        for (int r = 0; r < rows; ++r) {
            const double* s = src.data() + static_cast<std::size_t>(r) * in_n;
            double acc = 0.0;
            for (int k = 0; k < 4; ++k) {
                const int idx = std::min(in_n - 1, std::max(0, base + k));
                acc += w[k] * s[idx];
            }
            dst[static_cast<std::size_t>(r) * out_n + j] = acc;
        }
    }
    return dst;
}

std::vector<double> transpose(const std::vector<double>& src, int rows, int cols) {
    std::vector<double> dst(src.size());
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            dst[static_cast<std::size_t>(c) * rows + r] = src[static_cast<std::size_t>(r) * cols + c];
    return dst;
}

}  // namespace

void AugmentationSpec::validate() const {
    switch (kind) {
        case Kind::none:
            return;
        case Kind::jpeg:
            if (!in_set(factor, {70.0, 80.0, 90.0}))
                throw ValueError("augment: jpeg quality factor must be 70, 80, or 90");
            return;
        case Kind::rescale:
            if (!in_set(factor, {0.5, 0.8, 1.5, 2.0}))
                throw ValueError("augment: rescale factor must be 0.5, 0.8, 1.5, or 2.0");
            return;
        case Kind::gamma:
            if (!in_set(factor, {0.8, 1.2}))
                throw ValueError("augment: gamma must be 0.8 or 1.2");
            return;
    }
    throw ValueError("augment: unknown kind");
}

std::string AugmentationSpec::tag() const {
    switch (kind) {
        case Kind::none:
            return "none";
        case Kind::jpeg:
            return "jpeg_" + factor_tag(factor);
        case Kind::rescale:
            return "rescale_" + factor_tag(factor);
        case Kind::gamma:
            return "gamma_" + factor_tag(factor);
    }
    return "unknown";
}

AugmentationSpec AugmentationSpec::parse(const std::string& text) {
    AugmentationSpec spec;
    if (text == "none") return spec;
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw ValueError("augment: expected 'none' or '<kind>:<factor>', got '" + text + "'");
    const std::string kind = text.substr(0, colon);
    try {
        spec.factor = std::stod(text.substr(colon + 1));
    } catch (const std::exception&) {
        throw ValueError("augment: bad factor in '" + text + "'");
    }
    if (kind == "jpeg")
        spec.kind = Kind::jpeg;
    else if (kind == "rescale")
        spec.kind = Kind::rescale;
    else if (kind == "gamma")
        spec.kind = Kind::gamma;
    else
        throw ValueError("augment: unknown kind '" + kind + "'");
    spec.validate();
    return spec;
}

std::vector<AugmentationSpec> nine_fold_specs() {
    std::vector<AugmentationSpec> v;
    for (double q : {70.0, 80.0, 90.0}) v.push_back({AugmentationSpec::Kind::jpeg, q});
    for (double s : {0.5, 0.8, 1.5, 2.0}) v.push_back({AugmentationSpec::Kind::rescale, s});
    for (double g : {0.8, 1.2}) v.push_back({AugmentationSpec::Kind::gamma, g});
    return v;
}

ImageU8 augment(const ImageU8& img, const AugmentationSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case AugmentationSpec::Kind::none:
            return img;
        case AugmentationSpec::Kind::jpeg:
            return jpeg_round_trip(img, static_cast<int>(std::lround(spec.factor)));
        case AugmentationSpec::Kind::rescale:
            return rescale_bicubic(img, spec.factor);
        case AugmentationSpec::Kind::gamma:
            return gamma_correct(img, spec.factor);
    }
    throw ValueError("augment: unknown kind");
}

ImageU8 rescale_bicubic(const ImageU8& img, double factor) {
    if (factor <= 0.0) throw ValueError("rescale: factor must be positive");
    const int ow = std::max(1, static_cast<int>(std::lround(img.width * factor)));
    const int oh = std::max(1, static_cast<int>(std::lround(img.height * factor)));
    ImageU8 out(ow, oh);
    const std::size_t in_n = static_cast<std::size_t>(img.width) * img.height;
    std::vector<double> plane(in_n);
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < in_n; ++i) plane[i] = img.pixels[i * 3 + c];
        // horizontal pass, then vertical via transposes
        std::vector<double> h = resample_rows(plane, img.height, img.width, ow);
        std::vector<double> ht = transpose(h, img.height, ow);
        std::vector<double> vt = resample_rows(ht, ow, img.height, oh);
        std::vector<double> v = transpose(vt, ow, oh);
        for (std::size_t i = 0; i < static_cast<std::size_t>(ow) * oh; ++i)
            out.pixels[i * 3 + c] =
                static_cast<std::uint8_t>(std::lround(std::min(255.0, std::max(0.0, v[i]))));
    }
    return out;
}

ImageU8 gamma_correct(const ImageU8& img, double g) {
    if (g <= 0.0) throw ValueError("gamma: exponent must be positive");
    std::uint8_t lut[256];
    for (int i = 0; i < 256; ++i) {
        const double v = std::pow(i / 255.0, g);
        lut[i] = static_cast<std::uint8_t>(std::lround(std::min(1.0, std::max(0.0, v)) * 255.0));
    }
    ImageU8 out(img.width, img.height);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) out.pixels[i] = lut[img.pixels[i]];
    return out;
}

}  // namespace remnet
