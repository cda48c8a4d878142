#include "irisgate/iris_encoding.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "irisgate/image_io.hpp"

namespace irisgate::encoding {

double PolarIris::valid_fraction() const {
    if (valid.empty()) return 0.0;
    return static_cast<double>(std::count(valid.begin(), valid.end(), std::uint8_t{1})) /
           static_cast<double>(valid.size());
}

int GaborParams::window() const {
    return half_window > 0 ? half_window : static_cast<int>(std::ceil(sigma));
}

void GaborParams::check() const {
    if (radial_res <= 0 || angular_res <= 0 || radial_pool <= 0 || radial_res % radial_pool != 0)
        throw Error(ErrorKind::InvalidInput, "gabor: radial_res must be a positive multiple of radial_pool");
    if (!(wavelength > 0.0) || !(sigma > 0.0) || magnitude_floor_rel < 0.0)
        throw Error(ErrorKind::InvalidInput, "gabor: wavelength and sigma must be positive");
    if (2 * window() + 1 > angular_res)
        throw Error(ErrorKind::InvalidInput, "gabor: filter window wider than the angular grid");
}

PolarIris normalize(const EyeImage& image, const SegmentationMasks& masks, int radial_res, int angular_res) {
    return normalize(image, masks, metrics::iris_geometry(masks), radial_res, angular_res);
}

PolarIris normalize(const EyeImage& image, const SegmentationMasks& masks, const metrics::IrisGeometry& g,
                    int radial_res, int angular_res) {
    if (radial_res <= 0 || angular_res <= 0) throw Error(ErrorKind::InvalidInput, "normalize: bad resolution");
    if (!(g.pupil.r > 0.0) || !(g.iris.r > g.pupil.r))
        throw Error(ErrorKind::Undefined, "normalize: degenerate pupil/iris circles");
    const int w = image.width, h = image.height;
    PolarIris polar(radial_res, angular_res);
    for (int j = 0; j < angular_res; ++j) {
        const double phi = 2.0 * std::numbers::pi * j / angular_res;
        const double c = std::cos(phi), s = std::sin(phi);
        const double px = g.pupil.cx + g.pupil.r * c, py = g.pupil.cy + g.pupil.r * s;
        const double ix = g.iris.cx + g.iris.r * c, iy = g.iris.cy + g.iris.r * s;
        for (int i = 0; i < radial_res; ++i) {
            const double rho = (i + 0.5) / radial_res;
            const double x = (1.0 - rho) * px + rho * ix;
            const double y = (1.0 - rho) * py + rho * iy;
            const auto idx = polar.index(i, j);
            const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
            if (x0 < 0 || y0 < 0 || x0 + 1 >= w || y0 + 1 >= h) continue;
            const double fx = x - x0, fy = y - y0;
            polar.intensities[idx] = (1 - fy) * ((1 - fx) * image.at(x0, y0) + fx * image.at(x0 + 1, y0)) +
                                     fy * ((1 - fx) * image.at(x0, y0 + 1) + fx * image.at(x0 + 1, y0 + 1));
            const int nx = static_cast<int>(std::lround(x)), ny = static_cast<int>(std::lround(y));
            const bool ok = masks.iris.at(nx, ny) && !masks.pupil.at(nx, ny) && masks.eyeball.at(nx, ny) &&
                            !masks.eyelash.at(nx, ny);
            polar.valid[idx] = ok ? 1 : 0;
        }
    }
    return polar;
}

IrisCode encode(const PolarIris& polar, const GaborParams& params) {
    params.check();
    if (polar.radial_res != params.radial_res || polar.angular_res != params.angular_res)
        throw Error(ErrorKind::InvalidInput, "encode: polar grid does not match filter resolution");

    double sum = 0.0, sum2 = 0.0;
    std::size_t n_valid = 0;
    for (std::size_t k = 0; k < polar.valid.size(); ++k)
        if (polar.valid[k]) {
            sum += polar.intensities[k];
            sum2 += polar.intensities[k] * polar.intensities[k];
            ++n_valid;
        }
    if (n_valid == 0) throw Error(ErrorKind::EmptyCode, "encode: no valid polar samples");
    const double mean = sum / static_cast<double>(n_valid);
    const double var = std::max(0.0, sum2 / static_cast<double>(n_valid) - mean * mean);
    const double floor = params.magnitude_floor_rel * std::sqrt(var);

    const int W = params.window();
    const int n = params.angular_res;
    std::vector<double> kre(2 * W + 1), kim(2 * W + 1);
    double env_sum = 0.0, cos_sum = 0.0;
    for (int t = -W; t <= W; ++t) {
        const double e = std::exp(-0.5 * t * t / (params.sigma * params.sigma));
        const double a = 2.0 * std::numbers::pi * t / params.wavelength;
        kre[t + W] = e * std::cos(a);
        kim[t + W] = e * std::sin(a);
        env_sum += e;
        cos_sum += e * std::cos(a);
    }
    // Zero-DC real part.
    const double dc = cos_sum / env_sum;
    for (int t = -W; t <= W; ++t)
        kre[t + W] -= dc * std::exp(-0.5 * t * t / (params.sigma * params.sigma));

    IrisCode code(params.radial_code(), n);
    code.params = params;
    std::vector<double> signal(n);
    std::vector<std::uint8_t> ok(n);
    for (int row = 0; row < code.radial_code; ++row) {
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            bool all = true;
            for (int p = 0; p < params.radial_pool; ++p) {
                const int i = row * params.radial_pool + p;
                if (!polar.is_valid(i, j)) {
                    all = false;
                    break;
                }
                acc += polar.intensity(i, j) - mean;
            }
            ok[j] = all ? 1 : 0;
            signal[j] = all ? acc / params.radial_pool : 0.0;
        }
        for (int j = 0; j < n; ++j) {
            double re = 0.0, im = 0.0;
            bool window_ok = true;
            for (int t = -W; t <= W; ++t) {
                const int jj = ((j + t) % n + n) % n;
                if (!ok[jj]) window_ok = false;
                re += kre[t + W] * signal[jj];
                im += kim[t + W] * signal[jj];
            }
            const bool keep = window_ok && std::hypot(re, im) > floor;
            const auto i0 = code.index(0, row, j), i1 = code.index(1, row, j);
            code.bits[i0] = re > 0.0 ? 1 : 0;
            code.bits[i1] = im > 0.0 ? 1 : 0;
            code.mask_bits[i0] = code.mask_bits[i1] = keep ? 1 : 0;
        }
    }
    return code;
}

std::size_t code_length(const IrisCode& code) {
    return static_cast<std::size_t>(std::count(code.mask_bits.begin(), code.mask_bits.end(), std::uint8_t{1}));
}

namespace {

template <typename T>
void rotate_rows(const std::vector<T>& in, std::vector<T>& out, int rows, int cols, int shift) {
    const int s = ((shift % cols) + cols) % cols;
    for (int r = 0; r < rows; ++r)
        for (int j = 0; j < cols; ++j)
            out[static_cast<std::size_t>(r) * cols + (j + s) % cols] = in[static_cast<std::size_t>(r) * cols + j];
}

}  // namespace

PolarIris rotate_angular(const PolarIris& polar, int shift) {
    PolarIris out(polar.radial_res, polar.angular_res);
    rotate_rows(polar.intensities, out.intensities, polar.radial_res, polar.angular_res, shift);
    rotate_rows(polar.valid, out.valid, polar.radial_res, polar.angular_res, shift);
    return out;
}

IrisCode rotate_angular(const IrisCode& code, int shift) {
    IrisCode out(code.radial_code, code.angular_res);
    out.params = code.params;
    rotate_rows(code.bits, out.bits, 2 * code.radial_code, code.angular_res, shift);
    rotate_rows(code.mask_bits, out.mask_bits, 2 * code.radial_code, code.angular_res, shift);
    return out;
}

std::vector<std::uint8_t> serialize_code(const IrisCode& code) {
    std::vector<std::uint8_t> out = {'I', 'R', 'C', 'D', kCodeFormatVersion};
    put_u32_le(out, static_cast<std::uint32_t>(code.radial_code));
    put_u32_le(out, static_cast<std::uint32_t>(code.angular_res));
    for (const auto* plane : {&code.bits, &code.mask_bits}) {
        const auto packed = pack_bits_lsb(*plane);
        out.insert(out.end(), packed.begin(), packed.end());
    }
    return out;
}

IrisCode deserialize_code(const std::vector<std::uint8_t>& bytes) {
    const std::span<const std::uint8_t> b(bytes);
    if (b.size() < 13 || b[0] != 'I' || b[1] != 'R' || b[2] != 'C' || b[3] != 'D')
        throw Error(ErrorKind::Parse, "code file: bad magic");
    if (b[4] != kCodeFormatVersion) throw Error(ErrorKind::Parse, "code file: unsupported version");
    const auto rows = get_u32_le(b, 5), cols = get_u32_le(b, 9);
    if (rows == 0 || cols == 0 || rows > 4096 || cols > 65536) throw Error(ErrorKind::Parse, "code file: bad dims");
    const std::size_t n = static_cast<std::size_t>(2) * rows * cols;
    const std::size_t plane = (n + 7) / 8;
    if (b.size() != 13 + 2 * plane) throw Error(ErrorKind::Parse, "code file: size mismatch");
    IrisCode code(static_cast<int>(rows), static_cast<int>(cols));
    code.params.angular_res = static_cast<int>(cols);
    code.params.radial_res = static_cast<int>(rows) * code.params.radial_pool;
    code.bits = unpack_bits_lsb(b.subspan(13, plane), n);
    code.mask_bits = unpack_bits_lsb(b.subspan(13 + plane, plane), n);
    return code;
}

void write_code(const std::filesystem::path& path, const IrisCode& code) {
    write_file_bytes(path, serialize_code(code));
}

IrisCode read_code(const std::filesystem::path& path) { return deserialize_code(read_file_bytes(path)); }

}  // namespace irisgate::encoding
