#include "irisgate/image_io.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

namespace irisgate {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32_le(std::span<const std::uint8_t> b, std::size_t off) {
    if (off + 4 > b.size()) throw Error(ErrorKind::Parse, "truncated integer field");
    return static_cast<std::uint32_t>(b[off]) | (static_cast<std::uint32_t>(b[off + 1]) << 8) |
           (static_cast<std::uint32_t>(b[off + 2]) << 16) | (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

std::vector<std::uint8_t> pack_bits_lsb(std::span<const std::uint8_t> cells) {
    std::vector<std::uint8_t> out((cells.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < cells.size(); ++i)
        if (cells[i]) out[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    return out;
}

std::vector<std::uint8_t> unpack_bits_lsb(std::span<const std::uint8_t> bytes, std::size_t count) {
    if (bytes.size() * 8 < count) throw Error(ErrorKind::Parse, "truncated bit plane");
    std::vector<std::uint8_t> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = (bytes[i / 8] >> (i % 8)) & 1u;
    return out;
}

namespace {

// Reads the next whitespace-delimited PGM header token, skipping comments.
std::string next_token(const std::vector<std::uint8_t>& b, std::size_t& pos) {
    for (;;) {
        while (pos < b.size() && std::isspace(b[pos])) ++pos;
        if (pos < b.size() && b[pos] == '#') {
            while (pos < b.size() && b[pos] != '\n') ++pos;
            continue;
        }
        break;
    }
    std::string tok;
    while (pos < b.size() && !std::isspace(b[pos])) tok.push_back(static_cast<char>(b[pos++]));
    return tok;
}

}  // namespace

EyeImage read_pgm(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    std::size_t pos = 0;
    if (next_token(bytes, pos) != "P5") throw Error(ErrorKind::Parse, path.string() + ": not a P5 PGM");
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(next_token(bytes, pos));
        h = std::stoi(next_token(bytes, pos));
        maxval = std::stoi(next_token(bytes, pos));
    } catch (const std::exception&) {
        throw Error(ErrorKind::Parse, path.string() + ": malformed PGM header");
    }
    if (w <= 0 || h <= 0 || maxval != 255)
        throw Error(ErrorKind::Parse, path.string() + ": unsupported PGM dimensions or maxval");
    ++pos;  // single whitespace after maxval
    const std::size_t n = static_cast<std::size_t>(w) * h;
    if (bytes.size() < pos + n) throw Error(ErrorKind::Parse, path.string() + ": truncated PGM data");
    EyeImage img;
    img.width = w;
    img.height = h;
    img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                      bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
    return img;
}

void write_pgm(const std::filesystem::path& path, const EyeImage& image) {
    const std::string header =
        "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), image.pixels.begin(), image.pixels.end());
    write_file_bytes(path, out);
}

SegmentationMasks read_masks(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    const std::span<const std::uint8_t> b(bytes);
    if (b.size() < 13 || b[0] != 'I' || b[1] != 'G' || b[2] != 'M' || b[3] != 'K')
        throw Error(ErrorKind::Parse, path.string() + ": bad mask magic");
    if (b[4] != kMaskFormatVersion)
        throw Error(ErrorKind::Parse, path.string() + ": unsupported mask version " + std::to_string(b[4]));
    const auto w = get_u32_le(b, 5);
    const auto h = get_u32_le(b, 9);
    if (w == 0 || h == 0 || w > (1u << 16) || h > (1u << 16))
        throw Error(ErrorKind::Parse, path.string() + ": bad mask dimensions");
    const std::size_t n = static_cast<std::size_t>(w) * h;
    const std::size_t plane = (n + 7) / 8;
    if (b.size() != 13 + 4 * plane) throw Error(ErrorKind::Parse, path.string() + ": mask size mismatch");

    SegmentationMasks m;
    Mask* planes[] = {&m.pupil, &m.iris, &m.eyeball, &m.eyelash};
    for (int p = 0; p < 4; ++p) {
        *planes[p] = Mask(static_cast<int>(w), static_cast<int>(h));
        planes[p]->cells() = unpack_bits_lsb(b.subspan(13 + p * plane, plane), n);
    }
    return m;
}

void write_masks(const std::filesystem::path& path, const SegmentationMasks& m) {
    if (!m.same_dims()) throw Error(ErrorKind::InvalidInput, "mask layers differ in size");
    std::vector<std::uint8_t> out = {'I', 'G', 'M', 'K', kMaskFormatVersion};
    put_u32_le(out, static_cast<std::uint32_t>(m.pupil.width()));
    put_u32_le(out, static_cast<std::uint32_t>(m.pupil.height()));
    for (const Mask* p : {&m.pupil, &m.iris, &m.eyeball, &m.eyelash}) {
        const auto packed = pack_bits_lsb(p->cells());
        out.insert(out.end(), packed.begin(), packed.end());
    }
    write_file_bytes(path, out);
}

}  // namespace irisgate
