#include "irisgate/core_model.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "irisgate/csv.hpp"
#include "irisgate/image_io.hpp"

namespace irisgate {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Io: return "Io";
        case ErrorKind::Parse: return "Parse";
        case ErrorKind::DuplicateId: return "DuplicateId";
        case ErrorKind::Undefined: return "Undefined";
        case ErrorKind::EmptyCode: return "EmptyCode";
        case ErrorKind::EmptyPairing: return "EmptyPairing";
        case ErrorKind::EmptyClass: return "EmptyClass";
        case ErrorKind::Degenerate: return "Degenerate";
        case ErrorKind::InvalidInput: return "InvalidInput";
        case ErrorKind::Stage: return "Stage";
    }
    return "?";
}

std::size_t Mask::count() const {
    return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
}

namespace {

template <typename Op>
Mask combine(const Mask& a, const Mask& b, Op op) {
    if (a.width() != b.width() || a.height() != b.height())
        throw Error(ErrorKind::InvalidInput, "mask dimensions differ");
    Mask out(a.width(), a.height());
    auto& dst = out.cells();
    const auto& x = a.cells();
    const auto& y = b.cells();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = op(x[i] != 0, y[i] != 0) ? 1 : 0;
    return out;
}

}  // namespace

Mask mask_and(const Mask& a, const Mask& b) {
    return combine(a, b, [](bool p, bool q) { return p && q; });
}
Mask mask_or(const Mask& a, const Mask& b) {
    return combine(a, b, [](bool p, bool q) { return p || q; });
}
Mask mask_and_not(const Mask& a, const Mask& b) {
    return combine(a, b, [](bool p, bool q) { return p && !q; });
}

bool SegmentationMasks::same_dims() const {
    auto same = [&](const Mask& m) {
        return m.width() == pupil.width() && m.height() == pupil.height();
    };
    return same(iris) && same(eyeball) && same(eyelash);
}

std::string_view to_string(EyeSide v) {
    switch (v) {
        case EyeSide::Left: return "left";
        case EyeSide::Right: return "right";
        default: return "unknown";
    }
}
std::string_view to_string(LidState v) {
    switch (v) {
        case LidState::Squint: return "squint";
        case LidState::Neutral: return "neutral";
        case LidState::Wide: return "wide";
        default: return "unknown";
    }
}
std::string_view to_string(DilationState v) {
    switch (v) {
        case DilationState::Dilated: return "dilated";
        case DilationState::Undilated: return "undilated";
        default: return "unknown";
    }
}

EyeSide parse_eye_side(std::string_view t) {
    if (t == "left") return EyeSide::Left;
    if (t == "right") return EyeSide::Right;
    return EyeSide::Unknown;
}
LidState parse_lid_state(std::string_view t) {
    if (t == "squint") return LidState::Squint;
    if (t == "neutral") return LidState::Neutral;
    if (t == "wide") return LidState::Wide;
    return LidState::Unknown;
}
DilationState parse_dilation_state(std::string_view t) {
    if (t == "dilated") return DilationState::Dilated;
    if (t == "undilated") return DilationState::Undilated;
    return DilationState::Unknown;
}

std::string Condition::name() const {
    return std::string(to_string(lid)) + "-" + std::string(to_string(dilation));
}

std::optional<Condition> parse_condition(std::string_view token) {
    const auto dash = token.find('-');
    if (dash == std::string_view::npos) return std::nullopt;
    Condition c{parse_lid_state(token.substr(0, dash)), parse_dilation_state(token.substr(dash + 1))};
    if (c.lid == LidState::Unknown || c.dilation == DilationState::Unknown) return std::nullopt;
    return c;
}

std::vector<Condition> all_conditions() {
    std::vector<Condition> out;
    for (auto d : kDilationStates)
        for (auto l : kLidStates) out.push_back({l, d});
    return out;
}

std::string CaptureRecord::eye_key() const {
    return identity_id + "/" + std::string(to_string(eye_side));
}

std::size_t Manifest::identity_count() const {
    std::set<std::string> ids;
    for (const auto& r : records) ids.insert(r.identity_id);
    return ids.size();
}

const CaptureRecord* Manifest::find(std::string_view capture_id) const {
    for (const auto& r : records)
        if (r.capture_id == capture_id) return &r;
    return nullptr;
}

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open manifest: " + path.string());

    Manifest m;
    m.base_dir = path.parent_path();

    std::string line;
    std::vector<std::string> f;
    if (!std::getline(in, line)) throw Error(ErrorKind::Parse, "manifest is empty: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
    if (line != kManifestHeader)
        throw Error(ErrorKind::Parse, "manifest row 1: unexpected header '" + line + "'");

    std::unordered_set<std::string> seen;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        auto fail = [&](const std::string& why) {
            throw Error(ErrorKind::Parse, "manifest row " + std::to_string(row) + ": " + why);
        };
        if (!csv::split_line(line, f)) fail("unterminated quote");
        if (f.size() != 7) fail("expected 7 fields, got " + std::to_string(f.size()));
        CaptureRecord r;
        r.capture_id = f[0];
        r.identity_id = f[1];
        if (r.capture_id.empty()) fail("empty capture_id");
        if (r.identity_id.empty()) fail("empty identity_id");
        r.eye_side = parse_eye_side(f[2]);
        r.lid_state = parse_lid_state(f[3]);
        r.dilation_state = parse_dilation_state(f[4]);
        if (r.eye_side == EyeSide::Unknown) fail("bad eye_side '" + f[2] + "'");
        if (r.lid_state == LidState::Unknown) fail("bad lid_state '" + f[3] + "'");
        if (r.dilation_state == DilationState::Unknown) fail("bad dilation_state '" + f[4] + "'");
        r.image_path = m.base_dir / f[5];
        r.mask_path = m.base_dir / f[6];
        if (!seen.insert(r.capture_id).second)
            throw Error(ErrorKind::DuplicateId, "manifest row " + std::to_string(row) +
                                                    ": duplicate capture_id '" + r.capture_id + "'");
        m.records.push_back(std::move(r));
    }
    return m;
}

void write_manifest(const std::filesystem::path& path, const std::vector<CaptureRecord>& records) {
    const auto base = path.parent_path();
    std::ostringstream out;
    out << kManifestHeader << '\n';
    auto rel = [&](const std::filesystem::path& p) {
        if (p.empty()) return std::string();
        if (p.is_relative() && base.empty()) return p.generic_string();
        return std::filesystem::proximate(p, base.empty() ? std::filesystem::path(".") : base).generic_string();
    };
    for (const auto& r : records) {
        out << csv::escape(r.capture_id) << ',' << csv::escape(r.identity_id) << ','
            << to_string(r.eye_side) << ',' << to_string(r.lid_state) << ','
            << to_string(r.dilation_state) << ',' << csv::escape(rel(r.image_path)) << ','
            << csv::escape(rel(r.mask_path)) << '\n';
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot write manifest: " + path.string());
    f << out.str();
    if (!f) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

void load_pixels(CaptureRecord& record) {
    if (!record.image) record.image = read_pgm(record.image_path);
    if (!record.masks) record.masks = read_masks(record.mask_path);
}

RecordCheck validate_record(const CaptureRecord& r) {
    RecordCheck check;
    auto defect = [&](std::string what) {
        check.ok = false;
        check.defects.push_back(std::move(what));
    };
    if (r.capture_id.empty()) defect("label defect: empty capture_id");
    if (r.identity_id.empty()) defect("label defect: empty identity_id");
    if (r.eye_side == EyeSide::Unknown) defect("label defect: eye_side");
    if (r.lid_state == LidState::Unknown) defect("label defect: lid_state");
    if (r.dilation_state == DilationState::Unknown) defect("label defect: dilation_state");

    if (r.image) {
        const auto& img = *r.image;
        if (img.width <= 0 || img.height <= 0)
            defect("image defect: non-positive dimensions");
        else if (img.pixels.size() != static_cast<std::size_t>(img.width) * img.height)
            defect("image defect: pixel count != width*height");
    }
    if (r.masks && r.image) {
        const auto check_dims = [&](const Mask& m, std::string_view name) {
            if (m.width() != r.image->width || m.height() != r.image->height)
                defect("dimension mismatch: " + std::string(name) + " mask " +
                       std::to_string(m.width()) + "x" + std::to_string(m.height()) + " vs image " +
                       std::to_string(r.image->width) + "x" + std::to_string(r.image->height));
        };
        check_dims(r.masks->pupil, "pupil");
        check_dims(r.masks->iris, "iris");
        check_dims(r.masks->eyeball, "eyeball");
        check_dims(r.masks->eyelash, "eyelash");
    } else if (r.masks && !r.masks->same_dims()) {
        defect("dimension mismatch: mask layers differ");
    }
    return check;
}

}  // namespace irisgate
