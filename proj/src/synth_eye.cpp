#include "irisgate/synth_eye.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "irisgate/csv.hpp"
#include "irisgate/image_io.hpp"
#include "irisgate/parallel.hpp"
#include "irisgate/rng.hpp"

namespace irisgate::synth {

namespace {

constexpr double kPi = std::numbers::pi;

// Globe half-axes as multiples of the iris radius.
constexpr double kGlobeHalfWidth = 2.1;
constexpr double kGlobeHalfHeight = 1.45;

constexpr double kPupilLevel = 22.0;
constexpr double kIrisLevel = 105.0;
constexpr double kIrisContrast = 55.0;
constexpr double kScleraLevel = 195.0;
constexpr double kSkinLevel = 150.0;
constexpr double kLidLevel = 138.0;
constexpr double kLashLevel = 30.0;

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

std::vector<double> gaussian_kernel(double sigma) {
    const int half = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * half + 1);
    double sum = 0.0;
    for (int i = -half; i <= half; ++i) {
        k[i + half] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += k[i + half];
    }
    for (auto& v : k) v /= sum;
    return k;
}

// Separable Gaussian with clamp-to-edge borders.
void blur(std::vector<double>& img, int w, int h, double sigma) {
    if (sigma <= 0.0) return;
    const auto k = gaussian_kernel(sigma);
    const int half = static_cast<int>(k.size() / 2);
    std::vector<double> tmp(img.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -half; i <= half; ++i) {
                const int xx = std::clamp(x + i, 0, w - 1);
                acc += k[i + half] * img[static_cast<std::size_t>(y) * w + xx];
            }
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -half; i <= half; ++i) {
                const int yy = std::clamp(y + i, 0, h - 1);
                acc += k[i + half] * tmp[static_cast<std::size_t>(yy) * w + x];
            }
            img[static_cast<std::size_t>(y) * w + x] = acc;
        }
}

}  // namespace

IrisTexture::IrisTexture(std::uint64_t seed, int octaves, int base_angular, int base_radial, double persistence) {
    Rng rng(derive_seed(seed, 0x7E47u));
    double amp = 1.0, total = 0.0;
    for (int o = 0; o < octaves; ++o) {
        Octave oct;
        oct.angular_cells = base_angular << o;
        oct.radial_cells = base_radial << o;
        oct.amplitude = amp;
        oct.lattice.resize(static_cast<std::size_t>(oct.radial_cells + 1) * oct.angular_cells);
        for (auto& v : oct.lattice) v = static_cast<float>(rng.uniform(-1.0, 1.0));
        total += amp;
        amp *= persistence;
        octaves_.push_back(std::move(oct));
    }
    norm_ = total > 0.0 ? 1.0 / total : 1.0;
}

double IrisTexture::sample(double theta01, double rho) const {
    theta01 -= std::floor(theta01);
    rho = std::clamp(rho, 0.0, 1.0);
    double acc = 0.0;
    for (const auto& o : octaves_) {
        const double a = theta01 * o.angular_cells;
        const double r = rho * o.radial_cells;
        int a0 = static_cast<int>(std::floor(a));
        int r0 = std::min(static_cast<int>(std::floor(r)), o.radial_cells - 1);
        const double fa = smooth(a - a0), fr = smooth(r - r0);
        a0 %= o.angular_cells;
        const int a1 = (a0 + 1) % o.angular_cells;
        auto at = [&](int ri, int ai) {
            return static_cast<double>(o.lattice[static_cast<std::size_t>(ri) * o.angular_cells + ai]);
        };
        const double top = at(r0, a0) * (1 - fa) + at(r0, a1) * fa;
        const double bot = at(r0 + 1, a0) * (1 - fa) + at(r0 + 1, a1) * fa;
        acc += o.amplitude * (top * (1 - fr) + bot * fr);
    }
    return acc * norm_;
}

IrisIdentity generate_identity(std::uint64_t seed, const TextureConfig& cfg, std::string identity_id) {
    IrisIdentity id;
    if (identity_id.empty()) {
        char buf[24];
        std::snprintf(buf, sizeof buf, "I%016llx", static_cast<unsigned long long>(seed));
        identity_id = buf;
    }
    id.identity_id = std::move(identity_id);
    id.texture_seed = seed;
    Rng rng(derive_seed(seed, 0x12AD));
    id.iris_radius = rng.uniform(cfg.radius_min, cfg.radius_max);
    const double persistence = cfg.persistence_spread > 0.0
                                   ? rng.uniform(cfg.persistence - cfg.persistence_spread,
                                                 cfg.persistence + cfg.persistence_spread)
                                   : cfg.persistence;
    id.texture = IrisTexture(seed, cfg.octaves, cfg.base_angular, cfg.base_radial, persistence);
    return id;
}

void CaptureParams::check(double iris_radius) const {
    if (!(pupil_radius > 0.0 && pupil_radius < iris_radius))
        throw Error(ErrorKind::InvalidInput, "capture params: need 0 < pupil_radius < iris_radius");
    if (blur_sigma < 0.0 || noise_sigma < 0.0)
        throw Error(ErrorKind::InvalidInput, "capture params: negative blur or noise sigma");
    if (width <= 0 || height <= 0) throw Error(ErrorKind::InvalidInput, "capture params: bad image size");
    if (!(eyelash_mask_recall >= 0.0 && eyelash_mask_recall <= 1.0))
        throw Error(ErrorKind::InvalidInput, "capture params: eyelash_mask_recall outside [0,1]");
    if (lid_clutter_amplitude < 0.0 || lid_clutter_width <= 0.0)
        throw Error(ErrorKind::InvalidInput, "capture params: bad lid clutter");
    if (lid_shadow_width <= 0.0) throw Error(ErrorKind::InvalidInput, "capture params: lid_shadow_width <= 0");
}

Rendered render_capture(const IrisIdentity& identity, const CaptureParams& p) {
    const double R = identity.iris_radius;
    p.check(R);
    const int w = p.width, h = p.height;
    const double ex = 0.5 * (w - 1) + p.gaze_dx;
    const double ey = 0.5 * (h - 1) + p.gaze_dy;
    const double lid_top = ey - p.upper_lid_height;
    const double lid_bottom = ey + p.lower_lid_depth;
    const double ga = kGlobeHalfWidth * R, gb = kGlobeHalfHeight * R;
    const double k = p.deformation == DeformationMode::Nonlinear ? p.deformation_k : 0.0;

    Rendered out;
    out.masks.pupil = Mask(w, h);
    out.masks.iris = Mask(w, h);
    out.masks.eyeball = Mask(w, h);
    out.masks.eyelash = Mask(w, h);
    std::vector<double> img(static_cast<std::size_t>(w) * h, kSkinLevel);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            const double dx = x - ex, dy = y - ey;
            const double d = std::hypot(dx, dy);
            const bool lidded = y < lid_top || y > lid_bottom;
            const bool globe = (dx / ga) * (dx / ga) + (dy / gb) * (dy / gb) <= 1.0;
            if (d <= p.pupil_radius) out.masks.pupil.set(x, y);
            if (lidded) {
                img[idx] = globe ? kLidLevel : kSkinLevel;
                continue;
            }
            if (!globe) continue;
            out.masks.eyeball.set(x, y);
            if (d <= p.pupil_radius) {
                img[idx] = kPupilLevel;
            } else if (d <= R) {
                out.masks.iris.set(x, y);
                double rho = (d - p.pupil_radius) / (R - p.pupil_radius);
                if (k != 0.0) rho += k * rho * (1.0 - rho);
                double theta = std::atan2(dy, dx) / (2.0 * kPi);
                img[idx] = kIrisLevel + kIrisContrast * identity.texture.sample(theta, rho);
            } else {
                img[idx] = kScleraLevel;
            }
        }
    }

    Rng rng(p.noise_seed);
    if (p.eyelash_count > 0 && p.eyelash_length > 0.0) {
        for (int i = 0; i < p.eyelash_count; ++i) {
            const double x0 = ex + rng.uniform(-0.9, 0.9) * R;
            const double slant = rng.uniform(-0.35, 0.35);
            const double len = p.eyelash_length * rng.uniform(0.6, 1.0);
            const bool segmented = rng.uniform() < p.eyelash_mask_recall;
            const int steps = static_cast<int>(std::ceil(len)) + 1;
            for (int s = 0; s < steps; ++s) {
                const double t = len * s / std::max(1, steps - 1);
                const int px = static_cast<int>(std::lround(x0 + slant * t));
                const int py = static_cast<int>(std::ceil(lid_top)) + static_cast<int>(std::lround(t));
                for (int ox = 0; ox <= 1; ++ox) {
                    const int qx = px + ox;
                    if (qx < 0 || qx >= w || py < 0 || py >= h) continue;
                    if (!out.masks.eyeball.at(qx, py)) continue;
                    if (segmented) out.masks.eyelash.set(qx, py);
                    img[static_cast<std::size_t>(py) * w + qx] = kLashLevel;
                }
            }
        }
    }

    if (p.lid_shadow_depth > 0.0) {
        for (int y = 0; y < h; ++y) {
            const double below = y - lid_top;
            if (below < 0.0) continue;
            const double f = 1.0 - p.lid_shadow_depth * std::exp(-below / p.lid_shadow_width);
            if (f >= 0.9999) break;
            for (int x = 0; x < w; ++x)
                if (out.masks.eyeball.at(x, y)) img[static_cast<std::size_t>(y) * w + x] *= f;
        }
    }

    if (p.lid_clutter_amplitude > 0.0) {
        const IrisTexture clutter(derive_seed(p.noise_seed, 0xC1u), 3, 24, 18, 0.7);
        for (int y = 0; y < h; ++y) {
            const double edge = std::min(y - lid_top, lid_bottom - y);
            if (edge < 0.0) continue;
            const double a = p.lid_clutter_amplitude * std::exp(-edge / p.lid_clutter_width);
            if (a < 1e-3) continue;
            for (int x = 0; x < w; ++x)
                if (out.masks.eyeball.at(x, y))
                    img[static_cast<std::size_t>(y) * w + x] +=
                        a * clutter.sample(static_cast<double>(x) / w, static_cast<double>(y) / h);
        }
    }

    blur(img, w, h, p.blur_sigma);

    out.image = EyeImage(w, h);
    for (std::size_t i = 0; i < img.size(); ++i) {
        double v = img[i];
        if (p.noise_sigma > 0.0) v += p.noise_sigma * rng.normal();
        out.image.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
    return out;
}

void CohortConfig::check() const {
    auto range_ok = [](const Range& r) { return r.lo <= r.hi; };
    if (identity_count <= 0) throw Error(ErrorKind::InvalidInput, "cohort: identity_count must be positive");
    if (width <= 0 || height <= 0) throw Error(ErrorKind::InvalidInput, "cohort: bad image size");
    for (const Range* r : {&pir_undilated, &pir_dilated, &mrd1_wide, &mrd1_neutral, &mrd1_squint, &lower_lid,
                           &blur_sigma, &noise_sigma})
        if (!range_ok(*r)) throw Error(ErrorKind::InvalidInput, "cohort: range with lo > hi");
    if (pir_undilated.lo <= 0.0 || pir_dilated.hi >= 1.0 || pir_undilated.hi >= 1.0 || pir_dilated.lo <= 0.0)
        throw Error(ErrorKind::InvalidInput, "cohort: PIR ranges must lie in (0,1)");
    if (blur_sigma.lo < 0.0 || noise_sigma.lo < 0.0)
        throw Error(ErrorKind::InvalidInput, "cohort: negative blur/noise");
    if (texture.radius_min <= 0.0 || texture.radius_min > texture.radius_max || texture.octaves < 1 ||
        texture.persistence_spread < 0.0 || texture.persistence - texture.persistence_spread <= 0.0)
        throw Error(ErrorKind::InvalidInput, "cohort: bad texture settings");
}

namespace {

using nlohmann::json;

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

Range range_from(const json& j, const Range& fallback) {
    if (j.is_null()) return fallback;
    if (!j.is_array() || j.size() != 2) throw Error(ErrorKind::Parse, "cohort config: range must be [lo, hi]");
    return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

std::string cohort_config_to_json(const CohortConfig& c) {
    json j;
    j["identity_count"] = c.identity_count;
    j["master_seed"] = c.master_seed;
    j["width"] = c.width;
    j["height"] = c.height;
    j["texture"] = {{"octaves", c.texture.octaves},
                    {"base_angular", c.texture.base_angular},
                    {"base_radial", c.texture.base_radial},
                    {"persistence", c.texture.persistence},
                    {"persistence_spread", c.texture.persistence_spread},
                    {"radius", range_json({c.texture.radius_min, c.texture.radius_max})}};
    j["pir_undilated"] = range_json(c.pir_undilated);
    j["pir_dilated"] = range_json(c.pir_dilated);
    j["mrd1_wide"] = range_json(c.mrd1_wide);
    j["mrd1_neutral"] = range_json(c.mrd1_neutral);
    j["mrd1_squint"] = range_json(c.mrd1_squint);
    j["lower_lid"] = range_json(c.lower_lid);
    j["blur_sigma"] = range_json(c.blur_sigma);
    j["noise_sigma"] = range_json(c.noise_sigma);
    j["gaze_max"] = c.gaze_max;
    j["deformation"] = c.deformation == DeformationMode::Linear ? "linear" : "nonlinear";
    j["deformation_k"] = c.deformation_k;
    j["rest_pir"] = c.rest_pir;
    j["eyelashes"] = {{"wide", c.eyelashes_wide}, {"neutral", c.eyelashes_neutral},
                      {"squint", c.eyelashes_squint}, {"length", c.eyelash_length},
                      {"mask_recall", c.eyelash_mask_recall}};
    j["lid_shadow"] = {{"depth", c.lid_shadow_depth}, {"width", c.lid_shadow_width}};
    j["lid_clutter"] = {{"amplitude", c.lid_clutter_amplitude}, {"width", c.lid_clutter_width}};
    return j.dump(2);
}

CohortConfig cohort_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("cohort config: ") + e.what());
    }
    CohortConfig c;
    try {
        c.identity_count = j.value("identity_count", c.identity_count);
        c.master_seed = j.value("master_seed", c.master_seed);
        c.width = j.value("width", c.width);
        c.height = j.value("height", c.height);
        if (j.contains("texture")) {
            const auto& t = j["texture"];
            c.texture.octaves = t.value("octaves", c.texture.octaves);
            c.texture.base_angular = t.value("base_angular", c.texture.base_angular);
            c.texture.base_radial = t.value("base_radial", c.texture.base_radial);
            c.texture.persistence = t.value("persistence", c.texture.persistence);
            c.texture.persistence_spread = t.value("persistence_spread", c.texture.persistence_spread);
            const auto r = range_from(t.value("radius", json()), {c.texture.radius_min, c.texture.radius_max});
            c.texture.radius_min = r.lo;
            c.texture.radius_max = r.hi;
        }
        c.pir_undilated = range_from(j.value("pir_undilated", json()), c.pir_undilated);
        c.pir_dilated = range_from(j.value("pir_dilated", json()), c.pir_dilated);
        c.mrd1_wide = range_from(j.value("mrd1_wide", json()), c.mrd1_wide);
        c.mrd1_neutral = range_from(j.value("mrd1_neutral", json()), c.mrd1_neutral);
        c.mrd1_squint = range_from(j.value("mrd1_squint", json()), c.mrd1_squint);
        c.lower_lid = range_from(j.value("lower_lid", json()), c.lower_lid);
        c.blur_sigma = range_from(j.value("blur_sigma", json()), c.blur_sigma);
        c.noise_sigma = range_from(j.value("noise_sigma", json()), c.noise_sigma);
        c.gaze_max = j.value("gaze_max", c.gaze_max);
        if (j.contains("deformation")) {
            const auto mode = j["deformation"].get<std::string>();
            if (mode == "linear")
                c.deformation = DeformationMode::Linear;
            else if (mode == "nonlinear")
                c.deformation = DeformationMode::Nonlinear;
            else
                throw Error(ErrorKind::Parse, "cohort config: deformation must be linear or nonlinear");
        }
        c.deformation_k = j.value("deformation_k", c.deformation_k);
        c.rest_pir = j.value("rest_pir", c.rest_pir);
        if (j.contains("eyelashes")) {
            const auto& e = j["eyelashes"];
            c.eyelashes_wide = e.value("wide", c.eyelashes_wide);
            c.eyelashes_neutral = e.value("neutral", c.eyelashes_neutral);
            c.eyelashes_squint = e.value("squint", c.eyelashes_squint);
            c.eyelash_length = e.value("length", c.eyelash_length);
            c.eyelash_mask_recall = e.value("mask_recall", c.eyelash_mask_recall);
        }
        if (j.contains("lid_shadow")) {
            c.lid_shadow_depth = j["lid_shadow"].value("depth", c.lid_shadow_depth);
            c.lid_shadow_width = j["lid_shadow"].value("width", c.lid_shadow_width);
        }
        if (j.contains("lid_clutter")) {
            c.lid_clutter_amplitude = j["lid_clutter"].value("amplitude", c.lid_clutter_amplitude);
            c.lid_clutter_width = j["lid_clutter"].value("width", c.lid_clutter_width);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("cohort config: ") + e.what());
    }
    c.check();
    return c;
}

CohortConfig load_cohort_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open cohort config: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return cohort_config_from_json(ss.str());
}

std::string capture_id(const std::string& identity_id, EyeSide side, Condition c) {
    return identity_id + (side == EyeSide::Left ? "-L-" : "-R-") + c.name();
}

std::vector<GeneratedCapture> render_cohort(const CohortConfig& cfg) {
    cfg.check();
    struct Job {
        int identity;
        EyeSide side;
        int condition;
    };
    const auto conditions = all_conditions();
    std::vector<Job> jobs;
    for (int i = 0; i < cfg.identity_count; ++i)
        for (EyeSide side : {EyeSide::Left, EyeSide::Right})
            for (int c = 0; c < static_cast<int>(conditions.size()); ++c) jobs.push_back({i, side, c});

    std::vector<IrisIdentity> irises;
    std::vector<std::string> ids;
    for (int i = 0; i < cfg.identity_count; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "S%04d", i + 1);
        ids.emplace_back(buf);
        const auto base = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(i));
        irises.push_back(generate_identity(base, cfg.texture, ids.back()));
        irises.push_back(generate_identity(derive_seed(base, 0x5EED), cfg.texture, ids.back()));
    }

    std::vector<GeneratedCapture> out(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t j) {
        const Job& job = jobs[j];
        const Condition cond = conditions[static_cast<std::size_t>(job.condition)];
        const IrisIdentity& iris = irises[static_cast<std::size_t>(job.identity) * 2 + (job.side == EyeSide::Right)];
        const double R = iris.iris_radius;
        Rng rng(derive_seed(derive_seed(cfg.master_seed, hash_string(ids[job.identity])),
                            static_cast<std::uint64_t>(job.side) * 16 + static_cast<std::uint64_t>(job.condition)));

        const Range& pir_r = cond.dilation == DilationState::Dilated ? cfg.pir_dilated : cfg.pir_undilated;
        const Range& lid_r = cond.lid == LidState::Wide      ? cfg.mrd1_wide
                             : cond.lid == LidState::Neutral ? cfg.mrd1_neutral
                                                             : cfg.mrd1_squint;
        const int lashes = cond.lid == LidState::Wide      ? cfg.eyelashes_wide
                           : cond.lid == LidState::Neutral ? cfg.eyelashes_neutral
                                                           : cfg.eyelashes_squint;

        GeneratedCapture g;
        g.iris_radius = R;
        g.pir = rng.uniform(pir_r.lo, pir_r.hi);
        g.mrd1_frac = rng.uniform(lid_r.lo, lid_r.hi);
        CaptureParams& p = g.params;
        p.width = cfg.width;
        p.height = cfg.height;
        p.pupil_radius = g.pir * R;
        p.upper_lid_height = g.mrd1_frac * R;
        p.lower_lid_depth = rng.uniform(cfg.lower_lid.lo, cfg.lower_lid.hi) * R;
        p.blur_sigma = rng.uniform(cfg.blur_sigma.lo, cfg.blur_sigma.hi);
        p.noise_sigma = rng.uniform(cfg.noise_sigma.lo, cfg.noise_sigma.hi);
        p.gaze_dx = rng.uniform(-cfg.gaze_max, cfg.gaze_max);
        p.gaze_dy = rng.uniform(-cfg.gaze_max, cfg.gaze_max);
        p.deformation = cfg.deformation;
        p.deformation_k = cfg.deformation == DeformationMode::Nonlinear ? cfg.deformation_k * (g.pir - cfg.rest_pir) : 0.0;
        p.eyelash_count = lashes;
        p.eyelash_length = cfg.eyelash_length * R;
        p.eyelash_mask_recall = cfg.eyelash_mask_recall;
        p.lid_shadow_depth = cfg.lid_shadow_depth;
        p.lid_shadow_width = cfg.lid_shadow_width * R;
        p.lid_clutter_amplitude = cfg.lid_clutter_amplitude;
        p.lid_clutter_width = cfg.lid_clutter_width * R;
        p.noise_seed = rng.next_u64();

        auto rendered = render_capture(iris, p);
        CaptureRecord& r = g.record;
        r.identity_id = ids[job.identity];
        r.eye_side = job.side;
        r.lid_state = cond.lid;
        r.dilation_state = cond.dilation;
        r.capture_id = capture_id(r.identity_id, job.side, cond);
        r.image = std::move(rendered.image);
        r.masks = std::move(rendered.masks);
        out[j] = std::move(g);
    }, 4);

    std::sort(out.begin(), out.end(), [](const GeneratedCapture& a, const GeneratedCapture& b) {
        return a.record.capture_id < b.record.capture_id;
    });
    return out;
}

Manifest generate_cohort(const CohortConfig& cfg, const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir / "images", ec);
    fs::create_directories(out_dir / "masks", ec);
    if (ec || !fs::is_directory(out_dir / "images") || !fs::is_directory(out_dir / "masks"))
        throw Error(ErrorKind::Io, "cannot create cohort directories under " + out_dir.string());

    auto captures = render_cohort(cfg);
    Manifest m;
    m.base_dir = out_dir;
    std::ostringstream truth;
    truth << "capture_id,iris_radius,pupil_radius,pir,upper_lid_height,lower_lid_depth,blur_sigma,noise_sigma,"
             "gaze_dx,gaze_dy,deformation_k,eyelash_count\n";
    for (auto& g : captures) {
        auto& r = g.record;
        r.image_path = out_dir / "images" / (r.capture_id + ".pgm");
        r.mask_path = out_dir / "masks" / (r.capture_id + ".igmk");
        write_pgm(r.image_path, *r.image);
        write_masks(r.mask_path, *r.masks);
        const auto& p = g.params;
        truth << r.capture_id << ',' << csv::format_double(g.iris_radius) << ',' << csv::format_double(p.pupil_radius)
              << ',' << csv::format_double(g.pir) << ',' << csv::format_double(p.upper_lid_height) << ','
              << csv::format_double(p.lower_lid_depth) << ',' << csv::format_double(p.blur_sigma) << ','
              << csv::format_double(p.noise_sigma) << ',' << csv::format_double(p.gaze_dx) << ','
              << csv::format_double(p.gaze_dy) << ',' << csv::format_double(p.deformation_k) << ','
              << p.eyelash_count << '\n';
        r.image.reset();
        r.masks.reset();
        m.records.push_back(std::move(r));
    }
    write_manifest(out_dir / "manifest.csv", m.records);
    const std::string t = truth.str();
    write_file_bytes(out_dir / "ground_truth.csv",
                     std::span(reinterpret_cast<const std::uint8_t*>(t.data()), t.size()));
    // Hand back resolved paths, pixels dropped, as load_manifest would.
    for (auto& r : m.records) {
        r.image.reset();
        r.masks.reset();
    }
    return m;
}

}  // namespace irisgate::synth
