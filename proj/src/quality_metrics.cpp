#include "irisgate/quality_metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace irisgate::metrics {

ValidatorConfig ValidatorConfig::relaxed() {
    ValidatorConfig c;
    c.pir_min = 0.0001;
    c.pir_max = 0.9999;
    c.occlusion90_max = 0.99;
    c.occlusion30_max = 0.99;
    c.check_pir = false;
    c.check_occlusion = false;
    return c;
}

void ValidatorConfig::check() const {
    auto fraction = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!(pir_min <= pir_max)) throw Error(ErrorKind::InvalidInput, "validator: pir_min > pir_max");
    if (!fraction(occlusion90_max) || !fraction(occlusion30_max))
        throw Error(ErrorKind::InvalidInput, "validator: occlusion maxima must lie in [0,1]");
    if (!(mask_min_px >= 0.0)) throw Error(ErrorKind::InvalidInput, "validator: negative mask_min_px");
    if (!std::isfinite(sharpness_min)) throw Error(ErrorKind::InvalidInput, "validator: sharpness_min not finite");
}

std::string_view to_string(ValidationFailure f) {
    switch (f) {
        case ValidationFailure::PirOutOfRange: return "PirOutOfRange";
        case ValidationFailure::TooBlurry: return "TooBlurry";
        case ValidationFailure::Occlusion90: return "Occlusion90";
        case ValidationFailure::Occlusion30: return "Occlusion30";
        case ValidationFailure::MaskTooSmall: return "MaskTooSmall";
    }
    return "?";
}

std::string ValidationReport::tokens() const {
    std::string out;
    for (auto f : failures) {
        if (!out.empty()) out.push_back(';');
        out += to_string(f);
    }
    return out;
}

namespace {

struct Pt {
    std::int64_t x;
    std::int64_t y;
};

std::int64_t cross(const Pt& o, const Pt& a, const Pt& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

std::int64_t dist2(const Pt& a, const Pt& b) {
    const auto dx = a.x - b.x, dy = a.y - b.y;
    return dx * dx + dy * dy;
}

// Andrew's monotone chain; returns CCW hull without collinear points.
std::vector<Pt> convex_hull(std::vector<Pt> pts) {
    std::sort(pts.begin(), pts.end(), [](const Pt& a, const Pt& b) {
        return a.x != b.x ? a.x < b.x : a.y < b.y;
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Pt& a, const Pt& b) { return a.x == b.x && a.y == b.y; }),
              pts.end());
    if (pts.size() < 3) return pts;
    std::vector<Pt> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

// Rotating calipers over a CCW hull.
std::int64_t hull_diameter2(const std::vector<Pt>& h) {
    const std::size_t n = h.size();
    if (n == 1) return 0;
    if (n == 2) return dist2(h[0], h[1]);
    std::int64_t best = 0;
    std::size_t j = 1;
    for (std::size_t i = 0; i < n; ++i) {
        const Pt& a = h[i];
        const Pt& b = h[(i + 1) % n];
        while (std::abs(cross(a, b, h[(j + 1) % n])) > std::abs(cross(a, b, h[j]))) j = (j + 1) % n;
        best = std::max({best, dist2(a, h[j]), dist2(b, h[j])});
    }
    return best;
}

// 8-connected labelling; returns a mask of the largest component (first in
// raster order on ties).
Mask largest_component(const Mask& m) {
    const int w = m.width(), h = m.height();
    std::vector<int> label(m.size(), 0);
    std::vector<int> stack;
    int best_label = 0;
    std::size_t best_size = 0;
    int next = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            if (!m.at(x, y) || label[idx] != 0) continue;
            ++next;
            std::size_t size = 0;
            stack.assign(1, static_cast<int>(idx));
            label[idx] = next;
            while (!stack.empty()) {
                const int cur = stack.back();
                stack.pop_back();
                ++size;
                const int cx = cur % w, cy = cur / w;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = cx + dx, ny = cy + dy;
                        if (!m.contains(nx, ny)) continue;
                        const std::size_t nidx = static_cast<std::size_t>(ny) * w + nx;
                        if (label[nidx] != 0) continue;
                        label[nidx] = next;
                        stack.push_back(static_cast<int>(nidx));
                    }
            }
            if (size > best_size) {
                best_size = size;
                best_label = next;
            }
        }
    }
    Mask out(w, h);
    for (std::size_t i = 0; i < label.size(); ++i)
        if (label[i] == best_label && best_label != 0) out.cells()[i] = 1;
    return out;
}

struct Centroid {
    double x = 0.0;
    double y = 0.0;
    std::size_t n = 0;
};

Centroid centroid(const Mask& m) {
    Centroid c;
    double sx = 0.0, sy = 0.0;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (m.at(x, y)) {
                sx += x;
                sy += y;
                ++c.n;
            }
    if (c.n > 0) {
        c.x = sx / static_cast<double>(c.n);
        c.y = sy / static_cast<double>(c.n);
    }
    return c;
}

// Solves a 3x3 system by Gaussian elimination with partial pivoting.
bool solve3(std::array<std::array<double, 4>, 3> a, std::array<double, 3>& out) {
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-12) return false;
        std::swap(a[col], a[piv]);
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            for (int c = col; c < 4; ++c) a[r][c] -= f * a[col][c];
        }
    }
    for (int i = 0; i < 3; ++i) out[i] = a[i][3] / a[i][i];
    return true;
}

// Kasa fit: x^2 + y^2 + D x + E y + F = 0 in a least-squares sense.
bool fit_circle(const std::vector<std::pair<double, double>>& pts, Circle& c) {
    if (pts.size() < 8) return false;
    double mx = 0, my = 0;
    for (auto [x, y] : pts) {
        mx += x;
        my += y;
    }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    std::array<std::array<double, 4>, 3> a{};
    for (auto [px, py] : pts) {
        const double x = px - mx, y = py - my;
        const double z = -(x * x + y * y);
        const double row[3] = {x, y, 1.0};
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) a[i][j] += row[i] * row[j];
            a[i][3] += row[i] * z;
        }
    }
    std::array<double, 3> s{};
    if (!solve3(a, s)) return false;
    const double cx = -s[0] / 2.0, cy = -s[1] / 2.0;
    const double r2 = cx * cx + cy * cy - s[2];
    if (!(r2 > 0.0)) return false;
    c = {cx + mx, cy + my, std::sqrt(r2)};
    return true;
}

}  // namespace

double polygon_diameter(const Mask& mask, DiameterScope scope) {
    const Mask& src = mask;
    Mask filtered;
    const Mask* m = &src;
    if (scope == DiameterScope::LargestComponent) {
        filtered = largest_component(mask);
        m = &filtered;
    }
    // The hull of a raster region is spanned by each row's extreme pixels.
    std::vector<Pt> pts;
    for (int y = 0; y < m->height(); ++y) {
        int lo = -1, hi = -1;
        for (int x = 0; x < m->width(); ++x)
            if (m->at(x, y)) {
                if (lo < 0) lo = x;
                hi = x;
            }
        if (lo >= 0) {
            pts.push_back({lo, y});
            if (hi != lo) pts.push_back({hi, y});
        }
    }
    if (pts.empty()) throw Error(ErrorKind::Undefined, "polygon_diameter: empty mask");
    return std::sqrt(static_cast<double>(hull_diameter2(convex_hull(std::move(pts)))));
}

double pupil_iris_ratio(const SegmentationMasks& masks) {
    if (!masks.pupil.any()) throw Error(ErrorKind::Undefined, "PIR: empty pupil mask");
    if (!masks.iris.any()) throw Error(ErrorKind::Undefined, "PIR: empty iris mask");
    const double iris_d = polygon_diameter(mask_or(masks.iris, masks.pupil));
    if (iris_d <= 0.0) throw Error(ErrorKind::Undefined, "PIR: zero iris diameter");
    return polygon_diameter(masks.pupil) / iris_d;
}

double visible_iris_area(const SegmentationMasks& masks) {
    const auto& iris = masks.iris.cells();
    const auto& pupil = masks.pupil.cells();
    if (iris.empty()) return 0.0;
    if (pupil.size() != iris.size()) throw Error(ErrorKind::InvalidInput, "VIA: mask size mismatch");
    std::size_t n = 0;
    for (std::size_t i = 0; i < iris.size(); ++i) n += (iris[i] && !pupil[i]) ? 1 : 0;
    return static_cast<double>(n);
}

double mrd(const SegmentationMasks& masks, MrdKind kind) {
    const auto c = centroid(masks.pupil);
    if (c.n == 0) throw Error(ErrorKind::Undefined, "MRD: empty pupil mask");
    const Mask& eye = masks.eyeball;
    const int col = static_cast<int>(std::lround(c.x));
    const int row = static_cast<int>(std::lround(c.y));
    int top = -1, bottom = -1;
    if (col >= 0 && col < eye.width())
        for (int y = 0; y < eye.height(); ++y)
            if (eye.at(col, y)) {
                if (top < 0) top = y;
                bottom = y;
            }
    if (top < 0) {
        for (int y = 0; y < eye.height(); ++y)
            for (int x = 0; x < eye.width(); ++x)
                if (eye.at(x, y)) {
                    if (top < 0) top = y;
                    bottom = y;
                    break;
                }
    }
    if (top < 0) throw Error(ErrorKind::Undefined, "MRD: empty eyeball mask");
    return kind == MrdKind::Mrd1 ? static_cast<double>(row - top) : static_cast<double>(bottom - row);
}

double sharpness(const EyeImage& image) {
    const int w = image.width, h = image.height;
    if (w < 3 || h < 3) throw Error(ErrorKind::Undefined, "sharpness: image smaller than 3x3");
    double sum = 0.0, sum2 = 0.0;
    for (int y = 1; y < h - 1; ++y) {
        const std::uint8_t* up = &image.pixels[static_cast<std::size_t>(y - 1) * w];
        const std::uint8_t* mid = up + w;
        const std::uint8_t* dn = mid + w;
        for (int x = 1; x < w - 1; ++x) {
            const double v = up[x] + dn[x] + mid[x - 1] + mid[x + 1] - 4.0 * mid[x];
            sum += v;
            sum2 += v * v;
        }
    }
    const double n = static_cast<double>(w - 2) * (h - 2);
    const double mean = sum / n;
    return std::max(0.0, sum2 / n - mean * mean);
}

IrisGeometry iris_geometry(const SegmentationMasks& masks) {
    const auto pc = centroid(masks.pupil);
    if (pc.n == 0) throw Error(ErrorKind::Undefined, "geometry: empty pupil mask");
    if (!masks.iris.any()) throw Error(ErrorKind::Undefined, "geometry: empty iris mask");

    IrisGeometry g;
    g.pupil = {pc.x, pc.y, polygon_diameter(masks.pupil) / 2.0};

    const Mask disc = mask_or(masks.iris, masks.pupil);
    const bool have_eyeball = masks.eyeball.any();
    std::vector<std::pair<double, double>> limbus;
    const int w = disc.width(), h = disc.height();
    for (int y = 1; y < h - 1; ++y)
        for (int x = 1; x < w - 1; ++x) {
            if (!disc.at(x, y)) continue;
            bool on_limbus = false;
            bool against_lid = false;
            constexpr int kDx[4] = {1, -1, 0, 0};
            constexpr int kDy[4] = {0, 0, 1, -1};
            for (int k = 0; k < 4; ++k) {
                const int nx = x + kDx[k], ny = y + kDy[k];
                if (disc.at(nx, ny)) continue;
                if (have_eyeball && (!masks.eyeball.at(nx, ny) || masks.eyelash.at(nx, ny)))
                    against_lid = true;
                else
                    on_limbus = true;
            }
            if (on_limbus && !against_lid) limbus.emplace_back(x, y);
        }
    if (!fit_circle(limbus, g.iris))
        g.iris = {pc.x, pc.y, polygon_diameter(disc) / 2.0};
    return g;
}

double occlusion_fraction(const SegmentationMasks& masks, const IrisGeometry& g, double arc_degrees) {
    const double inner = g.pupil.r + 1.0;
    const double outer = g.iris.r - 1.0;
    if (!(outer > inner) || !(arc_degrees > 0.0))
        throw Error(ErrorKind::Undefined, "occlusion: degenerate annulus or arc");
    const double half = arc_degrees * std::numbers::pi / 360.0;
    const double cx = g.iris.cx, cy = g.iris.cy;
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - outer)));
    const int x1 = std::min(masks.iris.width() - 1, static_cast<int>(std::ceil(cx + outer)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - outer)));
    const int y1 = std::min(masks.iris.height() - 1, static_cast<int>(std::ceil(cy + outer)));
    std::size_t total = 0, hidden = 0;
    // Pixels of the sector that fall outside the image still count as hidden.
    const int gx0 = static_cast<int>(std::floor(cx - outer)), gx1 = static_cast<int>(std::ceil(cx + outer));
    const int gy0 = static_cast<int>(std::floor(cy - outer)), gy1 = static_cast<int>(std::ceil(cy + outer));
    for (int y = gy0; y <= gy1; ++y)
        for (int x = gx0; x <= gx1; ++x) {
            const double dx = x - cx, dy = y - cy;
            const double d = std::hypot(dx, dy);
            if (d < inner || d > outer) continue;
            // Angle from 12 o'clock; image rows grow downward.
            if (std::abs(std::atan2(dx, -dy)) > half) continue;
            ++total;
            const bool inside = x >= x0 && x <= x1 && y >= y0 && y <= y1;
            if (!inside || !masks.iris.at(x, y) || masks.pupil.at(x, y)) ++hidden;
        }
    if (total == 0) throw Error(ErrorKind::Undefined, "occlusion: empty sector");
    return static_cast<double>(hidden) / static_cast<double>(total);
}

double occlusion_fraction(const SegmentationMasks& masks, double arc_degrees) {
    return occlusion_fraction(masks, iris_geometry(masks), arc_degrees);
}

MetricSet compute_metrics(const EyeImage& image, const SegmentationMasks& masks) {
    if (!masks.same_dims() || masks.pupil.width() != image.width || masks.pupil.height() != image.height)
        throw Error(ErrorKind::InvalidInput, "metrics: image/mask dimensions differ");
    MetricSet m;
    m.via = visible_iris_area(masks);
    m.pupil_diameter = polygon_diameter(masks.pupil);
    m.iris_diameter = polygon_diameter(mask_or(masks.iris, masks.pupil));
    m.pir = m.iris_diameter > 0.0 ? m.pupil_diameter / m.iris_diameter : 0.0;
    m.mrd1 = mrd(masks, MrdKind::Mrd1);
    m.mrd2 = mrd(masks, MrdKind::Mrd2);
    m.sharpness = sharpness(image);
    const auto g = iris_geometry(masks);
    m.occlusion_90 = occlusion_fraction(masks, g, 90.0);
    m.occlusion_30 = occlusion_fraction(masks, g, 30.0);
    return m;
}

ValidationReport validate(const MetricSet& m, const ValidatorConfig& cfg) {
    ValidationReport r;
    auto fail = [&](ValidationFailure f) {
        r.passed = false;
        r.failures.push_back(f);
    };
    if (cfg.check_pir && (m.pir < cfg.pir_min || m.pir > cfg.pir_max)) fail(ValidationFailure::PirOutOfRange);
    if (m.sharpness < cfg.sharpness_min) fail(ValidationFailure::TooBlurry);
    if (cfg.check_occlusion && m.occlusion_90 > cfg.occlusion90_max) fail(ValidationFailure::Occlusion90);
    if (cfg.check_occlusion && m.occlusion_30 > cfg.occlusion30_max) fail(ValidationFailure::Occlusion30);
    if (m.via < cfg.mask_min_px) fail(ValidationFailure::MaskTooSmall);
    return r;
}

ValidationReport validate(const CaptureRecord& record, const ValidatorConfig& cfg) {
    if (record.metrics) return validate(*record.metrics, cfg);
    if (!record.image || !record.masks)
        throw Error(ErrorKind::InvalidInput, "validate: record " + record.capture_id + " has no pixels loaded");
    return validate(compute_metrics(*record.image, *record.masks), cfg);
}

}  // namespace irisgate::metrics
