#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "uavnav/core/error.hpp"

namespace uavnav::sim {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const {
        const double n = norm();
        return n > 0 ? Vec3{x / n, y / n, z / n} : Vec3{};
    }
};

inline double wrap_angle(double a) {
    a = std::fmod(a + M_PI, 2.0 * M_PI);
    if (a < 0) a += 2.0 * M_PI;
    return a - M_PI;  // (-pi, pi]
}

// Solid vertical cylinder spanning z in [z0, z0 + height].
struct Cylinder {
    double cx = 0, cy = 0, z0 = 0;
    double radius = 1, height = 1;
};

// Axis-aligned solid box.
struct Box {
    Vec3 center;
    Vec3 half;
};

// --- ray intersections; rays have unit direction, return nearest t > 0 ---

inline std::optional<double> ray_cylinder(const Vec3& o, const Vec3& d, const Cylinder& c) {
    std::optional<double> best;
    // lateral surface: quadratic in the xy-plane
    const double ox = o.x - c.cx, oy = o.y - c.cy;
    const double a = d.x * d.x + d.y * d.y;
    if (a > 1e-12) {
        const double b = 2.0 * (ox * d.x + oy * d.y);
        const double cc = ox * ox + oy * oy - c.radius * c.radius;
        const double disc = b * b - 4.0 * a * cc;
        if (disc >= 0) {
            const double sq = std::sqrt(disc);
            for (double t : {(-b - sq) / (2 * a), (-b + sq) / (2 * a)}) {
                if (t <= 1e-9) continue;
                const double z = o.z + t * d.z;
                if (z >= c.z0 && z <= c.z0 + c.height && (!best || t < *best)) best = t;
            }
        }
    }
    // end caps
    if (std::abs(d.z) > 1e-12) {
        for (double zc : {c.z0, c.z0 + c.height}) {
            const double t = (zc - o.z) / d.z;
            if (t <= 1e-9) continue;
            const double px = o.x + t * d.x - c.cx, py = o.y + t * d.y - c.cy;
            if (px * px + py * py <= c.radius * c.radius && (!best || t < *best)) best = t;
        }
    }
    return best;
}

inline std::optional<double> ray_box(const Vec3& o, const Vec3& d, const Box& b) {
    double tmin = 0.0, tmax = kInf;
    const double omin[3] = {b.center.x - b.half.x, b.center.y - b.half.y, b.center.z - b.half.z};
    const double omax[3] = {b.center.x + b.half.x, b.center.y + b.half.y, b.center.z + b.half.z};
    const double oo[3] = {o.x, o.y, o.z};
    const double dd[3] = {d.x, d.y, d.z};
    for (int i = 0; i < 3; ++i) {
        if (std::abs(dd[i]) < 1e-12) {
            if (oo[i] < omin[i] || oo[i] > omax[i]) return std::nullopt;
            continue;
        }
        double t0 = (omin[i] - oo[i]) / dd[i];
        double t1 = (omax[i] - oo[i]) / dd[i];
        if (t0 > t1) std::swap(t0, t1);
        tmin = std::max(tmin, t0);
        tmax = std::min(tmax, t1);
        if (tmin > tmax) return std::nullopt;
    }
    if (tmin <= 1e-9) return std::nullopt;  // origin inside or behind
    return tmin;
}

inline std::optional<double> ray_sphere(const Vec3& o, const Vec3& d, const Vec3& center,
                                        double radius) {
    const Vec3 oc = o - center;
    const double b = 2.0 * oc.dot(d);
    const double c = oc.dot(oc) - radius * radius;
    const double disc = b * b - 4.0 * c;
    if (disc < 0) return std::nullopt;
    const double sq = std::sqrt(disc);
    const double t0 = (-b - sq) / 2.0;
    if (t0 > 1e-9) return t0;
    const double t1 = (-b + sq) / 2.0;
    if (t1 > 1e-9) return t1;
    return std::nullopt;
}

// --- point-to-solid distances (0 inside) ---

inline double dist_cylinder(const Vec3& p, const Cylinder& c) {
    const double dxy = std::hypot(p.x - c.cx, p.y - c.cy);
    const double radial = std::max(0.0, dxy - c.radius);
    double vertical = 0.0;
    if (p.z < c.z0)
        vertical = c.z0 - p.z;
    else if (p.z > c.z0 + c.height)
        vertical = p.z - (c.z0 + c.height);
    return std::hypot(radial, vertical);
}

inline double dist_box(const Vec3& p, const Box& b) {
    const double dx = std::max(std::abs(p.x - b.center.x) - b.half.x, 0.0);
    const double dy = std::max(std::abs(p.y - b.center.y) - b.half.y, 0.0);
    const double dz = std::max(std::abs(p.z - b.center.z) - b.half.z, 0.0);
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Regular lattice of heights with bilinear interpolation; edge-clamped so
// queries outside the grid see the border value.
struct Heightfield {
    int nx = 0, ny = 0;
    double x0 = 0, y0 = 0, cell = 1.0;
    std::vector<double> h;

    bool flat() const {
        for (double v : h)
            if (v != 0.0) return false;
        return true;
    }

    double max_height() const {
        double m = 0.0;
        for (double v : h) m = std::max(m, v);
        return m;
    }

    double vertex(int ix, int iy) const {
        ix = std::clamp(ix, 0, nx - 1);
        iy = std::clamp(iy, 0, ny - 1);
        return h[static_cast<std::size_t>(iy) * nx + ix];
    }

    double height_at(double x, double y) const {
        if (h.empty()) return 0.0;
        const double gx = (x - x0) / cell;
        const double gy = (y - y0) / cell;
        const int ix = static_cast<int>(std::floor(gx));
        const int iy = static_cast<int>(std::floor(gy));
        const double fx = std::clamp(gx - ix, 0.0, 1.0);
        const double fy = std::clamp(gy - iy, 0.0, 1.0);
        const double h00 = vertex(ix, iy), h10 = vertex(ix + 1, iy);
        const double h01 = vertex(ix, iy + 1), h11 = vertex(ix + 1, iy + 1);
        return (1 - fy) * ((1 - fx) * h00 + fx * h10) + fy * ((1 - fx) * h01 + fx * h11);
    }
};

// March along the ray until it dips below the surface, then bisect.
inline std::optional<double> ray_heightfield(const Vec3& o, const Vec3& d, const Heightfield& hf,
                                             double t_max) {
    const double top = hf.h.empty() ? 0.0 : hf.max_height();
    if (hf.h.empty() || hf.flat()) {
        // plane z = 0
        if (std::abs(d.z) < 1e-12) return std::nullopt;
        const double t = -o.z / d.z;
        if (t > 1e-9 && t <= t_max) return t;
        return std::nullopt;
    }
    const double step = 0.5 * hf.cell;
    double t_prev = 0.0;
    double f_prev = o.z - hf.height_at(o.x, o.y);
    if (f_prev <= 0.0) return 1e-9;  // starting underground
    for (double t = step; t <= t_max + step; t += step) {
        const double tc = std::min(t, t_max);
        const Vec3 p = o + d * tc;
        if (p.z > top && d.z >= 0.0) return std::nullopt;  // climbing above all terrain
        const double f = p.z - hf.height_at(p.x, p.y);
        if (f <= 0.0) {
            double lo = t_prev, hi = tc;
            for (int it = 0; it < 40; ++it) {
                const double mid = 0.5 * (lo + hi);
                const Vec3 pm = o + d * mid;
                if (pm.z - hf.height_at(pm.x, pm.y) <= 0.0)
                    hi = mid;
                else
                    lo = mid;
            }
            return 0.5 * (lo + hi);
        }
        t_prev = tc;
        f_prev = f;
        if (tc >= t_max) break;
    }
    return std::nullopt;
}

// Nearest distance from p to the terrain surface, searched within a
// horizontal radius and refined around the best coarse sample.
inline double dist_heightfield(const Vec3& p, const Heightfield& hf, double search_radius) {
    if (hf.h.empty() || hf.flat()) return std::max(0.0, p.z);
    double best = kInf;
    double bx = p.x, by = p.y;
    const double coarse = 0.5 * hf.cell;
    const int steps = static_cast<int>(std::ceil(search_radius / coarse));
    for (int iy = -steps; iy <= steps; ++iy)
        for (int ix = -steps; ix <= steps; ++ix) {
            const double x = p.x + ix * coarse, y = p.y + iy * coarse;
            const double dz = p.z - hf.height_at(x, y);
            const double d2 = (x - p.x) * (x - p.x) + (y - p.y) * (y - p.y) + dz * dz;
            if (d2 < best) {
                best = d2;
                bx = x;
                by = y;
            }
        }
    // local refinement
    double span = coarse;
    for (int round = 0; round < 8; ++round) {
        const double step = span / 4.0;
        double rbx = bx, rby = by;
        for (int iy = -4; iy <= 4; ++iy)
            for (int ix = -4; ix <= 4; ++ix) {
                const double x = bx + ix * step, y = by + iy * step;
                const double dz = p.z - hf.height_at(x, y);
                const double d2 = (x - p.x) * (x - p.x) + (y - p.y) * (y - p.y) + dz * dz;
                if (d2 < best) {
                    best = d2;
                    rbx = x;
                    rby = y;
                }
            }
        bx = rbx;
        by = rby;
        span = step * 2.0;
    }
    const double below = p.z - hf.height_at(p.x, p.y);
    if (below <= 0.0) return 0.0;
    return std::sqrt(best);
}

}  // namespace uavnav::sim
