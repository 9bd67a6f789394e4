#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "uavnav/core/rng.hpp"
#include "uavnav/sim/geometry.hpp"

namespace uavnav::sim {

// Deterministic lattice value noise in [0, 1].
inline double value_noise2(double x, double y, std::uint64_t seed) {
    auto hash01 = [seed](std::int64_t ix, std::int64_t iy) {
        std::uint64_t h = seed;
        h ^= static_cast<std::uint64_t>(ix) * 0x9e3779b97f4a7c15ull;
        h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
        h ^= static_cast<std::uint64_t>(iy) * 0xc2b2ae3d27d4eb4full;
        h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
        h ^= h >> 31;
        return static_cast<double>(h >> 11) * 0x1.0p-53;
    };
    const auto ix = static_cast<std::int64_t>(std::floor(x));
    const auto iy = static_cast<std::int64_t>(std::floor(y));
    const double fx = x - ix, fy = y - iy;
    const double sx = fx * fx * (3 - 2 * fx);  // smoothstep
    const double sy = fy * fy * (3 - 2 * fy);
    const double v00 = hash01(ix, iy), v10 = hash01(ix + 1, iy);
    const double v01 = hash01(ix, iy + 1), v11 = hash01(ix + 1, iy + 1);
    return (1 - sy) * ((1 - sx) * v00 + sx * v10) + sy * ((1 - sx) * v01 + sx * v11);
}

inline double value_noise3(double x, double y, double z, std::uint64_t seed) {
    // two 2-D slices blended along z
    const auto iz = static_cast<std::int64_t>(std::floor(z));
    const double fz = z - iz;
    const double sz = fz * fz * (3 - 2 * fz);
    const double a = value_noise2(x, y, seed ^ (0x632be59bd9b4e019ull * static_cast<std::uint64_t>(iz)));
    const double b =
        value_noise2(x, y, seed ^ (0x632be59bd9b4e019ull * static_cast<std::uint64_t>(iz + 1)));
    return (1 - sz) * a + sz * b;
}

// Additive structured depth noise standing in for per-domain background
// appearance. amplitude in meters, frequency in cycles per meter.
struct TextureProfile {
    double amplitude = 0.0;
    double frequency = 1.0;
    std::uint64_t noise_seed = 0;

    double sample(const Vec3& p) const {
        if (amplitude <= 0.0) return 0.0;
        return amplitude *
               (2.0 * value_noise3(p.x * frequency, p.y * frequency, p.z * frequency, noise_seed) -
                1.0);
    }
};

struct ScenarioSpec {
    std::string domain_name = "empty";
    std::uint64_t seed = 0;
    Vec3 bounds_min{-20, -20, 0};
    Vec3 bounds_max{20, 20, 10};
    Heightfield terrain;
    std::vector<Cylinder> cylinders;
    std::vector<Box> boxes;
    double obstacle_density = 0.0;  // obstacles per square meter
    double obstacle_radius_lo = 0.0, obstacle_radius_hi = 0.0;
    double terrain_roughness = 0.0;  // peak terrain height in meters
    TextureProfile texture;

    std::size_t obstacle_count() const { return cylinders.size() + boxes.size(); }
};

namespace detail {

struct DomainParams {
    double density;
    double radius_lo, radius_hi;
    double height_lo, height_hi;
    double terrain_amp;     // 0 = flat
    double terrain_freq;    // cells per meter for the noise lattice
    double texture_amp;
    double texture_freq;
    bool low_obstacles;     // grassland-style short blocks
};

inline DomainParams domain_params(const std::string& name) {
    if (name == "playground") return {0.0040, 1.0, 2.0, 4.0, 8.0, 0.0, 0.0, 0.05, 0.3, false};
    if (name == "grassland") return {0.0020, 0.5, 1.2, 0.8, 1.6, 0.8, 0.06, 0.30, 0.8, true};
    if (name == "snow_mountain") return {0.0050, 0.8, 1.6, 2.0, 5.0, 4.0, 0.08, 0.80, 1.6, false};
    if (name == "forest") return {0.0200, 0.15, 0.40, 6.0, 9.0, 0.0, 0.0, 0.50, 2.5, false};
    throw ConfigError("unknown scenario domain '" + name + "'");
}

// Terrain rises away from the central flight volume so spawn boxes stay
// clear while the surrounding relief changes the camera's background.
inline double center_ramp(double x, double y) {
    const double r = std::hypot(x, y);
    if (r <= 8.0) return 0.0;
    if (r >= 14.0) return 1.0;
    const double t = (r - 8.0) / 6.0;
    return t * t * (3 - 2 * t);
}

}  // namespace detail

inline ScenarioSpec empty_scenario(double extent = 20.0, double zmax = 10.0) {
    ScenarioSpec s;
    s.domain_name = "empty";
    s.bounds_min = {-extent, -extent, 0};
    s.bounds_max = {extent, extent, zmax};
    return s;
}

// Same (domain_name, seed) always yields the identical spec.
inline ScenarioSpec generate_scenario(const std::string& domain_name, std::uint64_t seed) {
    const auto p = detail::domain_params(domain_name);
    ScenarioSpec s;
    s.domain_name = domain_name;
    s.seed = seed;
    s.obstacle_density = p.density;
    s.obstacle_radius_lo = p.radius_lo;
    s.obstacle_radius_hi = p.radius_hi;
    s.terrain_roughness = p.terrain_amp;
    Rng rng(0x5ce7a91200ull ^ (seed * 0x9e3779b97f4a7c15ull));

    const double width = s.bounds_max.x - s.bounds_min.x;
    const double depth = s.bounds_max.y - s.bounds_min.y;

    // terrain lattice at 1 m resolution
    if (p.terrain_amp > 0.0) {
        Heightfield hf;
        hf.cell = 1.0;
        hf.nx = static_cast<int>(width / hf.cell) + 1;
        hf.ny = static_cast<int>(depth / hf.cell) + 1;
        hf.x0 = s.bounds_min.x;
        hf.y0 = s.bounds_min.y;
        hf.h.resize(static_cast<std::size_t>(hf.nx) * hf.ny);
        const std::uint64_t terrain_seed = rng.next_u64();
        for (int iy = 0; iy < hf.ny; ++iy)
            for (int ix = 0; ix < hf.nx; ++ix) {
                const double x = hf.x0 + ix * hf.cell;
                const double y = hf.y0 + iy * hf.cell;
                double n = 0.65 * value_noise2(x * p.terrain_freq, y * p.terrain_freq, terrain_seed) +
                           0.35 * value_noise2(x * p.terrain_freq * 3.1, y * p.terrain_freq * 3.1,
                                               terrain_seed ^ 0xabcdull);
                hf.h[static_cast<std::size_t>(iy) * hf.nx + ix] =
                    p.terrain_amp * n * n * detail::center_ramp(x, y);
            }
        s.terrain = std::move(hf);
    }

    s.texture.amplitude = p.texture_amp;
    s.texture.frequency = p.texture_freq;
    s.texture.noise_seed = rng.next_u64();

    const int count = static_cast<int>(std::lround(p.density * width * depth));
    int placed = 0, attempts = 0;
    while (placed < count && attempts < 100000) {
        ++attempts;
        const double r = rng.uniform(p.radius_lo, p.radius_hi);
        const double margin = r + 0.2;
        const double cx = rng.uniform(s.bounds_min.x + margin, s.bounds_max.x - margin);
        const double cy = rng.uniform(s.bounds_min.y + margin, s.bounds_max.y - margin);
        // keep the circle-initialization ring (radius 12) clear of geometry
        const double ring_gap = std::abs(std::hypot(cx, cy) - 12.0);
        if (ring_gap < r + 1.0) continue;
        const double base = s.terrain.h.empty() ? 0.0 : s.terrain.height_at(cx, cy);
        const double top = std::min(base + rng.uniform(p.height_lo, p.height_hi), s.bounds_max.z);
        if (p.low_obstacles && placed % 2 == 1) {
            Box b;
            b.half = {r, r, (top - base) / 2.0};
            b.center = {cx, cy, (top + base) / 2.0};
            s.boxes.push_back(b);
        } else {
            // grown from the ground so terrain never leaves a gap underneath
            s.cylinders.push_back({cx, cy, 0.0, r, top});
        }
        ++placed;
    }
    return s;
}

// --- human-editable text round trip ---

inline void save_scenario(const ScenarioSpec& s, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IntegrityError("cannot open for writing: " + path);
    f.precision(17);
    f << "format = uavnav-scenario-v1\n";
    f << "domain = " << s.domain_name << "\n";
    f << "seed = " << s.seed << "\n";
    f << "bounds = " << s.bounds_min.x << " " << s.bounds_min.y << " " << s.bounds_min.z << " "
      << s.bounds_max.x << " " << s.bounds_max.y << " " << s.bounds_max.z << "\n";
    f << "obstacle_density = " << s.obstacle_density << "\n";
    f << "obstacle_radius_range = " << s.obstacle_radius_lo << " " << s.obstacle_radius_hi << "\n";
    f << "terrain_roughness = " << s.terrain_roughness << "\n";
    f << "texture = " << s.texture.amplitude << " " << s.texture.frequency << " "
      << s.texture.noise_seed << "\n";
    for (const auto& c : s.cylinders)
        f << "cylinder = " << c.cx << " " << c.cy << " " << c.z0 << " " << c.radius << " "
          << c.height << "\n";
    for (const auto& b : s.boxes)
        f << "box = " << b.center.x << " " << b.center.y << " " << b.center.z << " " << b.half.x
          << " " << b.half.y << " " << b.half.z << "\n";
    if (!s.terrain.h.empty()) {
        f << "terrain_grid = " << s.terrain.nx << " " << s.terrain.ny << " " << s.terrain.x0 << " "
          << s.terrain.y0 << " " << s.terrain.cell << "\n";
        for (int iy = 0; iy < s.terrain.ny; ++iy) {
            f << "terrain_row =";
            for (int ix = 0; ix < s.terrain.nx; ++ix)
                f << " " << s.terrain.h[static_cast<std::size_t>(iy) * s.terrain.nx + ix];
            f << "\n";
        }
    }
    if (!f) throw IntegrityError("write failed: " + path);
}

inline ScenarioSpec load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IntegrityError("cannot open: " + path);
    ScenarioSpec s;
    s.domain_name.clear();
    std::string line;
    bool got_format = false;
    int terrain_row = 0;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw IntegrityError(path + ": bad line '" + line + "'");
        std::string key = line.substr(0, eq);
        key.erase(key.find_last_not_of(" \t") + 1);
        std::istringstream v(line.substr(eq + 1));
        if (key == "format") {
            std::string fmt;
            v >> fmt;
            if (fmt != "uavnav-scenario-v1")
                throw IntegrityError(path + ": unsupported scenario format '" + fmt + "'");
            got_format = true;
        } else if (key == "domain")
            v >> s.domain_name;
        else if (key == "seed")
            v >> s.seed;
        else if (key == "bounds")
            v >> s.bounds_min.x >> s.bounds_min.y >> s.bounds_min.z >> s.bounds_max.x >>
                s.bounds_max.y >> s.bounds_max.z;
        else if (key == "obstacle_density")
            v >> s.obstacle_density;
        else if (key == "obstacle_radius_range")
            v >> s.obstacle_radius_lo >> s.obstacle_radius_hi;
        else if (key == "terrain_roughness")
            v >> s.terrain_roughness;
        else if (key == "texture")
            v >> s.texture.amplitude >> s.texture.frequency >> s.texture.noise_seed;
        else if (key == "cylinder") {
            Cylinder c;
            v >> c.cx >> c.cy >> c.z0 >> c.radius >> c.height;
            s.cylinders.push_back(c);
        } else if (key == "box") {
            Box b;
            v >> b.center.x >> b.center.y >> b.center.z >> b.half.x >> b.half.y >> b.half.z;
            s.boxes.push_back(b);
        } else if (key == "terrain_grid") {
            v >> s.terrain.nx >> s.terrain.ny >> s.terrain.x0 >> s.terrain.y0 >> s.terrain.cell;
            s.terrain.h.assign(static_cast<std::size_t>(s.terrain.nx) * s.terrain.ny, 0.0);
        } else if (key == "terrain_row") {
            for (int ix = 0; ix < s.terrain.nx; ++ix)
                v >> s.terrain.h[static_cast<std::size_t>(terrain_row) * s.terrain.nx + ix];
            ++terrain_row;
        } else
            throw IntegrityError(path + ": unknown key '" + key + "'");
        if (v.fail()) throw IntegrityError(path + ": bad value for '" + key + "'");
    }
    if (!got_format) throw IntegrityError(path + ": missing format line");
    return s;
}

}  // namespace uavnav::sim
