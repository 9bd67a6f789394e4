#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "uavnav/core/error.hpp"

namespace uavnav::eval {

// One UAV's episode outcome. `shortest` is the straight start-to-goal
// distance, the lower bound every actual path is measured against.
struct EpisodeRecord {
    bool success = false;
    bool collided = false;
    double shortest = 0.0;   // meters
    double actual = 0.0;     // meters flown
    int steps = 0;
    double mean_speed = 0.0;  // meters per second over the active flight
};

inline void validate_records(const std::vector<EpisodeRecord>& records) {
    if (records.empty()) throw ContractError("metrics: empty record set");
    for (const auto& r : records) {
        if (r.shortest <= 0.0)
            throw ParameterError("metrics: shortest path must be positive, got " +
                                 std::to_string(r.shortest));
        if (r.actual < 0.0) throw ParameterError("metrics: negative path length");
    }
}

// Success weighted by path length, in percent: mean of sigma * l / max(l, p).
inline double spl(const std::vector<EpisodeRecord>& records) {
    validate_records(records);
    double acc = 0.0;
    for (const auto& r : records)
        if (r.success) acc += r.shortest / std::max(r.shortest, r.actual);
    return 100.0 * acc / static_cast<double>(records.size());
}

inline double success_rate(const std::vector<EpisodeRecord>& records) {
    validate_records(records);
    double acc = 0.0;
    for (const auto& r : records) acc += r.success ? 1.0 : 0.0;
    return 100.0 * acc / static_cast<double>(records.size());
}

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
    int count = 0;
};

inline MeanStd mean_std(const std::vector<double>& v) {
    MeanStd out;
    out.count = static_cast<int>(v.size());
    if (v.empty()) return out;
    for (double x : v) out.mean += x;
    out.mean /= static_cast<double>(v.size());
    for (double x : v) out.std += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(out.std / static_cast<double>(v.size()));
    return out;
}

// Extra meters beyond the straight line, over successful flights only
// (crashed paths are truncated and would reward early failure).
inline MeanStd extra_distance(const std::vector<EpisodeRecord>& records) {
    validate_records(records);
    std::vector<double> extras;
    for (const auto& r : records)
        if (r.success) extras.push_back(r.actual - r.shortest);
    return mean_std(extras);
}

inline MeanStd average_speed(const std::vector<EpisodeRecord>& records) {
    validate_records(records);
    std::vector<double> speeds;
    speeds.reserve(records.size());
    for (const auto& r : records) speeds.push_back(r.mean_speed);
    return mean_std(speeds);
}

}  // namespace uavnav::eval
