#pragma once

// Seeded generators and independent reference implementations for tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "critsup/types.hpp"

namespace testkit {

using namespace critsup;

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool coin(double p = 0.5) { return real(0, 1) < p; }

    BoundingBox box(double extent = 100, double min_side = 1, double max_side = 60) {
        const double w = real(min_side, max_side), h = real(min_side, max_side);
        const double x = real(0, extent), y = real(0, extent);
        return {x, y, x + w, y + h};
    }

    /// Box on an integer grid, so coincident edges and exact ties show up.
    BoundingBox grid_box(int extent = 12) {
        const int x0 = integer(0, extent - 1), y0 = integer(0, extent - 1);
        const int x1 = integer(x0 + 1, extent), y1 = integer(y0 + 1, extent);
        return {double(x0), double(y0), double(x1), double(y1)};
    }

    /// Probability vector of length n_classes + 1.
    std::vector<double> simplex(int n_classes) {
        std::vector<double> v(static_cast<std::size_t>(n_classes) + 1);
        double s = 0;
        for (auto& x : v) s += (x = -std::log(real(1e-12, 1)));
        for (auto& x : v) x /= s;
        return v;
    }

    std::vector<float> features(int dim, double scale = 1, bool quantized = false) {
        std::vector<float> f(static_cast<std::size_t>(dim));
        for (auto& x : f) x = quantized ? float(integer(-2, 2)) : float(real(-scale, scale));
        return f;
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

/// IoU by coordinate compression: the plane is cut along every box edge and
/// each cell is tested by its centre.
inline double cell_iou(const BoundingBox& a, const BoundingBox& b) {
    std::vector<double> xs{a.x_min, a.x_max, b.x_min, b.x_max};
    std::vector<double> ys{a.y_min, a.y_max, b.y_min, b.y_max};
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    auto inside = [](const BoundingBox& r, double x, double y) {
        return r.x_min <= x && x <= r.x_max && r.y_min <= y && y <= r.y_max;
    };
    double inter = 0, uni = 0;
    for (int i = 0; i + 1 < 4; ++i)
        for (int j = 0; j + 1 < 4; ++j) {
            const double w = xs[i + 1] - xs[i], h = ys[j + 1] - ys[j];
            if (w <= 0 || h <= 0) continue;
            const double cx = (xs[i] + xs[i + 1]) / 2, cy = (ys[j] + ys[j + 1]) / 2;
            const bool ia = inside(a, cx, cy), ib = inside(b, cx, cy);
            if (ia && ib) inter += w * h;
            if (ia || ib) uni += w * h;
        }
    return uni > 0 ? inter / uni : 0;
}

inline std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("critsup_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline LabelEvent qa_event(SampleId id, QaType type, std::optional<ClassId> asked, Answer ans, int stage,
                           std::int64_t seq) {
    LabelEvent ev;
    ev.sample = id;
    ev.qa_type = type;
    ev.asked_class = asked;
    ev.answer = ans;
    ev.stage = stage;
    ev.sequence = seq;
    ev.elapsed_cost_seconds = type == QaType::Type1 ? 1.6 : 2.4;
    return ev;
}

}  // namespace testkit
