#pragma once

#include <set>
#include <string>
#include <vector>

namespace critsup {

/// Seconds per labeling action.
struct TimeModel {
    double t_fl = 0;   ///< draw a tight bounding box
    double t_qa1 = 0;  ///< answer a yes/no question
    double t_qa2 = 0;  ///< pick a class from a list
    double t_ver = 0;  ///< verify no object is missing in an image

    bool operator==(const TimeModel&) const = default;
};

enum class TimeProfile { HQ, MQ };

TimeProfile time_profile_from_string(const std::string& s);
std::string to_string(TimeProfile p);

/// Crowd-sourcing constants: HQ (42.0, 1.6, 2.4, 2.6), MQ (26.0, 1.6, 2.4, 0.0).
TimeModel time_model(TimeProfile profile);

/// Per-image object and class counts, indexed by image ordinal.
struct DatasetStats {
    std::vector<int> objects;
    std::vector<int> classes;

    std::size_t n_images() const noexcept { return objects.size(); }
    /// Throws Error("invalid_stats") when lengths differ or a class count
    /// exceeds its object count.
    void validate() const;
};

/// Labeling time ratios, each normalized by full labeling of the whole set.
double eltr_fs(long n_fl, long n_total);
double eltr_ws(const DatasetStats& stats, const TimeModel& tm);
double eltr_cs(const DatasetStats& stats, const std::set<int>& fl_images, long n_qa1, long n_qa2,
               const TimeModel& tm);

}  // namespace critsup
