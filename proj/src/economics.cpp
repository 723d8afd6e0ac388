#include "critsup/economics.hpp"

#include "critsup/types.hpp"

namespace critsup {

TimeProfile time_profile_from_string(const std::string& s) {
    if (s == "hq" || s == "HQ") return TimeProfile::HQ;
    if (s == "mq" || s == "MQ") return TimeProfile::MQ;
    throw Error("invalid_argument", "unknown time profile '" + s + "' (expected hq or mq)");
}

std::string to_string(TimeProfile p) { return p == TimeProfile::HQ ? "HQ" : "MQ"; }

TimeModel time_model(TimeProfile profile) {
    switch (profile) {
        case TimeProfile::HQ: return {42.0, 1.6, 2.4, 2.6};
        case TimeProfile::MQ: return {26.0, 1.6, 2.4, 0.0};
    }
    return {};
}

void DatasetStats::validate() const {
    if (objects.size() != classes.size())
        throw Error("invalid_stats", "object and class count vectors differ in length");
    for (std::size_t i = 0; i < objects.size(); ++i) {
        if (objects[i] < 0 || classes[i] < 0) throw Error("invalid_stats", "negative count");
        if (objects[i] > 0 && classes[i] > objects[i])
            throw Error("invalid_stats", "image " + std::to_string(i) + " has more classes than objects");
    }
}

namespace {

double full_labeling_time(const DatasetStats& stats, const TimeModel& tm) {
    double total = 0;
    for (int n : stats.objects) total += tm.t_fl * n;
    if (!(total > 0)) throw Error("empty_dataset", "dataset has no objects to normalize by");
    return total;
}

}  // namespace

double eltr_fs(long n_fl, long n_total) {
    if (n_total <= 0 || n_fl < 0 || n_fl > n_total)
        throw Error("invalid_argument", "eltr_fs needs 0 <= n_fl <= n_total and n_total > 0");
    return static_cast<double>(n_fl) / static_cast<double>(n_total);
}

double eltr_ws(const DatasetStats& stats, const TimeModel& tm) {
    stats.validate();
    const double denom = full_labeling_time(stats, tm);
    double num = 0;
    for (std::size_t i = 0; i < stats.n_images(); ++i) num += tm.t_ver + tm.t_qa2 * stats.classes[i];
    return num / denom;
}

double eltr_cs(const DatasetStats& stats, const std::set<int>& fl_images, long n_qa1, long n_qa2,
               const TimeModel& tm) {
    stats.validate();
    const double denom = full_labeling_time(stats, tm);
    double num = tm.t_qa1 * static_cast<double>(n_qa1) + tm.t_qa2 * static_cast<double>(n_qa2);
    for (int i : fl_images) {
        if (i < 0 || static_cast<std::size_t>(i) >= stats.n_images())
            throw Error("invalid_argument", "full-label image " + std::to_string(i) + " outside dataset");
        num += tm.t_fl * stats.objects[static_cast<std::size_t>(i)];
    }
    return num / denom;
}

}  // namespace critsup
