#pragma once

#include <cstdint>
#include <algorithm>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "critsup/types.hpp"

namespace critsup {

/// QA tallies. A QA is valid when it yields an object label.
struct QaCounters {
    int qa1 = 0;
    int qa2 = 0;
    int valid_qa1 = 0;
    int valid_qa2 = 0;
    int full = 0;

    bool operator==(const QaCounters&) const = default;
};

/// Event-sourced campaign state. Every counter is derived from `labels`;
/// the only mutation is append().
class CampaignState {
public:
    CampaignState() = default;
    explicit CampaignState(std::uint64_t rng_seed) : rng_seed_(rng_seed) {}

    /// Validates and folds one event. Throws Error("duplicate_positive")
    /// or Error("out_of_order") without modifying the state.
    void append(const LabelEvent& ev);

    /// Advances the current stage; stages never move backwards.
    void begin_stage(int stage) { stage_ = std::max(stage_, stage); }

    const std::vector<LabelEvent>& labels() const noexcept { return labels_; }
    const std::map<ClassId, int>& class_counts() const noexcept { return class_counts_; }
    const std::map<int, int>& positive_count_per_image() const noexcept { return per_image_; }
    int stage() const noexcept { return stage_; }
    std::uint64_t rng_seed() const noexcept { return rng_seed_; }

    int class_count(ClassId c) const;
    int image_positive_count(int image) const;
    /// Positive QA labels of class c gathered in the given stage (FULL excluded).
    int stage_class_count(int stage, ClassId c) const;

    const QaCounters& counters() const noexcept { return totals_; }
    QaCounters stage_counters(int stage) const;

    /// True if the sample was asked (QA) in any stage.
    bool is_asked(const SampleId& id) const { return asked_.count(id) != 0; }
    const std::set<SampleId>& asked() const noexcept { return asked_; }
    std::int64_t next_sequence() const noexcept { return last_sequence_ + 1; }
    int positive_events() const noexcept { return positive_events_; }

private:
    std::uint64_t rng_seed_ = 0;
    std::vector<LabelEvent> labels_;
    std::map<ClassId, int> class_counts_;
    std::map<int, int> per_image_;
    std::map<int, std::map<ClassId, int>> stage_class_counts_;
    std::map<int, QaCounters> stage_counters_;
    QaCounters totals_;
    std::set<SampleId> asked_;
    std::set<SampleId> positive_qa_ids_;
    std::set<SampleId> positive_full_ids_;
    std::int64_t last_sequence_ = 0;
    int positive_events_ = 0;
    int stage_ = 0;
};

/// Folds an ordered event list into a fresh state.
CampaignState replay_state(const std::vector<LabelEvent>& events, std::uint64_t rng_seed = 0);

// Append-only JSON-lines event log.
std::string event_to_json_line(const LabelEvent& ev);
LabelEvent event_from_json_line(const std::string& line);

/// Reads every complete line. A trailing line without a newline (a write
/// interrupted mid-line) is ignored.
std::vector<LabelEvent> read_event_log(std::istream& in);
std::vector<LabelEvent> read_event_log_file(const std::string& path);

}  // namespace critsup
