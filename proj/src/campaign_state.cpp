#include "critsup/campaign_state.hpp"

#include <fstream>
#include <istream>

#include "critsup/json_codec.hpp"

namespace critsup {

void CampaignState::append(const LabelEvent& ev) {
    if (ev.sequence <= last_sequence_)
        throw Error("out_of_order", "event sequence " + std::to_string(ev.sequence) +
                                        " does not follow " + std::to_string(last_sequence_));
    if (ev.qa_type == QaType::Type1 && !ev.asked_class)
        throw Error("invalid_event", "TYPE1 event without asked_class for " + to_string(ev.sample));
    if (ev.qa_type == QaType::Full && !ev.box)
        throw Error("invalid_event", "FULL event without box for " + to_string(ev.sample));

    const auto positive = ev.positive_class();
    const bool full = ev.qa_type == QaType::Full;
    if (positive) {
        const auto& seen = full ? positive_full_ids_ : positive_qa_ids_;
        if (seen.count(ev.sample))
            throw Error("duplicate_positive",
                        "sample " + to_string(ev.sample) + " already has a positive label");
    }

    labels_.push_back(ev);
    last_sequence_ = ev.sequence;
    stage_ = std::max(stage_, ev.stage);

    QaCounters& st = stage_counters_[ev.stage];
    for (QaCounters* c : {&totals_, &st}) {
        switch (ev.qa_type) {
            case QaType::Type1:
                ++c->qa1;
                if (positive) ++c->valid_qa1;
                break;
            case QaType::Type2:
                ++c->qa2;
                if (positive) ++c->valid_qa2;
                break;
            case QaType::Full:
                ++c->full;
                break;
        }
    }
    if (!full) asked_.insert(ev.sample);
    if (positive) {
        (full ? positive_full_ids_ : positive_qa_ids_).insert(ev.sample);
        ++class_counts_[*positive];
        ++per_image_[ev.sample.image_index];
        if (!full) ++stage_class_counts_[ev.stage][*positive];
        ++positive_events_;
    }
}

int CampaignState::class_count(ClassId c) const {
    auto it = class_counts_.find(c);
    return it == class_counts_.end() ? 0 : it->second;
}

int CampaignState::image_positive_count(int image) const {
    auto it = per_image_.find(image);
    return it == per_image_.end() ? 0 : it->second;
}

int CampaignState::stage_class_count(int stage, ClassId c) const {
    auto s = stage_class_counts_.find(stage);
    if (s == stage_class_counts_.end()) return 0;
    auto it = s->second.find(c);
    return it == s->second.end() ? 0 : it->second;
}

QaCounters CampaignState::stage_counters(int stage) const {
    auto it = stage_counters_.find(stage);
    return it == stage_counters_.end() ? QaCounters{} : it->second;
}

CampaignState replay_state(const std::vector<LabelEvent>& events, std::uint64_t rng_seed) {
    CampaignState state(rng_seed);
    for (const auto& ev : events) state.append(ev);
    return state;
}

std::string event_to_json_line(const LabelEvent& ev) {
    return nlohmann::json(ev).dump();
}

LabelEvent event_from_json_line(const std::string& line) {
    try {
        return nlohmann::json::parse(line).get<LabelEvent>();
    } catch (const nlohmann::json::exception& e) {
        throw Error("corrupt_log", std::string("unreadable event line: ") + e.what());
    }
}

std::vector<LabelEvent> read_event_log(std::istream& in) {
    std::vector<LabelEvent> events;
    std::string line;
    while (std::getline(in, line)) {
        if (in.eof()) break;  // no terminating newline: interrupted write
        if (line.empty()) continue;
        events.push_back(event_from_json_line(line));
    }
    return events;
}

std::vector<LabelEvent> read_event_log_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    return read_event_log(in);
}

}  // namespace critsup
