#include "critsup/trainset.hpp"

#include <algorithm>
#include <set>

namespace critsup {

void TrainingSet::merge(const TrainingSet& other) {
    positives.insert(positives.end(), other.positives.begin(), other.positives.end());
    negatives.insert(negatives.end(), other.negatives.begin(), other.negatives.end());
    stage = std::max(stage, other.stage);
}

TrainingSet compose(std::span<const LabeledBox> qa_positives, const ProposalSet& proposals,
                    std::span<const SampleId> nop, const StageConfig& cfg) {
    TrainingSet out;
    if (qa_positives.empty()) return out;

    const std::set<SampleId> nop_ids(nop.begin(), nop.end());
    std::vector<std::pair<double, SampleId>> disjoint;

    for (std::size_t j = 0; j < proposals.size(); ++j) {
        const auto& box = proposals.boxes[j];
        double best = 0;
        ClassId best_cls = kBackground;
        for (const auto& lp : qa_positives) {
            const double v = iou(box, lp.box);
            if (v > best || (v == best && v > 0 && lp.cls < best_cls)) {
                best = v;
                best_cls = lp.cls;
            }
        }
        const auto& id = proposals.ids[j];
        if (best >= cfg.th_fg) {
            out.positives.emplace_back(id, best_cls);
        } else if (nop_ids.count(id)) {
            if (best >= cfg.th_lo && best <= cfg.th_hi)
                out.negatives.push_back(id);
            else if (best < cfg.th_lo)
                disjoint.emplace_back(best, id);
        }
    }

    std::sort(disjoint.begin(), disjoint.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    const auto take = std::min(disjoint.size(), static_cast<std::size_t>(cfg.disjoint_negative_cap));
    for (std::size_t i = 0; i < take; ++i) out.negatives.push_back(disjoint[i].second);

    std::sort(out.positives.begin(), out.positives.end());
    std::sort(out.negatives.begin(), out.negatives.end());
    return out;
}

}  // namespace critsup
