#include "critsup/geometry.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

namespace critsup {

ProposalSet ProposalSet::from_boxes(int image_index, std::vector<BoundingBox> boxes) {
    ProposalSet p;
    p.image_index = image_index;
    p.ids.reserve(boxes.size());
    for (std::size_t j = 0; j < boxes.size(); ++j)
        p.ids.push_back({image_index, static_cast<std::int32_t>(j)});
    p.boxes = std::move(boxes);
    return p;
}

double iou(const BoundingBox& a, const BoundingBox& b) noexcept {
    const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    if (iw <= 0 || ih <= 0) return 0.0;
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    return std::clamp(inter / uni, 0.0, 1.0);
}

double max_iou(const BoundingBox& box, std::span<const BoundingBox> others) noexcept {
    double best = 0;
    for (const auto& o : others) best = std::max(best, iou(box, o));
    return best;
}

std::vector<std::size_t> inv_set_indices(std::span<const BoundingBox> a,
                                         std::span<const BoundingBox> b, double tau) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool clear = std::all_of(b.begin(), b.end(),
                                       [&](const BoundingBox& x) { return iou(a[i], x) < tau; });
        if (clear) out.push_back(i);
    }
    return out;
}

std::vector<BoundingBox> inv_set(std::span<const BoundingBox> a, std::span<const BoundingBox> b,
                                 double tau) {
    std::vector<BoundingBox> out;
    for (auto i : inv_set_indices(a, b, tau)) out.push_back(a[i]);
    return out;
}

namespace {

std::vector<SampleId> inverse_of_candidates(const ProposalSet& proposals,
                                            const std::vector<bool>& is_candidate, double tau) {
    std::vector<BoundingBox> candidates;
    for (std::size_t j = 0; j < proposals.size(); ++j)
        if (is_candidate[j]) candidates.push_back(proposals.boxes[j]);
    std::vector<SampleId> out;
    for (auto j : inv_set_indices(proposals.boxes, candidates, tau)) out.push_back(proposals.ids[j]);
    return out;
}

}  // namespace

std::vector<SampleId> extract_nop(const ProposalSet& proposals,
                                  std::span<const DetectionRecord> detections, double epsilon,
                                  double tau) {
    std::unordered_map<SampleId, const DetectionRecord*, SampleIdHash> by_id;
    for (const auto& d : detections) by_id.emplace(d.sample, &d);

    std::vector<bool> is_candidate(proposals.size(), false);
    for (std::size_t j = 0; j < proposals.size(); ++j) {
        auto it = by_id.find(proposals.ids[j]);
        if (it == by_id.end())
            throw Error("missing_detection",
                        "no detection record for proposal " + to_string(proposals.ids[j]));
        is_candidate[j] = max_object_score(it->second->dt) >= epsilon;
    }
    return inverse_of_candidates(proposals, is_candidate, tau);
}

std::vector<SampleId> extract_nop_prior(const ProposalSet& proposals,
                                        std::pair<double, double> aspect_range, double tau) {
    const auto [lo, hi] = aspect_range;
    if (!(lo >= 0 && lo < hi)) throw Error("invalid_argument", "aspect range must satisfy 0 <= min < max");
    std::vector<bool> is_candidate(proposals.size(), false);
    for (std::size_t j = 0; j < proposals.size(); ++j) {
        const double aspect = proposals.boxes[j].height() / proposals.boxes[j].width();
        is_candidate[j] = aspect >= lo && aspect <= hi;
    }
    return inverse_of_candidates(proposals, is_candidate, tau);
}

std::vector<SampleId> nms(std::span<const DetectionRecord> detections,
                          std::span<const BoundingBox> boxes, double overlap) {
    if (detections.size() != boxes.size())
        throw Error("invalid_argument", "nms: detections and boxes differ in length");

    std::vector<std::size_t> order(detections.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> score(detections.size());
    std::vector<ClassId> cls(detections.size());
    for (std::size_t i = 0; i < detections.size(); ++i) {
        score[i] = max_object_score(detections[i].dt);
        cls[i] = argmax_object_class(detections[i].dt);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (score[a] != score[b]) return score[a] > score[b];
        return detections[a].sample < detections[b].sample;
    });

    std::unordered_map<ClassId, std::vector<std::size_t>> kept_by_class;
    std::vector<SampleId> kept;
    for (auto i : order) {
        auto& same = kept_by_class[cls[i]];
        const bool suppressed = std::any_of(same.begin(), same.end(), [&](std::size_t k) {
            return iou(boxes[i], boxes[k]) > overlap;
        });
        if (suppressed) continue;
        same.push_back(i);
        kept.push_back(detections[i].sample);
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

}  // namespace critsup
