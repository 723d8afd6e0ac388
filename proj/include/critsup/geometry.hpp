#pragma once

#include <span>
#include <utility>
#include <vector>

#include "critsup/types.hpp"

namespace critsup {

/// Object proposals of one image. `boxes` and `ids` are parallel.
struct ProposalSet {
    int image_index = 0;
    std::vector<BoundingBox> boxes;
    std::vector<SampleId> ids;

    /// Builds ids as (image_index, 0..n-1).
    static ProposalSet from_boxes(int image_index, std::vector<BoundingBox> boxes);
    std::size_t size() const noexcept { return boxes.size(); }
};

/// Intersection over union of two valid boxes, computed on areas.
double iou(const BoundingBox& a, const BoundingBox& b) noexcept;

/// Highest IoU of `box` against any member of `others`; 0 when empty.
double max_iou(const BoundingBox& box, std::span<const BoundingBox> others) noexcept;

/// Members of `a` whose IoU with every member of `b` is below tau.
/// Order of `a` is preserved.
std::vector<BoundingBox> inv_set(std::span<const BoundingBox> a, std::span<const BoundingBox> b,
                                 double tau);

/// Index form of inv_set: positions into `a` that survive.
std::vector<std::size_t> inv_set_indices(std::span<const BoundingBox> a,
                                         std::span<const BoundingBox> b, double tau);

/// Negative object proposals of one image. Candidates are proposals whose best
/// object-class score reaches epsilon; the NOP set is the inverse set of the
/// proposals against them. Throws Error("missing_detection") when a proposal
/// has no detection record.
std::vector<SampleId> extract_nop(const ProposalSet& proposals,
                                  std::span<const DetectionRecord> detections, double epsilon,
                                  double tau);

/// Detector-free variant: candidates are boxes whose height/width ratio lies
/// in [aspect_min, aspect_max].
std::vector<SampleId> extract_nop_prior(const ProposalSet& proposals,
                                        std::pair<double, double> aspect_range, double tau);

/// Greedy per-class non-maximum suppression. Each detection competes in its
/// argmax object class with its max object score; a box is dropped when its
/// IoU with an already kept box of the same class exceeds `overlap`. Returns
/// kept ids in ascending order. Score ties resolve to the smaller SampleId.
std::vector<SampleId> nms(std::span<const DetectionRecord> detections,
                          std::span<const BoundingBox> boxes, double overlap);

}  // namespace critsup
