#pragma once

#include <span>
#include <utility>
#include <vector>

#include "critsup/geometry.hpp"
#include "critsup/types.hpp"

namespace critsup {

struct TrainingSet {
    std::vector<std::pair<SampleId, ClassId>> positives;
    std::vector<SampleId> negatives;
    int stage = 0;

    void merge(const TrainingSet& other);
};

struct LabeledBox {
    BoundingBox box;
    ClassId cls = 1;
};

/// Composes one image's training samples from its QA-labeled positives.
///
/// Positives are proposals with IoU >= th_fg against some labeled positive,
/// inheriting the class of the best match (ties to the smaller class).
/// Negatives come from the NOP members: first those whose best IoU lies in
/// [th_lo, th_hi], then up to `disjoint_negative_cap` members below th_lo,
/// nearest first. Images without labeled positives contribute nothing.
/// Output lists are sorted by SampleId.
TrainingSet compose(std::span<const LabeledBox> qa_positives, const ProposalSet& proposals,
                    std::span<const SampleId> nop, const StageConfig& cfg);

}  // namespace critsup
