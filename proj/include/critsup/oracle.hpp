#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "critsup/campaign_state.hpp"
#include "critsup/criticalness.hpp"
#include "critsup/economics.hpp"
#include "critsup/types.hpp"

namespace critsup {

struct GroundTruthObject {
    BoundingBox box;
    ClassId cls = 1;
};

/// Ground-truth objects per image.
class GroundTruth {
public:
    void add(int image, const BoundingBox& box, ClassId cls);
    const std::vector<GroundTruthObject>& objects(int image) const;
    const std::map<int, std::vector<GroundTruthObject>>& images() const noexcept { return images_; }
    std::size_t object_count() const;

private:
    std::map<int, std::vector<GroundTruthObject>> images_;
};

/// Simulated human thresholding: each question draws t ~ U[0.6 - psi, 0.6 + psi].
struct NoiseModel {
    static constexpr double kBaseThreshold = 0.6;

    double psi = 0;
    std::uint64_t seed = 0;

    /// Throws Error("invalid_argument") unless 0 <= psi < 0.6.
    void validate() const;
    /// Threshold for one question, keyed by (seed, stage, sequence) so a
    /// resumed campaign redraws the same value.
    double draw_threshold(int stage, std::int64_t sequence) const;
};

/// YES iff some ground-truth object of `asked` overlaps `box` with IoU >= threshold.
Answer answer_type1(const BoundingBox& box, int image, ClassId asked, const GroundTruth& truth,
                    double threshold);

/// Class of the highest-IoU object when that IoU reaches the threshold,
/// otherwise BACKGROUND. IoU ties go to the smaller class ordinal.
Answer answer_type2(const BoundingBox& box, int image, const GroundTruth& truth, double threshold);

/// Simulated annotator answering from ground truth under a noise model.
class SimulatedOracle {
public:
    SimulatedOracle(const GroundTruth& truth, NoiseModel noise);

    Answer answer(const BoundingBox& box, const CriticalnessBreakdown& question, int stage,
                  std::int64_t sequence) const;

private:
    const GroundTruth* truth_;
    NoiseModel noise_;
};

/// Builds the LabelEvent for an answered question and appends it. The event
/// carries the next sequence number and the time model's cost for its QA
/// type. Throws Error("already_labeled") when the sample was asked before,
/// and Error("invalid_answer") when the answer does not fit the QA type.
LabelEvent record_answer(CampaignState& state, const CriticalnessBreakdown& breakdown,
                         const Answer& answer, const TimeModel& tm, int stage);

}  // namespace critsup
