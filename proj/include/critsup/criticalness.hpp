#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "critsup/campaign_state.hpp"
#include "critsup/knn_graph.hpp"
#include "critsup/types.hpp"

namespace critsup {

/// Piecewise progress function: 1 below mu, Gaussian-ratio decay
/// exp(-(x - mu)^2 / (2 sigma2)) from mu on. Returns 0 at +infinity.
double progress(double x, const ProgressParams& params) noexcept;

struct ComponentScore {
    double value = 0;     ///< c
    double progress = 0;  ///< cp
};

/// Class balancing: best object score damped by how many positives the
/// sample's image already has and how many positives its predicted class
/// collected in the current stage.
ComponentScore score_bal(const std::vector<double>& dt, int image_positive_count,
                         int predicted_class_count, const StageConfig& cfg, int n_classes);

/// Representativeness: a redundancy penalty -delta * P(ldist). Unreached
/// nodes (nullopt) score 0.
ComponentScore score_rep(std::optional<std::int32_t> ldist, const StageConfig& cfg);

/// Hardness: (sum(dt) - max(dt)) * P(mean ldist), the progress term
/// switching the component on once labels are dense.
ComponentScore score_hard(const std::vector<double>& dt, double mean_ldist, const StageConfig& cfg);

struct CriticalnessBreakdown {
    SampleId sample;
    double c_bal = 0, c_rep = 0, c_hard = 0;
    double cp_bal = 0, cp_rep = 0, cp_hard = 0;
    double total = 0;
    QaType proposed_qa_type = QaType::Type1;
    ClassId proposed_class = kBackground;
};

/// Scores one sample. `ldist` is nullopt for nodes outside the graph or
/// unreached by any label.
CriticalnessBreakdown evaluate_criticalness(const DetectionRecord& rec, const CampaignState& state,
                                            std::optional<std::int32_t> ldist, double mean_ldist,
                                            const StageConfig& cfg, int n_classes);

/// Read-only view the selector needs to look up hop distances.
struct LdistView {
    const KnnGraph* graph = nullptr;
    const LdistField* field = nullptr;

    std::optional<std::int32_t> ldist_of(const SampleId& id) const;
    double mean_ldist() const;
};

/// Returns the breakdown of the most critical pool sample. Ties go to the
/// smaller SampleId. Throws Error("pool_exhausted") on an empty pool.
CriticalnessBreakdown select_next(std::span<const DetectionRecord> pool, const CampaignState& state,
                                  const LdistView& ldist, const StageConfig& cfg, int n_classes);

}  // namespace critsup
