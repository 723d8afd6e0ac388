#include "critsup/criticalness.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace critsup {

double progress(double x, const ProgressParams& p) noexcept {
    if (x < p.mu) return 1.0;
    if (std::isinf(x)) return 0.0;
    const double d = x - p.mu;
    return std::exp(-(d * d) / (2.0 * p.sigma2));
}

ComponentScore score_bal(const std::vector<double>& dt, int image_positive_count,
                         int predicted_class_count, const StageConfig& cfg, int n_classes) {
    const double p1 = cfg.enable_bal1 ? progress(image_positive_count, cfg.bal1) : 1.0;
    const double p2 = cfg.enable_bal2 ? progress(predicted_class_count, cfg.bal2_params(n_classes)) : 1.0;
    const double cp = p1 * p2;
    return {max_object_score(dt) * cp, cp};
}

ComponentScore score_rep(std::optional<std::int32_t> ldist, const StageConfig& cfg) {
    if (!cfg.enable_rep) return {0.0, 0.0};
    const double x = ldist ? static_cast<double>(*ldist) : std::numeric_limits<double>::infinity();
    const double cp = progress(x, cfg.rep);
    return {cfg.delta * -cp, cp};
}

ComponentScore score_hard(const std::vector<double>& dt, double mean_ldist, const StageConfig& cfg) {
    if (!cfg.enable_hard) return {0.0, 0.0};
    double sum = 0, mx = 0;
    for (double v : dt) {
        sum += v;
        mx = std::max(mx, v);
    }
    const double cp = progress(mean_ldist, cfg.hard);
    const double sign = cfg.hard_literal_sign ? -1.0 : 1.0;
    return {(sum - mx) * sign * cp, cp};
}

CriticalnessBreakdown evaluate_criticalness(const DetectionRecord& rec, const CampaignState& state,
                                            std::optional<std::int32_t> ldist, double mean_ldist,
                                            const StageConfig& cfg, int n_classes) {
    CriticalnessBreakdown b;
    b.sample = rec.sample;
    b.proposed_class = argmax_object_class(rec.dt);
    const auto bal = score_bal(rec.dt, state.image_positive_count(rec.sample.image_index),
                               state.stage_class_count(state.stage(), b.proposed_class), cfg,
                               n_classes);
    const auto rep = score_rep(ldist, cfg);
    const auto hard = score_hard(rec.dt, mean_ldist, cfg);
    b.c_bal = bal.value;
    b.cp_bal = bal.progress;
    b.c_rep = rep.value;
    b.cp_rep = rep.progress;
    b.c_hard = hard.value;
    b.cp_hard = hard.progress;
    b.total = b.c_bal + b.c_rep + b.c_hard;
    b.proposed_qa_type =
        (b.cp_hard > b.cp_bal && b.cp_hard > b.cp_rep) ? QaType::Type2 : QaType::Type1;
    return b;
}

std::optional<std::int32_t> LdistView::ldist_of(const SampleId& id) const {
    if (!graph || !field) return std::nullopt;
    auto idx = graph->index_of(id);
    if (!idx || !field->reached(*idx)) return std::nullopt;
    return field->at(*idx);
}

double LdistView::mean_ldist() const {
    return field ? field->mean_ldist() : std::numeric_limits<double>::infinity();
}

CriticalnessBreakdown select_next(std::span<const DetectionRecord> pool, const CampaignState& state,
                                  const LdistView& ldist, const StageConfig& cfg, int n_classes) {
    if (pool.empty()) throw Error("pool_exhausted", "no unlabeled samples left in the stage pool");
    const double mean = ldist.mean_ldist();
    const auto n = static_cast<std::int64_t>(pool.size());
    std::vector<CriticalnessBreakdown> scored(pool.size());

#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto& rec = pool[static_cast<std::size_t>(i)];
        scored[static_cast<std::size_t>(i)] =
            evaluate_criticalness(rec, state, ldist.ldist_of(rec.sample), mean, cfg, n_classes);
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < scored.size(); ++i) {
        const auto& a = scored[i];
        const auto& b = scored[best];
        if (a.total > b.total || (a.total == b.total && a.sample < b.sample)) best = i;
    }
    return scored[best];
}

}  // namespace critsup
