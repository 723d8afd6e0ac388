#pragma once

#include <cstdint>
#include <vector>

#include "critsup/geometry.hpp"
#include "critsup/oracle.hpp"
#include "critsup/trainset.hpp"
#include "critsup/types.hpp"

namespace critsup {

struct CorpusParams {
    /// Scene seed: object placement, proposals, instance noise.
    std::uint64_t seed = 1;
    /// Seed of the class centroids. Corpora sharing it (e.g. a train split
    /// and a held-out split) describe the same object classes.
    std::uint64_t world_seed = 1;
    int n_images = 200;
    int n_classes = 5;
    int objects_per_image = 2;
    /// 0: proposals are exactly the planted boxes. L > 0: each object gets L
    /// jittered proposals and each image 2L background boxes.
    int clutter_level = 3;
    int feature_dim = 16;
    /// Distance scale between class centroids.
    double separation = 0.8;
    /// Per-dimension standard deviation of instance features.
    double spread = 1.0;
    /// Relative class frequencies (length n_classes); empty = uniform.
    std::vector<double> class_weights;
    double image_width = 640;
    double image_height = 480;
};

/// Relative frequencies 1, 1/2, ..., 1/n.
std::vector<double> zipf_weights(int n_classes);

/// Synthetic scenes with planted objects, proposals and latent features.
/// A proposal's feature blends its best-overlapping object's instance feature
/// with background noise in proportion to that IoU.
struct SyntheticCorpus {
    CorpusParams params;
    GroundTruth truth;
    std::vector<ProposalSet> proposals;       ///< one per image, image_index = position
    std::vector<std::vector<float>> centroids;  ///< index 0 = background
    std::vector<SampleId> ids;                ///< all proposals, ascending
    std::vector<std::vector<float>> features;   ///< parallel to ids

    int n_classes() const noexcept { return params.n_classes; }
    std::size_t n_samples() const noexcept { return ids.size(); }
    /// Position of a sample in ids/features; throws Error("unknown_sample").
    std::size_t index_of(const SampleId& id) const;
    const std::vector<float>& feature(const SampleId& id) const { return features[index_of(id)]; }
    const BoundingBox& box(const SampleId& id) const;
};

/// Deterministic in (params). Throws Error("invalid_argument") for
/// n_classes < 2 or malformed weights.
SyntheticCorpus generate_corpus(const CorpusParams& params);

/// Softmax-normalized linear classifier over standardized features.
struct StageDetector {
    int n_classes = 0;  ///< object classes; outputs have n_classes + 1 entries
    std::vector<double> mean;
    std::vector<double> scale;
    /// (n_classes + 1) rows of (dim + 1) weights, bias last.
    std::vector<std::vector<double>> weights;
    double temperature = 1.0;

    bool fitted() const noexcept { return !weights.empty(); }
    std::vector<double> logits(const std::vector<float>& ft) const;
    std::vector<double> scores(const std::vector<float>& ft) const;
};

struct FitOptions {
    int iterations = 300;
    double learning_rate = 0.5;
    double l2 = 1e-3;
};

/// Fits the detector on the training set's samples. Classes are weighted
/// inversely to their frequency. Throws Error("invalid_training_set") when
/// there are no positives or fewer than two distinct labels.
StageDetector fit_stage(const TrainingSet& training, const SyntheticCorpus& corpus,
                        int n_classes, const FitOptions& opts = {});

/// Detection record for every proposal of the corpus, ascending SampleId.
std::vector<DetectionRecord> infer(const StageDetector& detector, const SyntheticCorpus& corpus);

/// Ground-truth training samples of fully labeled images: proposals with
/// IoU >= th_fg against an object are positives of its class, proposals
/// whose best IoU is at most th_hi are negatives.
TrainingSet full_label_training_set(const SyntheticCorpus& corpus, std::span<const int> images,
                                    const StageConfig& cfg);

/// Held-out evaluation: proposals with best IoU >= 0.6 carry the object's
/// class, those at most 0.4 are background, the rest are skipped. Returns the
/// mean per-class recall over classes 0..N that have evaluation samples.
double balanced_accuracy(const StageDetector& detector, const SyntheticCorpus& test);

}  // namespace critsup
