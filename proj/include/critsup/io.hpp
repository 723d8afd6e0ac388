#pragma once

// On-disk formats shared by the pipeline, the CLI and corpus export.
//
//   proposals     JSON array of {image_index, boxes: [[x_min, y_min, x_max, y_max], ...]}
//   features      little-endian float32, row-major [n_samples x dim], plus a
//                 JSON sidecar {n_samples, dim, sample_ids: [...]}
//   scores        JSON lines {sample_id, dt: [...]}
//   ground truth  JSON array of {image_index, objects: [{box, class}, ...]}
//   training set  JSON lines {sample_id, role: "pos"|"neg", class}

#include <filesystem>
#include <string>
#include <vector>

#include "critsup/criticalness.hpp"
#include "critsup/geometry.hpp"
#include "critsup/oracle.hpp"
#include "critsup/sim_detector.hpp"
#include "critsup/trainset.hpp"
#include "json.hpp"

namespace critsup::io {

namespace fs = std::filesystem;

nlohmann::json read_json(const fs::path& path);
/// Writes through a temporary file and renames it into place.
void write_json(const fs::path& path, const nlohmann::json& j);

std::vector<ProposalSet> read_proposals(const fs::path& path);
void write_proposals(const fs::path& path, const std::vector<ProposalSet>& proposals);

struct FeatureTable {
    std::vector<SampleId> ids;
    std::vector<std::vector<float>> rows;
    std::size_t dim = 0;
};

/// `sidecar` defaults to the binary path with its extension replaced by .json.
FeatureTable read_features(const fs::path& bin, fs::path sidecar = {});
void write_features(const fs::path& bin, const FeatureTable& table, fs::path sidecar = {});

std::vector<DetectionRecord> read_scores(const fs::path& path);
void write_scores(const fs::path& path, const std::vector<DetectionRecord>& records);

GroundTruth read_ground_truth(const fs::path& path);
void write_ground_truth(const fs::path& path, const GroundTruth& truth);

void write_training_set(const fs::path& path, const TrainingSet& ts);
TrainingSet read_training_set(const fs::path& path);

nlohmann::json breakdown_to_json(const CriticalnessBreakdown& b);

/// Assembles a corpus from the proposal, feature and ground-truth files.
/// Throws Error("invalid_input") when features do not cover every proposal.
SyntheticCorpus load_corpus(const fs::path& proposals, const fs::path& features,
                            const fs::path& ground_truth, int n_classes);

/// Writes proposals.json, features.bin (+ features.json) and ground_truth.json.
void export_corpus(const SyntheticCorpus& corpus, const fs::path& dir);

}  // namespace critsup::io
