#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "critsup/campaign_state.hpp"
#include "critsup/criticalness.hpp"
#include "critsup/economics.hpp"
#include "critsup/knn_graph.hpp"
#include "critsup/oracle.hpp"
#include "critsup/sim_detector.hpp"
#include "critsup/trainset.hpp"
#include "json.hpp"

namespace critsup {

namespace fs = std::filesystem;

enum class CampaignMode { Simulated, Live };

/// Campaign configuration, stored as manifest.json in the campaign directory.
/// Data paths are relative to that directory.
struct CampaignManifest {
    std::uint64_t seed = 1;
    CampaignMode mode = CampaignMode::Simulated;
    TimeProfile profile = TimeProfile::HQ;
    int n_classes = 0;

    std::string proposals = "proposals.json";
    std::string features = "features.bin";
    std::string ground_truth = "ground_truth.json";
    /// Detector outputs for observe-ask stage s at scores[s - 1]. Only read
    /// when the surrogate detector is off.
    std::vector<std::string> scores;

    /// Fully labeled images. When empty, fl_count images are drawn with the seed.
    std::vector<int> fl_images;
    int fl_count = 0;

    /// Fit the built-in detector after each stage instead of reading scores.
    bool surrogate_detector = true;
    /// Generator parameters the corpus files were exported from, if synthetic.
    std::optional<CorpusParams> synthetic;
    /// Held-out corpus for the per-stage accuracy metric.
    std::optional<CorpusParams> held_out;

    std::vector<StageConfig> stages;
    double psi = 0;
    std::string image_root;

    /// Throws Error("invalid_manifest").
    void validate() const;
};

void to_json(nlohmann::json& j, const CorpusParams& p);
void from_json(const nlohmann::json& j, CorpusParams& p);
void to_json(nlohmann::json& j, const CampaignManifest& m);
void from_json(const nlohmann::json& j, CampaignManifest& m);

/// A question waiting for an answer.
struct Question {
    std::int64_t sequence = 0;
    int stage = 0;
    SampleId sample;
    BoundingBox box;
    CriticalnessBreakdown breakdown;
};

nlohmann::json question_to_json(const Question& q, int n_classes, const std::string& image_root);

struct StageReport {
    int stage = 0;
    int budget = 0;
    int answered = 0;
    bool pool_exhausted = false;
    std::size_t pool_size = 0;
    std::size_t graph_nodes = 0;
    QaCounters counters;  ///< this stage
    QaCounters totals;    ///< campaign so far
    std::map<ClassId, int> stage_class_counts;
    std::map<ClassId, int> class_counts;
    double eltr = 0;
    std::size_t nop_count = 0;
    std::size_t train_positives = 0;
    std::size_t train_negatives = 0;
    std::optional<double> metric;
};

nlohmann::json stage_report_to_json(const StageReport& r);
StageReport stage_report_from_json(const nlohmann::json& j);

/// Thrown when the configured event limit is reached; simulates a crash
/// right after an event was persisted.
class CampaignInterrupted : public Error {
public:
    CampaignInterrupted() : Error("interrupted", "event limit reached") {}
};

/// One labeling campaign: teach stage, then observe-ask stages. All state
/// changes go through LabelEvents. When a campaign directory is attached,
/// events are appended to events.jsonl as they happen and an existing log is
/// replayed on open, so a killed campaign resumes where it stopped.
class Campaign {
public:
    using Answerer = std::function<Answer(const Question&)>;

    /// Opens the campaign in `dir` (manifest.json plus data files) and queues
    /// any logged events for replay.
    static Campaign open(const fs::path& dir);
    /// Writes the manifest into `dir` and opens it.
    static Campaign create(const fs::path& dir, const CampaignManifest& manifest);
    /// Campaign without a directory: nothing is persisted.
    static Campaign in_memory(const CampaignManifest& manifest, SyntheticCorpus corpus,
                              std::vector<LabelEvent> replay = {});

    const CampaignManifest& manifest() const noexcept { return manifest_; }
    const CampaignState& state() const noexcept { return state_; }
    const SyntheticCorpus& corpus() const noexcept { return corpus_; }
    const std::set<int>& fl_images() const noexcept { return fl_images_; }
    const std::vector<StageReport>& reports() const noexcept { return reports_; }
    const std::optional<CriticalnessBreakdown>& last_breakdown() const noexcept { return last_breakdown_; }
    const fs::path& dir() const noexcept { return dir_; }
    int n_classes() const noexcept { return manifest_.n_classes; }
    int current_stage() const noexcept { return stage_; }
    bool stage_open() const noexcept { return stage_open_; }
    bool taught() const noexcept { return taught_; }
    /// True while logged events are still waiting to be replayed.
    bool replaying() const noexcept { return !replay_.empty(); }
    std::size_t pool_size() const noexcept { return pool_.size(); }
    const StageDetector& detector() const noexcept { return detector_; }

    /// Stage 0: FULL events for every ground-truth object of the fully
    /// labeled images, then the stage-0 detector fit.
    StageReport teach();

    /// Prepares observe-ask stage `stage` (1-based): detector outputs,
    /// NMS + score-floor filter, kNN graph and Ldist.
    void start_stage(int stage);

    /// Current question, selecting one if none is pending. Logged answers are
    /// applied here during replay. nullopt once the budget is spent or the
    /// pool is exhausted.
    std::optional<Question> next_question();

    /// Records the answer to the pending question. Throws
    /// Error("stale_sequence") when `sequence` is not the pending one.
    void submit(std::int64_t sequence, const Answer& answer);

    /// NOP extraction, training-set composition, detector refit, report.
    StageReport finish_stage();

    StageReport run_stage(int stage, const Answerer& answerer);
    /// Teach (if needed) and run stages 1..n_stages with `answerer`, which
    /// defaults to the ground-truth oracle.
    std::vector<StageReport> run(int n_stages, Answerer answerer = {});

    /// Replays the queued log: teach stage, then every logged stage. Stages
    /// whose budget the log used up are finished; the stage the log ends in
    /// stays open.
    void resume();

    /// Replaces the configuration of a stage that has not started yet,
    /// appending when `stage` is one past the last configured stage. The
    /// manifest on disk is rewritten when a directory is attached.
    void set_stage_config(int stage, const StageConfig& cfg);

    /// Ground-truth answer under the manifest's noise model.
    Answer simulated_answer(const Question& q) const;

    DatasetStats dataset_stats() const;
    double eltr_so_far() const;
    nlohmann::json eltr_report(TimeProfile profile) const;
    nlohmann::json progress_json() const;

    /// Interrupt after `n` newly persisted events (crash simulation).
    void set_event_limit(std::optional<std::int64_t> n) { event_limit_ = n; }

    /// JSON-lines rendering of the event log.
    std::string event_log_text() const;

private:
    Campaign() = default;
    void init();
    void append_event(const LabelEvent& ev);
    void check_replay(const LabelEvent& expected);
    std::vector<DetectionRecord> stage_detections(int stage) const;
    TrainingSet compose_training_set(const std::vector<DetectionRecord>& detections, int stage,
                                     std::size_t* nop_count) const;
    void refit(const TrainingSet& ts);
    std::optional<double> evaluate() const;
    const StageConfig& stage_config(int stage) const;
    CriticalnessBreakdown choose(const StageConfig& cfg);

    fs::path dir_;
    CampaignManifest manifest_;
    SyntheticCorpus corpus_;
    std::optional<SyntheticCorpus> held_out_;
    CampaignState state_;
    std::deque<LabelEvent> replay_;
    std::set<int> fl_images_;
    TimeModel time_model_;
    StageDetector detector_;
    std::vector<StageReport> reports_;
    std::unique_ptr<std::ofstream> events_out_;
    std::unique_ptr<std::ofstream> audit_out_;
    std::optional<std::int64_t> event_limit_;
    std::int64_t written_events_ = 0;

    bool taught_ = false;
    int stage_ = 0;
    bool stage_open_ = false;
    std::vector<DetectionRecord> detections_;
    std::vector<DetectionRecord> pool_;
    KnnGraph graph_;
    std::optional<LdistField> ldist_;
    std::optional<Question> pending_;
    std::optional<CriticalnessBreakdown> last_breakdown_;
    int answered_in_stage_ = 0;
};

struct CurveRow {
    double eltr = 0;
    double metric = 0;
    int stage = 0;
};

/// One row per snapshot, sorted by ELTR. Throws Error("length_mismatch")
/// unless there is exactly one metric value per snapshot.
std::vector<CurveRow> report_curve(const std::vector<StageReport>& snapshots,
                                   const std::vector<double>& metrics);
std::string curve_to_csv(const std::vector<CurveRow>& rows);

/// Writes manifest and synthetic corpus files for a fresh simulated campaign.
CampaignManifest init_synthetic_campaign(const fs::path& dir, const CorpusParams& params,
                                         int n_stages, int budget, int fl_count);

}  // namespace critsup
