#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace critsup {

/// Class ordinal. 0 is background, 1..N are object classes.
using ClassId = int;
inline constexpr ClassId kBackground = 0;

/// Base for every error raised by the library. Carries a short machine
/// readable code next to the message so the CLI can emit structured errors.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

/// Axis-aligned box in continuous pixel coordinates.
struct BoundingBox {
    double x_min = 0;
    double y_min = 0;
    double x_max = 0;
    double y_max = 0;

    /// Validating constructor; throws Error("invalid_box") unless
    /// x_min < x_max and y_min < y_max.
    static BoundingBox make(double x_min, double y_min, double x_max, double y_max);

    double width() const noexcept { return x_max - x_min; }
    double height() const noexcept { return y_max - y_min; }
    double area() const noexcept { return width() * height(); }
    bool valid() const noexcept { return x_min < x_max && y_min < y_max; }

    bool operator==(const BoundingBox&) const = default;
};

struct SampleId {
    std::int32_t image_index = 0;
    std::int32_t proposal_index = 0;

    auto operator<=>(const SampleId&) const = default;
};

std::string to_string(const SampleId& id);

struct SampleIdHash {
    std::size_t operator()(const SampleId& id) const noexcept {
        return std::hash<std::uint64_t>{}((std::uint64_t(std::uint32_t(id.image_index)) << 32) |
                                          std::uint32_t(id.proposal_index));
    }
};

/// Per-sample detector output: dt has N+1 entries (index 0 = background),
/// ft is the deep feature vector.
struct DetectionRecord {
    SampleId sample;
    std::vector<double> dt;
    std::vector<float> ft;
};

/// Highest object-class score, background excluded.
double max_object_score(const std::vector<double>& dt);
/// Object class with the highest score; ties go to the smaller ordinal.
ClassId argmax_object_class(const std::vector<double>& dt);

enum class QaType { Type1, Type2, Full };

std::string to_string(QaType t);
QaType qa_type_from_string(const std::string& s);

/// Answer to a question. Yes/No answer type-1 questions, Class/Background
/// answer type-2 questions and carry full labels.
struct Answer {
    enum class Kind { Yes, No, Class, Background };
    Kind kind = Kind::No;
    ClassId cls = kBackground;

    static Answer yes() { return {Kind::Yes, kBackground}; }
    static Answer no() { return {Kind::No, kBackground}; }
    static Answer background() { return {Kind::Background, kBackground}; }
    static Answer of_class(ClassId c) { return {Kind::Class, c}; }

    bool operator==(const Answer&) const = default;
};

/// "YES", "NO", "BACKGROUND" or "CLASS(c)".
std::string to_string(const Answer& a);
Answer answer_from_string(const std::string& s);

struct LabelEvent {
    SampleId sample;
    QaType qa_type = QaType::Type1;
    std::optional<ClassId> asked_class;
    Answer answer;
    int stage = 0;
    std::int64_t sequence = 0;
    double elapsed_cost_seconds = 0;
    /// Ground-truth box reference; set on FULL events only.
    std::optional<BoundingBox> box;

    /// Class the event labels as an object, if any.
    std::optional<ClassId> positive_class() const;

    bool operator==(const LabelEvent&) const = default;
};

struct ProgressParams {
    double mu = 0;
    double sigma2 = 1;
};

/// Parameters of one observe-ask stage. Defaults are the empirical values
/// used for VOC-like corpora.
struct StageConfig {
    int qa_budget = 100;
    ProgressParams bal1{1.0, 0.2};
    /// When unset, mu is qa_budget / n_classes with sigma2 = 1.
    std::optional<ProgressParams> bal2;
    ProgressParams rep{1.5, 0.5};
    ProgressParams hard{2.0, 0.2};
    double delta = 0.2;
    int knn_k = 4;
    double score_floor = 0.01;
    double nms_overlap = 0.3;
    double tau = 0.3;
    double epsilon = 0.01;
    double th_fg = 0.6;
    double th_hi = 0.4;
    double th_lo = 0.1;
    /// Per-image cap on NOP negatives admitted below th_lo.
    int disjoint_negative_cap = 16;

    // Ablation switches.
    bool enable_bal1 = true;
    bool enable_bal2 = true;
    bool enable_rep = true;
    bool enable_hard = true;
    /// Use the printed minus sign in front of the HARD progress term.
    bool hard_literal_sign = false;
    /// Uniform-random selection instead of criticalness (baseline).
    bool random_selection = false;

    /// Throws Error("invalid_config") when an invariant is violated.
    void validate() const;
    ProgressParams bal2_params(int n_classes) const;
};

}  // namespace critsup
