#pragma once

// nlohmann::json bindings for the domain types. Field names follow the
// type definitions exactly; the event log and HTTP payloads depend on them.

#include "json.hpp"

#include "critsup/types.hpp"

namespace critsup {

void to_json(nlohmann::json& j, const SampleId& id);
void from_json(const nlohmann::json& j, SampleId& id);

/// Boxes serialize as [x_min, y_min, x_max, y_max].
void to_json(nlohmann::json& j, const BoundingBox& b);
void from_json(const nlohmann::json& j, BoundingBox& b);

void to_json(nlohmann::json& j, const LabelEvent& ev);
void from_json(const nlohmann::json& j, LabelEvent& ev);

void to_json(nlohmann::json& j, const ProgressParams& p);
void from_json(const nlohmann::json& j, ProgressParams& p);

/// Missing keys keep their defaults.
void to_json(nlohmann::json& j, const StageConfig& cfg);
void from_json(const nlohmann::json& j, StageConfig& cfg);

}  // namespace critsup
