#pragma once

// JSON and CSV formats: sets, scenario configs, epoch snapshots, selection
// results and run artifacts. Readers throw ErrorCode::kConfig with the
// offending key path in the message.

#include "ila/sim.hpp"

#include "json.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ila::io {

using Json = nlohmann::json;

Json set_to_json(const PZonotope& p);
PZonotope set_from_json(const Json& j, const std::string& path = "set");

Json config_to_json(const ScenarioConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
ScenarioConfig config_from_json(const Json& j);
ScenarioConfig load_config(const std::string& path);

/// FNV-1a 64 of the canonical dump (sorted keys, no whitespace), seed
/// excluded, as 16 hex digits.
std::string config_digest(const ScenarioConfig& cfg);

/// One epoch's selection inputs, enough to rerun the pipeline offline.
struct Snapshot {
  int epoch = 0;
  EpochInputs inputs;
  NoiseBounds bounds;
  bool has_bounds = false;  // false: take bounds from the config
  std::map<std::string, std::vector<double>> gps_history;     // per-epoch statuses, oldest first
  std::map<std::string, std::vector<double>> vision_history;
};

Json snapshot_to_json(const Snapshot& s);
Snapshot snapshot_from_json(const Json& j);

/// Snapshot of `epoch` with the filter fed back from the previous true state
/// and the initial landmark estimates. `plant_bias_m` is added to the
/// pseudorange of satellite `plant_id` when that id is non-empty.
Snapshot make_snapshot(const Scenario& sc, int epoch, const std::string& plant_id = "", double plant_bias_m = 0.0);

/// Runs reach and selection on a snapshot. Infeasibility propagates as
/// ErrorCode::kInfeasible.
Json select_snapshot(const Snapshot& s, const ScenarioConfig& cfg);

Json selection_to_json(int epoch, const std::vector<std::string>& gps_ids, const std::vector<std::string>& vision_ids,
                       const SelectionResult& r);

std::string epochs_csv(const std::vector<EpochRecord>& records);
std::string selection_jsonl(const std::vector<EpochRecord>& records);
Json summary_to_json(const RunSummary& s);
Json aggregate_to_json(const std::vector<RunSummary>& runs);
std::string baselines_csv(const std::vector<BaselineRow>& rows);

/// Dump with a trailing newline, the form every artifact is written in.
std::string dump(const Json& j, int indent = 2);

}  // namespace ila::io
