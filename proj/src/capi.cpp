#include "ila/ila.h"

#include "ila/error.hpp"
#include "ila/io.hpp"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <sstream>
#include <vector>

struct ila_config {
  ila::ScenarioConfig cfg;
};

struct ila_run {
  ila::ScenarioConfig cfg;
  std::vector<ila::EpochRecord> records;
  ila::RunSummary summary;
};

namespace {

thread_local std::string last_error;

ila_status fail(ila_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

ila_status status_of(ila::ErrorCode c) {
  switch (c) {
    case ila::ErrorCode::kInvalidInput: return ILA_ERR_INVALID;
    case ila::ErrorCode::kConfig: return ILA_ERR_CONFIG;
    case ila::ErrorCode::kRuntime: return ILA_ERR_RUNTIME;
    case ila::ErrorCode::kInfeasible: return ILA_ERR_INFEASIBLE;
    case ila::ErrorCode::kDegenerate: return ILA_ERR_DEGENERATE;
    case ila::ErrorCode::kBehindCamera: return ILA_ERR_BEHIND_CAMERA;
    case ila::ErrorCode::kEstimationFailure: return ILA_ERR_ESTIMATION;
    case ila::ErrorCode::kTooLarge: return ILA_ERR_TOO_LARGE;
  }
  return ILA_ERR_RUNTIME;
}

// Runs f, mapping exceptions onto status codes.
template <class F>
ila_status guard(F&& f) {
  try {
    f();
    last_error.clear();
    return ILA_OK;
  } catch (const ila::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const ila::io::Json::exception& e) {
    return fail(ILA_ERR_CONFIG, std::string("json: ") + e.what());
  } catch (const std::bad_alloc&) {
    return fail(ILA_ERR_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return fail(ILA_ERR_RUNTIME, e.what());
  }
}

char* copy(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

ila::io::Json parse(const char* text, const char* what) {
  if (!text) throw ila::Error(ila::ErrorCode::kInvalidInput, std::string(what) + ": null document");
  try {
    return ila::io::Json::parse(text);
  } catch (const ila::io::Json::parse_error& e) {
    throw ila::Error(ila::ErrorCode::kConfig, std::string(what) + ": " + e.what());
  }
}

ila::PZonotope set_of(const char* text) { return ila::io::set_from_json(parse(text, "set")); }

#define ILA_NEED(p) \
  if (!(p)) return fail(ILA_ERR_INVALID, #p " is null")

template <class F>
ila_status override_selection(ila_config* cfg, F&& set) {
  ILA_NEED(cfg);
  return guard([&] {
    ila::ScenarioConfig c = cfg->cfg;
    set(c.selection);
    c.validate();
    cfg->cfg = c;
  });
}

}  // namespace

extern "C" {

const char* ila_last_error(void) { return last_error.c_str(); }

void ila_string_free(char* s) { std::free(s); }

const char* ila_version(void) { return "1.0.0"; }

ila_status ila_config_default(ila_config** out) {
  ILA_NEED(out);
  return guard([&] { *out = new ila_config{}; });
}

ila_status ila_config_parse(const char* json, ila_config** out) {
  ILA_NEED(out);
  return guard([&] { *out = new ila_config{ila::io::config_from_json(parse(json, "config"))}; });
}

ila_status ila_config_load(const char* path, ila_config** out) {
  ILA_NEED(path);
  ILA_NEED(out);
  return guard([&] { *out = new ila_config{ila::io::load_config(path)}; });
}

void ila_config_free(ila_config* cfg) { delete cfg; }

ila_status ila_config_set_seed(ila_config* cfg, uint64_t seed) {
  ILA_NEED(cfg);
  cfg->cfg.seed = seed;
  return ILA_OK;
}

ila_status ila_config_seed(const ila_config* cfg, uint64_t* out) {
  ILA_NEED(cfg);
  ILA_NEED(out);
  *out = cfg->cfg.seed;
  return ILA_OK;
}

ila_status ila_config_set_alert_limit(ila_config* cfg, double meters) {
  return override_selection(cfg, [&](ila::SelectionSpec& s) { s.alert_limit_m = meters; });
}

ila_status ila_config_set_gamma(ila_config* cfg, double gamma) {
  return override_selection(cfg, [&](ila::SelectionSpec& s) { s.gamma = gamma; });
}

ila_status ila_config_set_beta(ila_config* cfg, double beta) {
  return override_selection(cfg, [&](ila::SelectionSpec& s) { s.beta = beta; });
}

ila_status ila_config_to_json(const ila_config* cfg, char** out) {
  ILA_NEED(cfg);
  ILA_NEED(out);
  return guard([&] { *out = copy(ila::io::dump(ila::io::config_to_json(cfg->cfg))); });
}

ila_status ila_config_digest(const ila_config* cfg, char** out) {
  ILA_NEED(cfg);
  ILA_NEED(out);
  return guard([&] { *out = copy(ila::io::config_digest(cfg->cfg)); });
}

ila_status ila_simulate(const ila_config* cfg, ila_run** out) {
  ILA_NEED(cfg);
  ILA_NEED(out);
  return guard([&] {
    auto run = std::make_unique<ila_run>();
    run->cfg = cfg->cfg;
    const ila::Scenario sc = ila::generate_scenario(run->cfg);
    run->records = ila::run_scenario(sc);
    run->summary = ila::summarize(run->records, run->cfg.seed, ila::io::config_digest(run->cfg));
    *out = run.release();
  });
}

void ila_run_free(ila_run* run) { delete run; }

ila_status ila_run_epochs_csv(const ila_run* run, char** out) {
  ILA_NEED(run);
  ILA_NEED(out);
  return guard([&] { *out = copy(ila::io::epochs_csv(run->records)); });
}

ila_status ila_run_selection_jsonl(const ila_run* run, char** out) {
  ILA_NEED(run);
  ILA_NEED(out);
  return guard([&] { *out = copy(ila::io::selection_jsonl(run->records)); });
}

ila_status ila_run_summary_json(const ila_run* run, char** out) {
  ILA_NEED(run);
  ILA_NEED(out);
  return guard([&] { *out = copy(ila::io::dump(ila::io::summary_to_json(run->summary))); });
}

ila_status ila_runs_aggregate_json(const ila_run* const* runs, size_t n, char** out) {
  ILA_NEED(runs);
  ILA_NEED(out);
  return guard([&] {
    std::vector<ila::RunSummary> s;
    for (size_t i = 0; i < n; ++i) {
      ila::require(runs[i] != nullptr, "aggregate: null run");
      s.push_back(runs[i]->summary);
    }
    *out = copy(ila::io::dump(ila::io::aggregate_to_json(s)));
  });
}

ila_status ila_compare(const ila_config* cfg, const char* baselines, int random_runs, char** out) {
  ILA_NEED(cfg);
  ILA_NEED(baselines);
  ILA_NEED(out);
  return guard([&] {
    std::vector<std::string> names;
    std::stringstream ss(baselines);
    for (std::string item; std::getline(ss, item, ',');)
      if (!item.empty()) names.push_back(item);
    const ila::Scenario sc = ila::generate_scenario(cfg->cfg);
    *out = copy(ila::io::baselines_csv(ila::compare_baselines(sc, names, random_runs)));
  });
}

ila_status ila_select(const char* snapshot_json, const ila_config* cfg, char** out) {
  ILA_NEED(cfg);
  ILA_NEED(out);
  return guard([&] {
    const auto snap = ila::io::snapshot_from_json(parse(snapshot_json, "snapshot"));
    *out = copy(ila::io::dump(ila::io::select_snapshot(snap, cfg->cfg)));
  });
}

ila_status ila_snapshot(const ila_config* cfg, int epoch, const char* plant_id, double plant_bias_m, char** out) {
  ILA_NEED(cfg);
  ILA_NEED(out);
  return guard([&] {
    const ila::Scenario sc = ila::generate_scenario(cfg->cfg);
    const auto snap = ila::io::make_snapshot(sc, epoch, plant_id ? plant_id : "", plant_bias_m);
    *out = copy(ila::io::dump(ila::io::snapshot_to_json(snap)));
  });
}

ila_status ila_set_sum(const char* a, const char* b, char** out) {
  ILA_NEED(out);
  return guard([&] { *out = copy(ila::io::dump(ila::io::set_to_json(ila::minkowski_sum(set_of(a), set_of(b))))); });
}

ila_status ila_set_union(const char* const* sets, size_t n, char** out) {
  ILA_NEED(sets);
  ILA_NEED(out);
  return guard([&] {
    std::vector<ila::PZonotope> members;
    for (size_t i = 0; i < n; ++i) members.push_back(set_of(sets[i]));
    *out = copy(ila::io::dump(ila::io::set_to_json(ila::enclose_union(members))));
  });
}

ila_status ila_set_cut(const char* set, double gamma, char** out) {
  ILA_NEED(out);
  return guard([&] {
    const ila::Zonotope z = ila::confidence_cut(set_of(set), gamma);
    const auto n = z.dim();
    *out = copy(ila::io::dump(ila::io::set_to_json(ila::PZonotope(z.center, z.generators, ila::MatrixXd::Zero(n, n)))));
  });
}

ila_status ila_set_fault_status(const char* set, const double* point, size_t dim, double* out) {
  ILA_NEED(point);
  ILA_NEED(out);
  return guard([&] {
    const ila::PZonotope p = set_of(set);
    ila::require(static_cast<Eigen::Index>(dim) == p.dim(), "fault status: point dimension mismatch");
    *out = ila::fault_status_point(p, Eigen::Map<const ila::VectorXd>(point, static_cast<Eigen::Index>(dim)));
  });
}

}  // extern "C"
