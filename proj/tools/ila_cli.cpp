// ila: simulate, select, compare, snapshot, config and set debugging on top of
// the C API.
//
// Exit codes: 0 ok, 2 config / schema error, 3 runtime failure, 4 infeasible
// selection.

#include "ila/ila.h"

#include "CLI11.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kConfigError = 2, kRuntimeError = 3, kInfeasible = 4 };

enum class Level { kError, kWarn, kInfo, kDebug };

Level log_level() {
  const char* v = std::getenv("ILA_LOG");
  if (!v) return Level::kWarn;
  const std::string s(v);
  if (s == "error") return Level::kError;
  if (s == "info") return Level::kInfo;
  if (s == "debug") return Level::kDebug;
  return Level::kWarn;
}

void log(Level l, const std::string& msg) {
  static const Level threshold = log_level();
  static const char* names[] = {"error", "warn", "info", "debug"};
  if (l <= threshold) std::cerr << "ila [" << names[static_cast<int>(l)] << "] " << msg << "\n";
}

// Owns a malloc'd string from the library.
struct Text {
  char* p = nullptr;
  ~Text() { ila_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct Config {
  ila_config* p = nullptr;
  ~Config() { ila_config_free(p); }
};

struct Run {
  ila_run* p = nullptr;
  ~Run() { ila_run_free(p); }
};

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return std::nullopt;
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

bool write_file(const fs::path& path, const std::string& data) {
  std::ofstream f(path, std::ios::binary);
  f << data;
  f.close();
  if (!f) {
    log(Level::kError, "cannot write " + path.string());
    return false;
  }
  return true;
}

int report(ila_status s, const char* what) {
  const std::string msg = ila_last_error();
  log(Level::kError, msg.rfind(what, 0) == 0 ? msg : std::string(what) + ": " + msg);
  switch (s) {
    case ILA_OK: return kOk;
    case ILA_ERR_CONFIG:
    case ILA_ERR_INVALID: return kConfigError;
    case ILA_ERR_INFEASIBLE: return kInfeasible;
    default: return kRuntimeError;
  }
}

struct Overrides {
  std::optional<double> al, gamma, beta;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* cmd) {
    cmd->add_option("--al", al, "alert limit override (m)");
    cmd->add_option("--gamma", gamma, "confidence level override");
    cmd->add_option("--beta", beta, "rounding threshold override");
  }

  ila_status apply(ila_config* cfg) const {
    ila_status s = ILA_OK;
    if (seed) s = ila_config_set_seed(cfg, *seed);
    if (s == ILA_OK && al) s = ila_config_set_alert_limit(cfg, *al);
    if (s == ILA_OK && gamma) s = ila_config_set_gamma(cfg, *gamma);
    if (s == ILA_OK && beta) s = ila_config_set_beta(cfg, *beta);
    return s;
  }
};

// Loads the config file (or the built-in default) and applies overrides.
int load(const std::string& path, const Overrides& o, Config& cfg) {
  const ila_status s = path.empty() ? ila_config_default(&cfg.p) : ila_config_load(path.c_str(), &cfg.p);
  if (s != ILA_OK) return report(s, "config");
  if (const ila_status t = o.apply(cfg.p); t != ILA_OK) return report(t, "config");
  return kOk;
}

int cmd_simulate(const std::string& config, Overrides o, int seeds, const std::string& out) {
  Config base;
  if (int rc = load(config, o, base); rc != kOk) return rc;
  if (seeds < 1) {
    log(Level::kError, "--seeds must be at least 1");
    return kConfigError;
  }
  std::uint64_t first = 1;
  ila_config_seed(base.p, &first);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) {
    log(Level::kError, "cannot create " + out + ": " + ec.message());
    return kRuntimeError;
  }

  std::vector<Run> runs(static_cast<std::size_t>(seeds));
  std::vector<const ila_run*> ptrs;
  for (int i = 0; i < seeds; ++i) {
    const std::uint64_t seed = first + static_cast<std::uint64_t>(i);
    const fs::path dir = fs::path(out) / ("seed_" + std::to_string(seed));
    log(Level::kInfo, "seed " + std::to_string(seed));
    ila_config_set_seed(base.p, seed);
    ila_status s = ila_simulate(base.p, &runs[static_cast<std::size_t>(i)].p);
    if (s != ILA_OK) {
      write_file(fs::path(out) / "FAILED", "seed " + std::to_string(seed) + ": " + ila_last_error() + "\n");
      return report(s, "simulate");
    }
    const ila_run* run = runs[static_cast<std::size_t>(i)].p;
    ptrs.push_back(run);
    fs::create_directories(dir, ec);
    Text csv, jsonl, summary;
    if ((s = ila_run_epochs_csv(run, &csv.p)) != ILA_OK || (s = ila_run_selection_jsonl(run, &jsonl.p)) != ILA_OK ||
        (s = ila_run_summary_json(run, &summary.p)) != ILA_OK)
      return report(s, "simulate");
    if (ec || !write_file(dir / "epochs.csv", csv.str()) || !write_file(dir / "selection.jsonl", jsonl.str()) ||
        !write_file(dir / "summary.json", summary.str()))
      return kRuntimeError;
  }
  Text agg;
  if (ila_status s = ila_runs_aggregate_json(ptrs.data(), ptrs.size(), &agg.p); s != ILA_OK)
    return report(s, "aggregate");
  if (!write_file(fs::path(out) / "aggregate.json", agg.str())) return kRuntimeError;
  log(Level::kInfo, "wrote " + std::to_string(seeds) + " run(s) to " + out);
  return kOk;
}

int cmd_select(const std::string& snapshot, const std::string& config, const Overrides& o) {
  Config cfg;
  if (int rc = load(config, o, cfg); rc != kOk) return rc;
  const auto doc = read_file(snapshot);
  if (!doc) {
    log(Level::kError, "cannot read snapshot " + snapshot);
    return kConfigError;
  }
  Text result;
  if (ila_status s = ila_select(doc->c_str(), cfg.p, &result.p); s != ILA_OK) return report(s, "select");
  std::cout << result.str();
  return kOk;
}

int cmd_compare(const std::string& config, const Overrides& o, const std::string& baselines, int random_runs,
                const std::string& out) {
  Config cfg;
  if (int rc = load(config, o, cfg); rc != kOk) return rc;
  Text csv;
  if (ila_status s = ila_compare(cfg.p, baselines.c_str(), random_runs, &csv.p); s != ILA_OK)
    return report(s, "compare");
  std::cout << csv.str();
  if (!out.empty() && !write_file(out, csv.str())) return kRuntimeError;
  return kOk;
}

int cmd_snapshot(const std::string& config, const Overrides& o, int epoch, const std::string& plant, double bias,
                 const std::string& out) {
  Config cfg;
  if (int rc = load(config, o, cfg); rc != kOk) return rc;
  Text doc;
  if (ila_status s = ila_snapshot(cfg.p, epoch, plant.empty() ? nullptr : plant.c_str(), bias, &doc.p); s != ILA_OK)
    return report(s, "snapshot");
  if (out.empty()) {
    std::cout << doc.str();
    return kOk;
  }
  return write_file(out, doc.str()) ? kOk : kRuntimeError;
}

int cmd_config(const std::string& config, const Overrides& o) {
  Config cfg;
  if (int rc = load(config, o, cfg); rc != kOk) return rc;
  Text doc;
  if (ila_status s = ila_config_to_json(cfg.p, &doc.p); s != ILA_OK) return report(s, "config");
  std::cout << doc.str();
  return kOk;
}

int cmd_set(const std::string& op, const std::vector<std::string>& files, double gamma,
            const std::vector<double>& point) {
  std::vector<std::string> docs;
  for (const auto& f : files) {
    auto d = read_file(f);
    if (!d) {
      log(Level::kError, "cannot read " + f);
      return kConfigError;
    }
    docs.push_back(*d);
  }
  auto arity = [&](std::size_t n) {
    if (docs.size() == n) return true;
    log(Level::kError, "set " + op + " takes " + std::to_string(n) + " set file(s)");
    return false;
  };
  Text out;
  ila_status s = ILA_OK;
  if (op == "sum") {
    if (!arity(2)) return kConfigError;
    s = ila_set_sum(docs[0].c_str(), docs[1].c_str(), &out.p);
  } else if (op == "union") {
    if (docs.empty()) return arity(1) ? kOk : kConfigError;
    std::vector<const char*> ptrs;
    for (const auto& d : docs) ptrs.push_back(d.c_str());
    s = ila_set_union(ptrs.data(), ptrs.size(), &out.p);
  } else if (op == "cut") {
    if (!arity(1)) return kConfigError;
    s = ila_set_cut(docs[0].c_str(), gamma, &out.p);
  } else if (op == "status") {
    if (!arity(1)) return kConfigError;
    double v = 0.0;
    s = ila_set_fault_status(docs[0].c_str(), point.data(), point.size(), &v);
    if (s == ILA_OK) {
      std::printf("%.12g\n", v);
      return kOk;
    }
  } else {
    log(Level::kError, "unknown set operation " + op);
    return kConfigError;
  }
  if (s != ILA_OK) return report(s, "set");
  std::cout << out.str();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Integrity-driven landmark attention"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ila_version());

  std::string config, out = "out", snapshot, baselines = "ila,gps_only,all,random", plant, op;
  int seeds = 1, random_runs = 50, epoch = 1;
  double bias = 60.0, gamma_cut = 0.999;
  std::vector<std::string> files;
  std::vector<double> point;
  Overrides sim_o, sel_o, cmp_o, snap_o, cfg_o;

  auto* sim = app.add_subcommand("simulate", "run the closed loop and write per-seed artifacts");
  sim->add_option("--config", config, "scenario config JSON (default: built-in)");
  sim->add_option("--seed", sim_o.seed, "first seed (default: the config seed)");
  sim->add_option("--seeds", seeds, "number of consecutive seeds");
  sim->add_option("--out", out, "output directory");
  sim_o.attach(sim);

  auto* sel = app.add_subcommand("select", "one-shot selection on an epoch snapshot");
  sel->add_option("snapshot", snapshot, "snapshot JSON")->required();
  sel->add_option("config", config, "scenario config JSON (default: built-in)");
  sel_o.attach(sel);

  auto* cmp = app.add_subcommand("compare", "max errors of the baselines on one scenario, as CSV");
  cmp->add_option("--config", config, "scenario config JSON (default: built-in)");
  cmp->add_option("--seed", cmp_o.seed, "scenario seed");
  cmp->add_option("--baselines", baselines, "comma separated from ila,gps_only,all,random");
  cmp->add_option("--random-runs", random_runs, "random selections per epoch");
  cmp->add_option("--out", out, "also write the CSV here");
  cmp_o.attach(cmp);

  auto* snap = app.add_subcommand("snapshot", "write one epoch of a scenario as a snapshot");
  snap->add_option("--config", config, "scenario config JSON (default: built-in)");
  snap->add_option("--seed", snap_o.seed, "scenario seed");
  snap->add_option("--epoch", epoch, "epoch index (>= 1)");
  snap->add_option("--plant", plant, "satellite id to bias");
  snap->add_option("--bias", bias, "planted pseudorange bias (m)");
  snap->add_option("--out", out, "output file (default: stdout)");

  auto* show = app.add_subcommand("config", "print the effective config (defaults filled in)");
  show->add_option("--config", config, "scenario config JSON (default: built-in)");
  cfg_o.attach(show);

  auto* set = app.add_subcommand("set", "p-Zonotope operations: sum, union, cut, status");
  set->add_option("op", op, "operation")->required();
  set->add_option("files", files, "set JSON files");
  set->add_option("--gamma", gamma_cut, "confidence level for cut");
  set->add_option("--point", point, "point for status")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  if (*sim) return cmd_simulate(config, sim_o, seeds, out);
  if (*sel) return cmd_select(snapshot, config, sel_o);
  if (*cmp) return cmd_compare(config, cmp_o, baselines, random_runs, cmp->count("--out") ? out : "");
  if (*snap) return cmd_snapshot(config, snap_o, epoch, plant, bias, snap->count("--out") ? out : "");
  if (*show) return cmd_config(config, cfg_o);
  if (*set) return cmd_set(op, files, gamma_cut, point);
  return kConfigError;
}
