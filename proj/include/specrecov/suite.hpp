#pragma once

#include <atomic>
#include <mutex>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "specrecov/config.hpp"
#include "specrecov/metrics.hpp"
#include "specrecov/mission.hpp"
#include "specrecov/policy.hpp"

namespace specrecov {

struct SuiteEntry {
  AttackScript script;
  std::uint64_t seed = 0;
  double t_gt = 0;                    // paired attack-free completion time
  std::vector<std::string> violated;  // specs violated in the unprotected arm
};

struct RejectedScript {
  AttackScript script;
  std::string reason;
};

struct Suite {
  ScenarioConfig base;   // scenario template; per-entry seed overrides
  std::vector<SuiteEntry> entries;
  std::vector<RejectedScript> rejected;
  double t_min = 0, t_max = 0;
  std::uint64_t hash = 0;
};

inline nlohmann::json suite_to_json(const Suite& s) {
  nlohmann::json j;
  j["scenario"] = scenario_to_json(s.base);
  j["t_min_s"] = s.t_min;
  j["t_max_s"] = s.t_max;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : s.entries)
    j["entries"].push_back({{"script", e.script},
                            {"seed", e.seed},
                            {"t_gt_s", e.t_gt},
                            {"violated", e.violated}});
  j["rejected"] = nlohmann::json::array();
  for (const auto& r : s.rejected)
    j["rejected"].push_back({{"script", r.script}, {"reason", r.reason}});
  return j;
}

inline std::uint64_t suite_hash(const Suite& s) {
  auto j = suite_to_json(s);
  j.erase("rejected");  // rejection log is advisory, not content
  return fnv1a_hash(j.dump());
}

inline void save_suite(const std::string& path, const Suite& s) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::config, "cannot write suite: " + path);
  auto j = suite_to_json(s);
  j["hash"] = s.hash;
  out << j.dump(2) << "\n";
}

inline Suite load_suite(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::config, "cannot read suite: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config, std::string("suite parse error: ") + e.what());
  }
  Suite s;
  s.base = scenario_from_json(j.at("scenario"));
  s.t_min = j.at("t_min_s").get<double>();
  s.t_max = j.at("t_max_s").get<double>();
  for (const auto& e : j.at("entries")) {
    SuiteEntry entry;
    entry.script = e.at("script").get<AttackScript>();
    entry.seed = e.at("seed").get<std::uint64_t>();
    entry.t_gt = e.at("t_gt_s").get<double>();
    entry.violated = e.at("violated").get<std::vector<std::string>>();
    s.entries.push_back(std::move(entry));
  }
  s.hash = suite_hash(s);
  if (j.contains("hash") && j.at("hash").get<std::uint64_t>() != s.hash)
    throw Error(ErrorCode::suite_validation, "suite hash mismatch");
  return s;
}

struct SuiteBuildParams {
  int target_scripts = 60;
  int per_sensor = 10;
  int calibration_runs = 20;
  int max_candidates = 3000;
};

// Deterministic candidate generator cycling sensors, patterns, and classes.
inline AttackScript candidate_script(int index, const ScenarioConfig& cfg,
                                     Rng& rng) {
  AttackScript s;
  s.target = static_cast<SensorChannel>(index % kNumSensors);
  const bool stealthy = (index / kNumSensors) % 2 == 1;
  // Ramp-down starts at full bias, so it only qualifies as overt.
  s.pattern = stealthy
                  ? BiasPattern::ramp_up
                  : static_cast<BiasPattern>((index / (kNumSensors * 2)) % 3);
  const auto range = allowed_magnitude(s.target);
  // Bias toward the upper half of the range so the unprotected arm reliably
  // violates; weaker candidates are caught by the paired run.
  s.magnitude = range.lo + (range.hi - range.lo) * rng.uniform(0.45, 1.0);
  s.start_s = rng.uniform(1.0, 0.4 * cfg.mission_timeout_s);
  s.duration_s = rng.uniform(8.0, 0.6 * cfg.mission_timeout_s);
  s.direction = 1;
  s.attack_class = stealthy ? AttackClass::stealthy : AttackClass::overt;
  if (stealthy && s.pattern == BiasPattern::constant)
    s.pattern = BiasPattern::ramp_up;
  return s;
}

// Assemble a validated attack suite: calibrate the baseline completion time
// from attack-free runs, then keep only scripts whose unprotected arm
// violates at least one spec while the paired attack-free run is compliant.
inline Suite build_suite(const ScenarioConfig& base,
                         const SuiteBuildParams& params = {}) {
  Suite suite;
  suite.base = base;
  suite.base.attack_source = AttackSource::none;
  suite.base.script.reset();
  suite.base.recovery = RecoveryMode::none;

  Rng probe(base.seed);
  Rng env_rng = probe.fork(1);
  validate_environment(build_environment(suite.base, env_rng), suite.base);

  // Baseline-time calibration.
  suite.t_min = std::numeric_limits<double>::infinity();
  suite.t_max = 0;
  for (int i = 0; i < params.calibration_runs; ++i) {
    ScenarioConfig cfg = suite.base;
    cfg.seed = base.seed + 1000 + static_cast<std::uint64_t>(i);
    const auto rec = run_mission(cfg, nullptr, nullptr, nullptr, false);
    if (!rec.completed() || !rec.verdict.compliant)
      throw Error(ErrorCode::suite_validation,
                  "calibration run failed: scenario has no reliable "
                  "attack-free completion");
    suite.t_min = std::min(suite.t_min, rec.completion_t);
    suite.t_max = std::max(suite.t_max, rec.completion_t);
  }

  std::array<int, kNumSensors> per_sensor{};
  Rng cand_rng(base.seed ^ 0xc0ffee00ULL);
  for (int index = 0;
       static_cast<int>(suite.entries.size()) < params.target_scripts &&
       index < params.max_candidates;
       ++index) {
    AttackScript script = candidate_script(index, suite.base, cand_rng);
    const int sensor = static_cast<int>(script.target);
    if (per_sensor[static_cast<size_t>(sensor)] >= params.per_sensor) continue;
    try {
      validate_script(script, suite.base.sensors, suite.base.vehicle.dt,
                      suite.base.detector_multiplier);
    } catch (const Error& e) {
      suite.rejected.push_back({script, e.what()});
      continue;
    }

    ScenarioConfig cfg = suite.base;
    cfg.seed = base.seed + 20000 + static_cast<std::uint64_t>(index);

    const auto clean = run_mission(cfg, nullptr, nullptr, nullptr, false);
    if (!clean.completed() || !clean.verdict.compliant) {
      suite.rejected.push_back({script, "paired clean run not compliant"});
      continue;
    }
    const auto attacked = run_mission(cfg, nullptr, &script, nullptr, false);
    if (attacked.verdict.compliant) {
      suite.rejected.push_back({script, "no violation in unprotected arm"});
      continue;
    }

    SuiteEntry entry;
    entry.script = script;
    entry.seed = cfg.seed;
    entry.t_gt = clean.completion_t;
    entry.violated = attacked.verdict.violated_ids;
    suite.entries.push_back(std::move(entry));
    ++per_sensor[static_cast<size_t>(sensor)];
  }

  if (static_cast<int>(suite.entries.size()) < params.target_scripts)
    throw Error(ErrorCode::suite_validation,
                "could not assemble enough violating scripts");
  for (int c = 0; c < kNumSensors; ++c)
    if (per_sensor[static_cast<size_t>(c)] == 0)
      throw Error(ErrorCode::suite_validation,
                  std::string("no violating script for sensor ") +
                      sensor_name(static_cast<SensorChannel>(c)));
  suite.hash = suite_hash(suite);
  return suite;
}

struct EvalSummary {
  double svr = 0;
  double rsr = 0;
  double md_mean = 0;
  long observed_violations = 0;
  long intended_violations = 0;
  long successes = 0;
  long critical_violations = 0;
  long collisions = 0;
  long stalls = 0;
  double mean_t2r = -1;
  std::map<std::string, long> per_spec;  // violation counts by spec id
  std::vector<EpisodeRecord> records;
};

inline bool is_critical_id(const std::string& id) {
  return id == "S1" || id == "S2" || id.rfind("S12", 0) == 0;
}

// Evaluate a suite under one recovery configuration. Deterministic including
// with jobs > 1: entries are independent and aggregated in index order.
inline EvalSummary evaluate_suite(const Suite& suite, RecoveryMode mode,
                                  const PolicyParams* policy, int jobs = 1,
                                  bool keep_steps = false) {
  EvalSummary sum;
  const std::size_t n = suite.entries.size();
  sum.records.resize(n);

  auto run_one = [&](std::size_t i) {
    ScenarioConfig cfg = suite.base;
    cfg.seed = suite.entries[i].seed;
    cfg.recovery = mode;
    cfg.attack_source = AttackSource::script;
    cfg.script = suite.entries[i].script;
    sum.records[i] = run_mission(cfg, policy, nullptr, nullptr, keep_steps);
  };
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const int workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
    std::exception_ptr failure;
    std::mutex failure_mu;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        try {
          for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1))
            run_one(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  double md_sum = 0;
  long md_count = 0;
  double t2r_sum = 0;
  long t2r_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = sum.records[i];
    ++sum.intended_violations;  // one per paired-run-confirmed script
    if (!rec.verdict.compliant) {
      ++sum.observed_violations;
      for (const auto& id : rec.verdict.violated_ids) {
        ++sum.per_spec[id];
        if (is_critical_id(id)) ++sum.critical_violations;
      }
    }
    if (rec.success()) ++sum.successes;
    if (rec.crash) ++sum.collisions;
    if (rec.stall) ++sum.stalls;
    if (rec.completed()) {
      md_sum += compute_md(rec.completion_t, suite.entries[i].t_gt,
                           suite.t_min, suite.t_max);
      ++md_count;
    }
    if (rec.t2r >= 0) {
      t2r_sum += rec.t2r;
      ++t2r_count;
    }
  }
  sum.svr = compute_svr(sum.observed_violations, sum.intended_violations);
  sum.rsr = compute_rsr(sum.successes, static_cast<long>(n));
  sum.md_mean = md_count > 0 ? md_sum / md_count : 0.0;
  sum.mean_t2r = t2r_count > 0 ? t2r_sum / t2r_count : -1.0;
  return sum;
}

}  // namespace specrecov
