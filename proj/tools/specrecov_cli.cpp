// Command-line front end: suite-build, train, eval, ablate, replay.
// Every command writes a manifest.json into its output directory so the run
// can be reproduced (see the replay command).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "specrecov/adversary.hpp"
#include "specrecov/ppo.hpp"
#include "specrecov/suite.hpp"

namespace fs = std::filesystem;
using namespace specrecov;
using nlohmann::json;

namespace {

fs::path output_root() {
  if (const char* env = std::getenv("SPECRECOV_OUT")) return fs::path(env);
  return fs::path("runs");
}

fs::path prepare_out_dir(const std::string& name) {
  fs::path dir = output_root() / name;
  fs::create_directories(dir);
  return dir;
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const std::string& config_path, std::uint64_t seed,
                    const json& checkpoint_hashes,
                    const json& extra = json::object()) {
  json m;
  m["command"] = command;
  m["config_path"] = config_path;
  m["seed"] = seed;
  m["output_dir"] = dir.string();
  m["checkpoint_hashes"] = checkpoint_hashes;
  for (const auto& [k, v] : extra.items()) m[k] = v;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw Error(ErrorCode::config, "cannot write manifest");
  out << m.dump(2) << "\n";
}

DetectorMode detector_mode_from(const std::string& s) {
  if (s == "oracle") return DetectorMode::oracle;
  if (s == "residual") return DetectorMode::residual;
  throw Error(ErrorCode::config, "unknown detector mode: " + s);
}

std::uint64_t trace_hash(const EpisodeRecord& rec) {
  std::string buf;
  for (const auto& s : rec.steps) buf += step_to_json(s).dump();
  buf += rec.verdict.compliant ? "C" : "V";
  for (const auto& id : rec.verdict.violated_ids) buf += id;
  return fnv1a_hash(buf);
}

void write_curve_csv(const fs::path& path, const std::vector<double>& rewards,
                     const std::vector<long>& steps) {
  std::ofstream out(path);
  out << "episode,mean_reward,cumulative_steps\n";
  for (std::size_t i = 0; i < rewards.size(); ++i)
    out << i << "," << rewards[i] << ","
        << (i < steps.size() ? steps[i] : 0) << "\n";
}

void write_eval_outputs(const fs::path& dir, const std::string& tag,
                        const Suite& suite, const EvalSummary& sum) {
  {
    std::ofstream out(dir / "metrics.csv");
    out << "tag,svr_pct,rsr_pct,md_pct,mean_t2r_s,critical_violations,"
           "collisions,stalls,missions\n";
    out << tag << "," << sum.svr << "," << sum.rsr << "," << sum.md_mean << ","
        << sum.mean_t2r << "," << sum.critical_violations << ","
        << sum.collisions << "," << sum.stalls << "," << sum.records.size()
        << "\n";
  }
  {
    std::ofstream out(dir / "per_spec_svr.csv");
    out << "spec_id,violations,missions,svr_pct\n";
    const double n = static_cast<double>(sum.records.size());
    for (const auto& [id, count] : sum.per_spec)
      out << id << "," << count << "," << sum.records.size() << ","
          << (n > 0 ? 100.0 * count / n : 0.0) << "\n";
  }
  {
    std::ofstream out(dir / "episodes.csv");
    out << "index,seed,sensor,pattern,class,magnitude,compliant,success,"
           "crash,stall,completion_t_s,t2r_s,mean_reward,trace_hash\n";
    for (std::size_t i = 0; i < sum.records.size(); ++i) {
      const auto& rec = sum.records[i];
      const auto& script = suite.entries[i].script;
      out << i << "," << suite.entries[i].seed << ","
          << sensor_name(script.target) << "," << pattern_name(script.pattern)
          << ","
          << (script.attack_class == AttackClass::stealthy ? "stealthy"
                                                           : "overt")
          << "," << script.magnitude << "," << rec.verdict.compliant << ","
          << rec.success() << "," << rec.crash << "," << rec.stall << ","
          << rec.completion_t << "," << rec.t2r << "," << rec.mean_reward
          << "," << trace_hash(rec) << "\n";
    }
  }
  {
    std::ofstream out(dir / "summary.txt");
    out << "missions:             " << sum.records.size() << "\n"
        << "SVR:                  " << sum.svr << " %\n"
        << "RSR:                  " << sum.rsr << " %\n"
        << "MD:                   " << sum.md_mean << " %\n"
        << "mean T2R:             " << sum.mean_t2r << " s\n"
        << "critical violations:  " << sum.critical_violations << "\n"
        << "collisions:           " << sum.collisions << "\n"
        << "stalls:               " << sum.stalls << "\n";
    out << "per-spec violations:\n";
    for (const auto& [id, count] : sum.per_spec)
      out << "  " << id << ": " << count << "\n";
  }
}

// Reactive training scenarios carry attack scripts so alarm segments exist;
// draw them from a suite when available, otherwise from the deterministic
// candidate generator.
std::vector<ScenarioConfig> training_scenarios(const ScenarioConfig& base,
                                               RecoveryMode variant,
                                               const Suite* suite) {
  std::vector<ScenarioConfig> out;
  ScenarioConfig cfg = base;
  cfg.recovery = variant;
  if (variant == RecoveryMode::proactive) {
    cfg.attack_source = AttackSource::none;
    cfg.script.reset();
    out.push_back(cfg);
    return out;
  }
  cfg.attack_source = AttackSource::script;
  if (suite) {
    for (const auto& entry : suite->entries) {
      cfg.script = entry.script;
      out.push_back(cfg);
    }
    return out;
  }
  Rng rng(base.seed ^ 0x5eedULL);
  for (int index = 0; index < 200 && out.size() < 24; ++index) {
    AttackScript script = candidate_script(index, cfg, rng);
    try {
      validate_script(script, cfg.sensors, cfg.vehicle.dt,
                      cfg.detector_multiplier);
    } catch (const Error&) {
      continue;
    }
    cfg.script = script;
    out.push_back(cfg);
  }
  if (out.empty())
    throw Error(ErrorCode::config, "no valid training attack scripts");
  return out;
}

int cmd_suite_build(const std::string& config_path, const std::string& out_name,
                    std::uint64_t seed, bool seed_set, int scripts,
                    int per_sensor) {
  ScenarioConfig cfg = load_scenario(config_path);
  if (seed_set) cfg.seed = seed;
  SuiteBuildParams params;
  params.target_scripts = scripts;
  params.per_sensor = per_sensor;
  const Suite suite = build_suite(cfg, params);

  const fs::path dir = prepare_out_dir(out_name);
  save_suite((dir / "suite.json").string(), suite);
  write_manifest(dir, "suite-build", config_path, cfg.seed,
                 {{"suite", suite.hash}});
  std::cout << "suite: " << suite.entries.size() << " scripts, "
            << suite.rejected.size() << " rejected, T in [" << suite.t_min
            << ", " << suite.t_max << "] s, hash " << std::hex << suite.hash
            << std::dec << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, int phase,
              const std::string& variant, const std::string& out_name,
              std::uint64_t seed, bool seed_set, int jobs, bool sequential,
              long steps, const std::string& init_path,
              const std::string& suite_path, bool binary,
              const std::string& detector) {
  ScenarioConfig cfg = load_scenario(config_path);
  if (seed_set) cfg.seed = seed;
  if (!detector.empty()) cfg.detector = detector_mode_from(detector);
  cfg.binary_reward = binary;
  const RecoveryMode mode = variant == "proactive" ? RecoveryMode::proactive
                                                   : RecoveryMode::reactive;
  if (sequential) jobs = 1;

  Suite suite;
  const Suite* suite_ptr = nullptr;
  if (!suite_path.empty()) {
    suite = load_suite(suite_path);
    suite.base.binary_reward = binary;
    suite_ptr = &suite;
  }

  const fs::path dir = prepare_out_dir(out_name);
  json hashes = json::object();

  if (phase == 1) {
    TrainingRun run;
    run.seed = cfg.seed;
    run.jobs = jobs;
    if (steps > 0) run.total_step_budget = steps;
    const auto scenarios = training_scenarios(cfg, mode, suite_ptr);
    const auto result = train_phase1(scenarios, run);
    save_policy((dir / "policy.json").string(), result.params);
    write_curve_csv(dir / "curve.csv", result.episode_rewards,
                    result.episode_steps);
    hashes["policy"] = policy_hash(result.params);
    write_manifest(dir, "train", config_path, cfg.seed, hashes);
    std::cout << "phase 1 (" << variant << "): " << result.episode_rewards.size()
              << " episodes, " << result.steps_used << " steps, policy hash "
              << std::hex << policy_hash(result.params) << std::dec << "\n";
    return 0;
  }

  if (init_path.empty())
    throw Error(ErrorCode::config, "phase 2 requires a phase-1 checkpoint");
  PolicyParams init = load_policy(init_path);
  AdversarialRun run;
  run.seed = cfg.seed;
  cfg.recovery = mode;
  const auto result = train_adversarial(init, cfg, run);
  save_policy((dir / "policy.json").string(), result.sg);
  write_curve_csv(dir / "curve_sg.csv", result.r_sg, {});
  write_curve_csv(dir / "curve_aa.csv", result.r_aa, {});
  hashes["policy"] = policy_hash(result.sg);
  hashes["init"] = policy_hash(init);
  write_manifest(dir, "train", config_path, cfg.seed, hashes);
  std::cout << "phase 2 (" << variant << "): " << result.alternations
            << " alternations, converged=" << result.converged
            << ", policy hash " << std::hex << policy_hash(result.sg)
            << std::dec << "\n";
  return 0;
}

int cmd_eval(const std::string& suite_path, const std::string& checkpoint,
             const std::string& mode_name, const std::string& out_name,
             int jobs, bool sequential, const std::string& detector,
             const std::string& tag) {
  Suite suite = load_suite(suite_path);
  if (!detector.empty()) suite.base.detector = detector_mode_from(detector);
  const RecoveryMode mode = recovery_mode_from(mode_name);
  if (sequential) jobs = 1;

  PolicyParams policy;
  const PolicyParams* policy_ptr = nullptr;
  json hashes = {{"suite", suite.hash}};
  if (!checkpoint.empty()) {
    policy = load_policy(checkpoint);
    policy_ptr = &policy;
    hashes["policy"] = policy_hash(policy);
  } else if (mode != RecoveryMode::none) {
    throw Error(ErrorCode::config,
                "recovery mode " + mode_name + " requires --checkpoint");
  }

  const auto sum = evaluate_suite(suite, mode, policy_ptr, jobs,
                                  /*keep_steps=*/true);
  const fs::path dir = prepare_out_dir(out_name);
  write_eval_outputs(dir, tag.empty() ? mode_name : tag, suite, sum);
  write_manifest(dir, "eval", suite_path, suite.base.seed, hashes,
                 {{"mode", mode_name},
                  {"detector", detector},
                  {"checkpoint_path", checkpoint}});
  std::cout << "eval (" << (tag.empty() ? mode_name : tag)
            << "): SVR=" << sum.svr << "% RSR=" << sum.rsr
            << "% MD=" << sum.md_mean << "% critical="
            << sum.critical_violations << " collisions=" << sum.collisions
            << "\n";
  return 0;
}

int cmd_replay(const std::string& run_dir, int index, int jobs,
               const std::string& checkpoint) {
  const fs::path dir(run_dir);
  std::ifstream min(dir / "manifest.json");
  if (!min) throw Error(ErrorCode::config, "no manifest.json in " + run_dir);
  json manifest;
  min >> manifest;
  if (manifest.at("command") != "eval")
    throw Error(ErrorCode::config, "replay expects an eval output directory");

  Suite suite = load_suite(manifest.at("config_path").get<std::string>());
  const std::string detector =
      manifest.value("detector", std::string());
  if (!detector.empty()) suite.base.detector = detector_mode_from(detector);
  const RecoveryMode mode =
      recovery_mode_from(manifest.value("mode", std::string("none")));

  PolicyParams policy;
  const PolicyParams* policy_ptr = nullptr;
  if (manifest.at("checkpoint_hashes").contains("policy")) {
    std::string ckpt = checkpoint.empty()
                           ? manifest.value("checkpoint_path", std::string())
                           : checkpoint;
    if (ckpt.empty())
      throw Error(ErrorCode::config,
                  "replay of policy-driven runs needs --checkpoint");
    policy = load_policy(ckpt);
    const auto expected_hash =
        manifest.at("checkpoint_hashes").at("policy").get<std::uint64_t>();
    if (policy_hash(policy) != expected_hash)
      throw Error(ErrorCode::config, "checkpoint hash mismatch with manifest");
    policy_ptr = &policy;
  }

  // Recompute per-episode trace hashes and compare with episodes.csv.
  std::ifstream csv(dir / "episodes.csv");
  if (!csv) throw Error(ErrorCode::config, "no episodes.csv in " + run_dir);
  std::string line;
  std::getline(csv, line);  // header
  std::vector<std::uint64_t> expected;
  while (std::getline(csv, line)) {
    const auto pos = line.rfind(',');
    expected.push_back(std::stoull(line.substr(pos + 1)));
  }
  const auto sum = evaluate_suite(suite, mode, policy_ptr, jobs,
                                  /*keep_steps=*/true);
  int mismatches = 0;
  for (std::size_t i = 0; i < sum.records.size(); ++i) {
    if (index >= 0 && static_cast<std::size_t>(index) != i) continue;
    if (i >= expected.size() || trace_hash(sum.records[i]) != expected[i]) {
      ++mismatches;
      std::cout << "episode " << i << ": MISMATCH\n";
    }
  }
  if (mismatches == 0) {
    std::cout << "replay: all episode traces bit-identical\n";
    return 0;
  }
  std::cout << "replay: " << mismatches << " mismatching episodes\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Specification-aware attack recovery: suites, training, "
               "evaluation, and replay"};
  app.require_subcommand(1);

  std::string config_path, out_name = "out", suite_path, checkpoint, init_path;
  std::string variant = "proactive", mode_name = "reactive", detector, tag;
  std::string ablation = "no-rcp", run_dir;
  std::uint64_t seed = 0;
  bool sequential = false, binary = false;
  int jobs = 1, phase = 1, scripts = 60, per_sensor = 10, index = -1;

  auto* sb = app.add_subcommand("suite-build", "build a validated attack suite");
  sb->add_option("--config", config_path, "scenario config file")->required();
  sb->add_option("--out", out_name, "output directory name");
  auto* sb_seed = sb->add_option("--seed", seed, "seed override");
  sb->add_option("--scripts", scripts, "target script count");
  sb->add_option("--per-sensor", per_sensor, "max scripts per sensor");

  auto* tr = app.add_subcommand("train", "train the recovery policy");
  tr->add_option("--config", config_path, "scenario config file")->required();
  tr->add_option("--phase", phase, "training phase (1 or 2)")
      ->check(CLI::Range(1, 2));
  tr->add_option("--variant", variant, "reactive or proactive")
      ->check(CLI::IsMember({"reactive", "proactive"}));
  tr->add_option("--out", out_name, "output directory name");
  auto* tr_seed = tr->add_option("--seed", seed, "seed override");
  tr->add_option("--jobs", jobs, "rollout threads");
  tr->add_flag("--sequential", sequential, "force single-threaded rollouts");
  long steps = 0;
  tr->add_option("--steps", steps, "phase-1 step budget");
  tr->add_option("--init", init_path, "phase-1 checkpoint (phase 2)");
  tr->add_option("--suite", suite_path, "attack suite for reactive training");
  tr->add_flag("--binary", binary, "binary satisfied/violated reward");
  tr->add_option("--detector", detector, "detector mode (residual|oracle)");

  auto* ev = app.add_subcommand("eval", "evaluate a recovery mode on a suite");
  ev->add_option("--suite", suite_path, "suite file")->required();
  ev->add_option("--checkpoint", checkpoint, "policy checkpoint");
  ev->add_option("--mode", mode_name, "recovery mode")
      ->check(CLI::IsMember({"none", "reactive", "proactive", "no-rcp",
                             "no-sr"}));
  ev->add_option("--out", out_name, "output directory name");
  ev->add_option("--jobs", jobs, "evaluation threads");
  ev->add_flag("--sequential", sequential, "force single-threaded evaluation");
  ev->add_option("--detector", detector, "detector mode (residual|oracle)");
  ev->add_option("--tag", tag, "report tag");

  auto* ab = app.add_subcommand("ablate", "evaluate an ablation arm");
  ab->add_option("--suite", suite_path, "suite file")->required();
  ab->add_option("--checkpoint", checkpoint, "policy checkpoint")->required();
  ab->add_option("--ablation", ablation, "ablation id")
      ->check(CLI::IsMember({"no-rcp", "no-sr"}));
  ab->add_option("--out", out_name, "output directory name");
  ab->add_option("--jobs", jobs, "evaluation threads");
  ab->add_flag("--sequential", sequential, "force single-threaded evaluation");
  ab->add_option("--detector", detector, "detector mode (residual|oracle)");

  auto* rp = app.add_subcommand("replay", "re-run an eval output and compare");
  rp->add_option("--run", run_dir, "eval output directory")->required();
  rp->add_option("--index", index, "single episode index");
  rp->add_option("--jobs", jobs, "replay threads");
  rp->add_option("--checkpoint", checkpoint, "policy checkpoint");

  try {
    app.parse(argc, argv);
    if (sb->parsed())
      return cmd_suite_build(config_path, out_name, seed, !sb_seed->empty(),
                             scripts, per_sensor);
    if (tr->parsed())
      return cmd_train(config_path, phase, variant, out_name, seed,
                       !tr_seed->empty(), jobs, sequential, steps, init_path,
                       suite_path, binary, detector);
    if (ev->parsed())
      return cmd_eval(suite_path, checkpoint, mode_name, out_name, jobs,
                      sequential, detector, tag);
    if (ab->parsed())
      return cmd_eval(suite_path, checkpoint, ablation, out_name + "_" + ablation,
                      jobs, sequential, detector, "ablation:" + ablation);
    if (rp->parsed()) return cmd_replay(run_dir, index, jobs, checkpoint);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
