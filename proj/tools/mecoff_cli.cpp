// Command-line driver: single experiments, one-axis sweeps, and the
// randomized self-check against the bit-budget reference simulator.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "mecoff/checkpoint.hpp"
#include "mecoff/config.hpp"
#include "mecoff/metrics.hpp"
#include "mecoff/policies.hpp"
#include "mecoff/runner.hpp"
#include "mecoff/testing/brute_force.hpp"

using namespace mecoff;

namespace {

// Every configuration key doubles as a CLI flag, so a config file plus flag
// overrides compose naturally (flags win).
void add_config_options(CLI::App* app, RunConfig& cfg) {
  app->set_config("--config", "", "flat key=value configuration file");
  app->add_option("--num_devices", cfg.num_devices, "mobile device count (M)");
  app->add_option("--num_edges", cfg.num_edges, "edge node count (N)");
  app->add_option("--horizon_slots", cfg.horizon_slots, "slots per episode (T)");
  app->add_option("--episodes", cfg.episodes, "episodes to run (training episodes for drl)");
  app->add_option("--eval_episodes", cfg.eval_episodes, "greedy evaluation episodes after training");
  app->add_option("--slot_seconds", cfg.slot_seconds, "slot duration in seconds");
  app->add_option("--f_device_ghz", cfg.f_device_ghz, "device processing capacity in GHz");
  app->add_option("--f_edge_ghz", cfg.f_edge_ghz, "edge processing capacity in GHz");
  app->add_option("--f_tran_mbps", cfg.f_tran_mbps, "uplink capacity in Mbps");
  app->add_option("--size_min_mbits", cfg.size_min_mbits, "smallest task size in Mbit");
  app->add_option("--size_max_mbits", cfg.size_max_mbits, "largest task size in Mbit");
  app->add_option("--size_step_mbits", cfg.size_step_mbits, "task size grid step in Mbit");
  app->add_option("--density_gcycles_per_mbit", cfg.density_gcycles_per_mbit,
                  "processing density (Gcycles per Mbit)");
  app->add_option("--deadline_slots", cfg.deadline_slots, "task deadline in slots");
  app->add_option("--arrival_probability", cfg.arrival_probability,
                  "per-slot task arrival probability");
  app->add_option("--drop_penalty", cfg.drop_penalty, "cost charged for a dropped task");
  app->add_option("--t_step", cfg.t_step, "load-history window in slots");
  app->add_option("--discount", cfg.discount, "discount factor");
  app->add_option("--learning_rate", cfg.learning_rate, "optimizer learning rate");
  app->add_option("--batch_size", cfg.batch_size, "replay minibatch size");
  app->add_option("--replay_capacity", cfg.replay_capacity, "replay memory capacity");
  app->add_option("--replace_threshold", cfg.replace_threshold,
                  "updates between target-network replacements");
  app->add_option("--optimizer", cfg.optimizer, "adam or sgd");
  app->add_option("--lstm_hidden", cfg.lstm_hidden, "LSTM hidden size");
  app->add_option("--fc1", cfg.fc1, "first dense layer width");
  app->add_option("--fc2", cfg.fc2, "second dense layer width");
  app->add_option("--head_hidden", cfg.head_hidden, "advantage/value head width");
  app->add_option("--policy", cfg.policy,
                  "drl | no_offload | random | myopic, or a comma list per device");
  app->add_option("--master_seed", cfg.master_seed, "master seed for all random streams");
}

int validate_and_report(const RunConfig& cfg) {
  auto errs = cfg.validate();
  if (errs.empty()) return 0;
  std::cerr << "invalid configuration:\n";
  for (const auto& e : errs) std::cerr << "  " << e << "\n";
  return 2;
}

int cmd_run(RunConfig& cfg, const std::string& out, const std::string& trace_path,
            const std::string& checkpoint_dir, bool overwrite, bool quiet) {
  if (int rc = validate_and_report(cfg)) return rc;
  Runner runner(cfg);

  std::ofstream trace_file;
  if (!trace_path.empty()) {
    if (!overwrite && std::filesystem::exists(trace_path)) {
      std::cerr << "refusing to overwrite existing file: " << trace_path << "\n";
      return 2;
    }
    trace_file.open(trace_path, std::ios::trunc | std::ios::binary);
    trace_file << "slot,device,event,task_id,cost\n";
    runner.env().set_trace_sink([&trace_file](const TraceEvent& e) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%d,%d,%s,%llu,%.6f", e.slot, e.device, e.kind.c_str(),
                    static_cast<unsigned long long>(e.task_id), e.cost);
      trace_file << buf << '\n';
    });
  }

  std::vector<MetricsRow> rows;
  runner.run_all([&](const EpisodeLog& log) {
    rows.push_back(log.row);
    if (!quiet) {
      char buf[200];
      std::snprintf(buf, sizeof buf,
                    "episode %4d  arrivals %5lld  drop_ratio %.4f  avg_delay %.3fs  "
                    "wall %.2fs  train_steps %lld",
                    log.row.episode, static_cast<long long>(log.row.arrivals),
                    log.row.drop_ratio, log.row.avg_delay_s, log.wall_seconds,
                    static_cast<long long>(log.train_steps));
      std::cout << buf << std::endl;
    }
  });

  if (!out.empty()) {
    emit_csv(rows, out, overwrite);
    if (!quiet) std::cout << "wrote " << rows.size() << " rows to " << out << "\n";
  }

  if (!checkpoint_dir.empty() && runner.trainers()) {
    std::filesystem::create_directories(checkpoint_dir);
    for (int m = 0; m < cfg.num_devices; ++m) {
      const Trainer& t = runner.trainers()->trainer(m);
      std::string path = (std::filesystem::path(checkpoint_dir) /
                          ("device_" + std::to_string(m) + ".ckpt")).string();
      save_checkpoint(Checkpoint(t.state().eval_net, t.state().update_count), path);
    }
    if (!quiet) std::cout << "wrote checkpoints to " << checkpoint_dir << "\n";
  }
  return 0;
}

int cmd_sweep(RunConfig& cfg, const std::string& axis, const std::vector<double>& values,
              int seeds, const std::string& out, bool overwrite, bool quiet) {
  if (int rc = validate_and_report(cfg)) return rc;
  if (values.empty()) {
    std::cerr << "sweep needs at least one --values entry\n";
    return 2;
  }
  auto points = run_sweep(cfg, axis, values, seeds, [&](const SweepPoint& pt) {
    if (!quiet) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s = %-10g drop_ratio %.4f  avg_delay %.3fs",
                    axis.c_str(), pt.value, pt.mean.drop_ratio, pt.mean.avg_delay_s);
      std::cout << buf << std::endl;
    }
  });
  if (!out.empty()) {
    emit_sweep_csv(points, axis, out, overwrite);
    if (!quiet) std::cout << "wrote " << points.size() << " points to " << out << "\n";
  }
  return 0;
}

// Randomized equivalence check of the environment against the bit-budget
// reference, plus the per-episode accounting identity.
int cmd_check(int instances, std::uint64_t seed) {
  Rng rng(substream_seed(seed, Stream::instance));
  long long tasks_checked = 0;
  for (int rep = 0; rep < instances; ++rep) {
    SimParams p;
    p.num_devices = 1 + static_cast<int>(rng.uniform_below(3));
    p.num_edges = 1 + static_cast<int>(rng.uniform_below(2));
    p.horizon_slots = 10 + static_cast<int>(rng.uniform_below(21));
    p.t_step = 5;
    p.arrival_probability = 0.2 + 0.6 * rng.uniform01();
    p.size_choices_mbits = {2.0, 2.7, 3.4, 4.1, 5.0};
    p.deadline_slots = 2 + static_cast<int>(rng.uniform_below(9));
    p.device_gcycles_per_slot = 0.1 + rng.uniform01() * 0.5;
    p.tran_mbits_per_slot = 0.4 + rng.uniform01() * 2.0;
    p.edge_gcycles_per_slot = 0.3 + rng.uniform01() * 4.0;

    Environment env(p);
    env.episode_reset(seed + rep, 1);
    Rng action_rng(substream_seed(seed + rep, Stream::policy));
    std::vector<testing::ScheduledTask> schedule;
    std::map<std::uint64_t, CostEvent> events;
    for (int t = 1; t <= p.horizon_slots; ++t) {
      env.begin_slot();
      for (int m = 0; m < p.num_devices; ++m) {
        if (!env.has_arrival(m)) continue;
        ActionChoice a = policy_random(p.num_edges, action_rng);
        schedule.push_back(testing::ScheduledTask{env.arrival(m), a});
        env.apply_action(m, a);
      }
      for (auto& per_device : env.step_world())
        for (auto& ev : per_device) events[ev.task_id] = ev;
    }
    env.finish_episode();  // throws on an accounting identity violation

    testing::BruteForceSimulator oracle(p);
    auto expected = oracle.run(schedule);
    for (const auto& [id, res] : expected) {
      auto it = events.find(id);
      if (it == events.end()) {
        if (res.slot <= p.horizon_slots) {
          std::cerr << "check FAILED: task " << id << " resolved at " << res.slot
                    << " in the reference but not in the environment\n";
          return 1;
        }
        continue;
      }
      int env_slot = it->second.dropped ? it->second.birth_slot + p.deadline_slots - 1
                                        : it->second.birth_slot + it->second.delay_slots - 1;
      if (it->second.dropped != res.dropped || env_slot != res.slot) {
        std::cerr << "check FAILED: task " << id << " env(slot=" << env_slot
                  << ",dropped=" << it->second.dropped << ") reference(slot=" << res.slot
                  << ",dropped=" << res.dropped << ")\n";
        return 1;
      }
      ++tasks_checked;
    }
  }
  std::cout << "check OK: " << instances << " randomized instances, " << tasks_checked
            << " task resolutions matched the reference simulator\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Slotted mobile-edge offloading simulator with a deep-Q-learning stack"};
  app.require_subcommand(1);

  RunConfig run_cfg;
  std::string run_out, run_trace, run_ckpt_dir;
  bool run_overwrite = false, run_quiet = false;
  CLI::App* run = app.add_subcommand("run", "run one experiment configuration");
  add_config_options(run, run_cfg);
  run->add_option("--out", run_out, "metrics CSV output path");
  run->add_option("--trace", run_trace, "per-slot event trace CSV path");
  run->add_option("--checkpoint_dir", run_ckpt_dir, "directory for per-device checkpoints");
  run->add_flag("--overwrite", run_overwrite, "allow replacing existing output files");
  run->add_flag("--quiet", run_quiet, "suppress per-episode progress lines");

  RunConfig sweep_cfg;
  std::string sweep_axis, sweep_out;
  std::vector<double> sweep_values;
  int sweep_seeds = 1;
  bool sweep_overwrite = false, sweep_quiet = false;
  CLI::App* sweep = app.add_subcommand("sweep", "vary one configuration axis across values");
  add_config_options(sweep, sweep_cfg);
  sweep->add_option("--axis", sweep_axis, "configuration key to vary")->required();
  sweep->add_option("--values", sweep_values, "comma-separated axis values")
      ->required()
      ->delimiter(',');
  sweep->add_option("--seeds", sweep_seeds, "master seeds averaged per point");
  sweep->add_option("--out", sweep_out, "summary CSV output path");
  sweep->add_flag("--overwrite", sweep_overwrite, "allow replacing existing output files");
  sweep->add_flag("--quiet", sweep_quiet, "suppress per-point progress lines");

  int check_instances = 300;
  std::uint64_t check_seed = 20250101;
  CLI::App* check = app.add_subcommand("check", "randomized invariant and reference checks");
  check->add_option("--instances", check_instances, "number of randomized instances");
  check->add_option("--seed", check_seed, "seed for instance generation");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(run_cfg, run_out, run_trace, run_ckpt_dir, run_overwrite, run_quiet);
    if (sweep->parsed())
      return cmd_sweep(sweep_cfg, sweep_axis, sweep_values, sweep_seeds, sweep_out,
                       sweep_overwrite, sweep_quiet);
    if (check->parsed()) return cmd_check(check_instances, check_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
