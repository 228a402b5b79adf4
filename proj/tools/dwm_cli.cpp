#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "dwm/error.hpp"
#include "dwm/experiment.hpp"
#include "dwm/simulate.hpp"
#include "dwm/watermark.hpp"

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicates;
  std::optional<std::string> out;
  bool exact_window = false;
  std::uint64_t replicate = 0;
};

dwm::ExperimentConfig load(const Options& opt) {
  dwm::ExperimentConfig cfg = opt.config.empty() ? dwm::parse_config(dwm::Json::object())
                                                 : dwm::load_config(opt.config);
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.replicates) {
    if (*opt.replicates < 1) throw dwm::ConfigError("--replicates: must be >= 1");
    cfg.replicates = *opt.replicates;
  }
  if (opt.out) cfg.out = *opt.out;
  if (opt.exact_window) cfg.detector.window.reset();
  return cfg;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
  std::cout << "wrote " << path.string() << "\n";
}

void print_metrics(const dwm::MetricsRow& r) {
  std::cout << "beta " << dwm::format_double(r.beta) << ": mean delay " << dwm::format_double(r.mean_delay)
            << ", censored " << dwm::format_double(r.censored_frac) << ", false alarms "
            << dwm::format_double(r.false_alarm_rate) << ", MTBFA est " << dwm::format_double(r.mtbfa_est)
            << ", mean cost " << dwm::format_double(r.mean_cost) << " (se "
            << dwm::format_double(r.cost_se) << ")\n";
}

int cmd_simulate(const Options& opt) {
  const auto cfg = load(opt);
  const auto setup = dwm::prepare(cfg);
  const auto policy = dwm::deployed_policy(setup, cfg.beta);
  const auto traj = dwm::simulate(setup.kernel, policy, dwm::make_attack(cfg, setup, policy),
                                  cfg.horizon, cfg.onset, cfg.seed, opt.replicate, cfg.initial_state);
  write_file(fs::path(cfg.out) / "trajectory.csv", dwm::trajectory_csv(traj));
  return 0;
}

int cmd_detect(const Options& opt) {
  const auto cfg = load(opt);
  const auto setup = dwm::prepare(cfg);
  const auto result = dwm::run_experiment(cfg, setup, cfg.beta);
  write_file(fs::path(cfg.out) / "outcomes.csv", dwm::outcomes_csv(cfg, cfg.beta, result.replicates));
  write_file(fs::path(cfg.out) / "metrics.csv", dwm::sweep_csv({result.metrics}));
  print_metrics(result.metrics);
  return 0;
}

int cmd_sweep(const Options& opt) {
  const auto cfg = load(opt);
  const auto setup = dwm::prepare(cfg);
  const auto sweep = dwm::sweep_beta(cfg, setup, cfg.beta_grid);
  write_file(fs::path(cfg.out) / "sweep.csv", dwm::sweep_csv(sweep.rows));
  write_file(fs::path(cfg.out) / "sweep_loss.csv", dwm::sweep_loss_csv(sweep.loss));
  for (const auto& row : sweep.rows) print_metrics(row);
  return 0;
}

int cmd_bounds(const Options& opt) {
  const auto cfg = load(opt);
  const auto setup = dwm::prepare(cfg);
  const auto report = dwm::bounds_report(cfg, setup);
  write_file(fs::path(cfg.out) / "bounds.json", dwm::to_json(report).dump(2) + "\n");
  write_file(fs::path(cfg.out) / "bounds.csv", dwm::bounds_csv_header() + dwm::bounds_csv_row(report));
  std::cout << dwm::bounds_summary(report);
  return 0;
}

int cmd_policy_eval(const Options& opt) {
  const auto cfg = load(opt);
  const auto setup = dwm::prepare(cfg);
  if (cfg.sensornet) {
    const auto model = dwm::sensornet::build_model(cfg.params);
    const int lo = cfg.threshold_lo;
    const int hi = cfg.threshold_hi;
    const auto from_start = dwm::sensornet::find_optimal_threshold(
        model, lo, hi, dwm::sensornet::ThresholdObjective::initial_state);
    const auto stationary = dwm::sensornet::find_optimal_threshold(
        model, lo, hi, dwm::sensornet::ThresholdObjective::stationary);
    std::string csv = dwm::csv_line({"threshold", "cost_initial_state", "cost_stationary"});
    for (std::size_t i = 0; i < from_start.table.size(); ++i) {
      csv += dwm::csv_line({std::to_string(from_start.table[i].first),
                            dwm::format_double(from_start.table[i].second),
                            dwm::format_double(stationary.table[i].second)});
    }
    write_file(fs::path(cfg.out) / "thresholds.csv", csv);
    std::cout << "best threshold: " << from_start.best << " (initial state), " << stationary.best
              << " (stationary)\n";
  }
  const auto report = dwm::loss_report(setup.kernel, setup.optimal, dwm::WatermarkSpec{setup.nu, cfg.beta},
                                       setup.cost, setup.alpha);
  const auto eta = dwm::discounted_cost(setup.kernel, setup.optimal, setup.cost, setup.alpha);
  write_file(fs::path(cfg.out) / "loss.json", dwm::to_json(report).dump(2) + "\n");
  write_file(fs::path(cfg.out) / "loss.csv",
             dwm::loss_csv_header(setup.kernel.states()) + dwm::loss_csv_row(report));
  std::cout << "eta(initial state) = " << dwm::format_double(eta(cfg.initial_state))
            << ", loss at beta " << dwm::format_double(cfg.beta) << " = "
            << dwm::format_double(report.exact_gap(cfg.initial_state)) << "\n";
  return 0;
}

int cmd_trace(const Options& opt) {
  const auto cfg = load(opt);
  const auto setup = dwm::prepare(cfg);
  write_file(fs::path(cfg.out) / "trace.csv", dwm::trace_csv(dwm::emit_trace(cfg, setup, opt.replicate)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic watermarking for finite MDPs"};
  app.require_subcommand(1);
  Options opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "experiment config (JSON)");
    sub->add_option("--seed", opt.seed, "root seed");
    sub->add_option("--replicates", opt.replicates, "number of replicates");
    sub->add_option("--out", opt.out, "output directory");
    sub->add_flag("--exact-window", opt.exact_window, "score every candidate change point");
  };
  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Options&);
    bool per_replicate;
  };
  const Command commands[] = {
      {"simulate", "write one closed-loop trajectory", cmd_simulate, true},
      {"detect", "Monte Carlo detection experiment at the configured beta", cmd_detect, false},
      {"sweep-beta", "detection and control loss over the beta grid", cmd_sweep, false},
      {"bounds", "asymptotic MD / MTBFA bounds", cmd_bounds, false},
      {"policy-eval", "threshold table and control-loss report", cmd_policy_eval, false},
      {"trace", "CUSUM score trace of one replicate", cmd_trace, true},
  };
  int (*selected)(const Options&) = nullptr;
  for (const Command& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_common(sub);
    if (c.per_replicate) sub->add_option("--replicate", opt.replicate, "replicate index");
    sub->callback([&selected, run = c.run] { selected = run; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    return selected(opt);
  } catch (const dwm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
