#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "neurobit/data_io.hpp"
#include "neurobit/harness.hpp"
#include "neurobit/mesh.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace neurobit;

namespace {

json load_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  json j;
  f >> j;
  return j;
}

int cmd_synth(const std::string& out_dir, int subjects, int trials_per_state,
              std::uint64_t seed) {
  const auto recordings = generate_synthetic_dataset(subjects, trials_per_state, seed);
  DatasetManifest manifest;
  for (const auto& r : recordings) manifest.subjects.push_back(r.subject_id);
  manifest.channel_names = deap_channel_names();
  manifest.provenance = "synthetic";
  write_deap_export(out_dir, recordings, manifest);
  json out = {{"out", out_dir},
              {"subjects", subjects},
              {"trials_per_subject", recordings.front().trials.size()},
              {"seed", seed}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_inspect(const std::string& in_dir) {
  DatasetManifest manifest;
  const auto recordings = load_deap_export(in_dir, &manifest);
  json states = json::object();
  for (const auto& rec : recordings) {
    for (const auto& rating : rec.ratings) {
      const AffectiveState s = label_affective_state(rating[0], rating[1]);
      const std::string key = to_string(s);
      states[key] = states.value(key, 0) + 1;
    }
  }
  json out = {{"dir", in_dir},
              {"provenance", manifest.provenance},
              {"subjects", manifest.subjects},
              {"channels", manifest.channel_names.size()},
              {"sample_rate", manifest.sample_rate},
              {"trial_state_counts", states},
              {"valid", true}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& data_dir,
            const std::string& out_dir) {
  const ExperimentConfig cfg = experiment_config_from_json(load_json_file(config_path));
  DatasetManifest manifest;
  const auto recordings = load_deap_export(data_dir, &manifest);
  const CrrReport report = run_experiment(cfg, recordings, manifest);
  write_reports({report}, out_dir);
  json out = {{"out", out_dir},
              {"mean_crr", report.mean_crr},
              {"stderr_crr", report.stderr_crr},
              {"config_hash", report.config_hash}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir) {
  const json j = load_json_file(config_path);
  const ExperimentConfig base = experiment_config_from_json(j.at("base"));
  const json& grid = j.at("grid");

  DatasetManifest manifest;
  const auto recordings = load_deap_export(data_dir, &manifest);

  std::vector<CrrReport> reports;
  for (const json& entry : grid) {
    ExperimentConfig cfg = base;
    if (entry.contains("model")) cfg.model = model_kind_from_string(entry.at("model"));
    cfg.conv_filters = entry.value("conv_filters", cfg.conv_filters);
    cfg.recurrent_units = entry.value("recurrent_units", cfg.recurrent_units);
    cfg.state = entry.value("state", cfg.state);
    cfg.band = entry.value("band", cfg.band);
    cfg.electrodes = entry.value("electrodes", cfg.electrodes);
    cfg.label = entry.value("label", "");
    std::cerr << "sweep: " << (cfg.label.empty() ? to_string(cfg.model) : cfg.label)
              << "\n";
    reports.push_back(run_experiment(cfg, recordings, manifest));
  }
  write_reports(reports, out_dir);
  json summary = json::array();
  for (const CrrReport& r : reports) {
    summary.push_back({{"label", r.config.label},
                       {"mean_crr", r.mean_crr},
                       {"stderr_crr", r.stderr_crr}});
  }
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_report(const std::string& in_dir, const std::string& format) {
  const json all = load_json_file((fs::path(in_dir) / "results.json").string());
  if (format == "json") {
    std::cout << all.dump(2) << "\n";
    return 0;
  }
  std::cout << "experiment,label,model,state,band,electrodes,mean_crr,stderr_crr\n";
  for (const json& item : all) {
    const CrrReport r = report_from_json(item);
    std::cout << r.config.experiment << "," << r.config.label << ","
              << to_string(r.config.model) << "," << r.config.state << ","
              << r.config.band << "," << r.config.electrodes << "," << r.mean_crr << ","
              << r.stderr_crr << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EEG person identification toolkit"};
  app.require_subcommand(1);

  std::string out_dir = "synth_export";
  int subjects = 8;
  int trials_per_state = 5;
  std::uint64_t seed = 7;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset export");
  synth->add_option("--out", out_dir, "output directory");
  synth->add_option("--subjects", subjects, "number of subjects");
  synth->add_option("--trials-per-state", trials_per_state, "trials per affective state");
  synth->add_option("--seed", seed, "generator seed");

  std::string inspect_dir;
  auto* inspect = app.add_subcommand("inspect", "validate a dataset export");
  inspect->add_option("--in", inspect_dir, "export directory")->required();

  std::string run_config, run_data, run_out = "results";
  auto* run = app.add_subcommand("run", "execute one experiment");
  run->add_option("--config", run_config, "experiment config JSON")->required();
  run->add_option("--data", run_data, "dataset export directory")->required();
  run->add_option("--out", run_out, "report output directory");

  std::string sweep_config, sweep_data, sweep_out = "results";
  auto* sweep = app.add_subcommand("sweep", "execute a config grid");
  sweep->add_option("--config", sweep_config, "sweep config JSON")->required();
  sweep->add_option("--data", sweep_data, "dataset export directory")->required();
  sweep->add_option("--out", sweep_out, "report output directory");

  std::string report_dir, report_format = "json";
  auto* report = app.add_subcommand("report", "print a stored results directory");
  report->add_option("--in", report_dir, "results directory")->required();
  report->add_option("--format", report_format, "json | csv")
      ->check(CLI::IsMember({"json", "csv"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(out_dir, subjects, trials_per_state, seed);
    if (inspect->parsed()) return cmd_inspect(inspect_dir);
    if (run->parsed()) return cmd_run(run_config, run_data, run_out);
    if (sweep->parsed()) return cmd_sweep(sweep_config, sweep_data, sweep_out);
    if (report->parsed()) return cmd_report(report_dir, report_format);
  } catch (const std::exception& e) {
    json err = {{"error", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
