// Command-line front end over the C API.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "gltt/gltt.h"

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

int exit_code(int status) {
  switch (status) {
    case GLTT_OK: return 0;
    case GLTT_ERR_CONFIG:
    case GLTT_ERR_PARAMETER:
    case GLTT_ERR_USAGE: return kExitConfig;
    case GLTT_ERR_DATA:
    case GLTT_ERR_VERSION:
    case GLTT_ERR_INPUT:
    case GLTT_ERR_SHAPE: return kExitData;
    case GLTT_ERR_NUMERIC:
    case GLTT_ERR_METRIC: return kExitNumeric;
    default: return kExitInternal;
  }
}

int report(int status) {
  if (status != GLTT_OK)
    std::fprintf(stderr, "gltt: %s error: %s\n", gltt_status_name(status), gltt_last_error());
  return exit_code(status);
}

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return true;
}

std::string default_frames_path(const std::string& report) {
  const auto dot = report.rfind('.');
  const auto slash = report.rfind('/');
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
  return (has_ext ? report.substr(0, dot) : report) + "_frames.csv";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GLT-T single-object tracker"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(gltt_version()));

  std::string config_path, out, checkpoint, sequence, data, report_path, frames, axis, spec_path;
  std::vector<std::string> values;

  auto* train = app.add_subcommand("train", "Train a model from a JSON config");
  train->add_option("--config", config_path, "JSON config")->required();
  train->add_option("--out", out, "Output directory")->required();

  auto* track = app.add_subcommand("track", "Track one sequence");
  track->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  track->add_option("--sequence", sequence, "Sequence directory")->required();
  track->add_option("--out", out, "Output CSV")->required();

  auto* eval = app.add_subcommand("eval", "One Pass Evaluation over a dataset");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--data", data, "Directory of sequence directories")->required();
  eval->add_option("--report", report_path, "Summary JSON")->required();
  eval->add_option("--frames", frames, "Per-frame CSV (default: <report>_frames.csv)");

  auto* ablate = app.add_subcommand("ablate", "Train and evaluate one variant per value");
  ablate->add_option("--axis", axis, "m, n or components")->required();
  ablate->add_option("--values", values, "Values, space or comma separated")
      ->required()
      ->delimiter(',');
  ablate->add_option("--out", out, "Output CSV")->required();
  ablate->add_option("--config", config_path, "Base JSON config (default settings when omitted)");

  auto* gen = app.add_subcommand("gen", "Generate synthetic sequences");
  gen->add_option("--spec", spec_path, "Synthetic spec JSON")->required();
  gen->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  // An unreadable config or spec file is a configuration problem.
  const auto load = [](const std::string& path, std::string& text) {
    if (read_file(path, text)) return true;
    std::fprintf(stderr, "gltt: config error: cannot read '%s'\n", path.c_str());
    return false;
  };

  if (*train) {
    std::string cfg;
    if (!load(config_path, cfg)) return kExitConfig;
    return report(gltt_train(cfg.c_str(), out.c_str()));
  }
  if (*track) return report(gltt_track(checkpoint.c_str(), sequence.c_str(), out.c_str()));
  if (*eval) {
    if (frames.empty()) frames = default_frames_path(report_path);
    return report(gltt_evaluate(checkpoint.c_str(), data.c_str(), report_path.c_str(), frames.c_str()));
  }
  if (*ablate) {
    std::string cfg;
    if (!config_path.empty() && !load(config_path, cfg)) return kExitConfig;
    std::string joined;
    for (const auto& v : values) joined += (joined.empty() ? "" : ",") + v;
    return report(gltt_ablate(config_path.empty() ? nullptr : cfg.c_str(), axis.c_str(),
                              joined.c_str(), out.c_str()));
  }
  if (*gen) {
    std::string spec;
    if (!load(spec_path, spec)) return kExitConfig;
    return report(gltt_generate(spec.c_str(), out.c_str()));
  }
  return kExitInternal;
}
