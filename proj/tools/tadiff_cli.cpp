// SPDX-License-Identifier: Apache-2.0
// tadiff: command-line front end over the C API.

#include <cstdio>
#include <iostream>
#include <optional>
#include <regex>
#include <string>

#include <CLI11.hpp>

#include "tadiff/tadiff.h"

namespace {

struct ConfigHandle {
  tadiff_config* ptr = nullptr;
  ~ConfigHandle() { tadiff_config_free(ptr); }
};

struct OwnedString {
  char* ptr = nullptr;
  ~OwnedString() { tadiff_string_free(ptr); }
  std::string str() const { return ptr ? ptr : ""; }
};

// Thrown to unwind with a C API status.
struct ApiFailure {
  tadiff_status status;
};

void check(tadiff_status s) {
  if (s != TADIFF_OK) throw ApiFailure{s};
}

void print_progress(const char* line, void*) {
  std::fprintf(stderr, "%s\n", line);
  std::fflush(stderr);
}

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string protocol;
  std::string tadiff;
  std::optional<std::size_t> steps;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool model_flags) {
  cmd->add_option("--config", f.config, "JSON run config (defaults apply to missing keys)");
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--out", f.out, "Output directory");
  if (model_flags) {
    cmd->add_option("--protocol", f.protocol, "intra | cross-AB | cross-BA | open-world")
        ->check(CLI::IsMember({"intra", "cross-AB", "cross-BA", "open-world"}));
    cmd->add_option("--tadiff", f.tadiff, "Enable the diffusion refiner")->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--steps", f.steps, "Number of denoising steps");
  }
}

// Config file first, flags on top.
void build_config(ConfigHandle& h, const CommonFlags& f, bool out_is_data_dir) {
  if (f.config.empty()) {
    check(tadiff_config_default(&h.ptr));
  } else {
    check(tadiff_config_load(f.config.c_str(), &h.ptr));
  }
  if (f.seed) check(tadiff_config_set_seed(h.ptr, *f.seed));
  if (!f.protocol.empty()) check(tadiff_config_set_protocol(h.ptr, f.protocol.c_str()));
  if (!f.tadiff.empty()) check(tadiff_config_set_tadiff(h.ptr, f.tadiff == "on"));
  if (f.steps) check(tadiff_config_set_steps(h.ptr, *f.steps));
  if (!f.out.empty()) {
    check(out_is_data_dir ? tadiff_config_set_data_dir(h.ptr, f.out.c_str())
                          : tadiff_config_set_output(h.ptr, f.out.c_str()));
  }
}

std::string output_dir(const ConfigHandle& h) {
  OwnedString dir;
  check(tadiff_config_get_output(h.ptr, &dir.ptr));
  return dir.str();
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"TADiff temporal forgery localization toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tadiff_version());

  CommonFlags gen_f, train_f, eval_f, ablate_f;
  std::string resume, checkpoint, sweep, run_dir;

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic dataset");
  add_common(gen, gen_f, false);
  gen->get_option("--out")->description("Dataset directory (overrides data.dir)");

  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint");
  add_common(train, train_f, true);
  train->add_option("--resume", resume, "Continue from a checkpoint written by the same configuration");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_common(eval, eval_f, true);
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file (default: <out>/checkpoint.tdck)");

  auto* ablate = app.add_subcommand("ablate", "Toggle ablation or denoising-step sweep");
  add_common(ablate, ablate_f, true);
  ablate->add_option("--sweep-steps", sweep, "Sweep the step count over A..B instead of toggling stages")
      ->check(CLI::Validator(
          [](std::string& s) { return std::regex_match(s, std::regex("[0-9]+\\.\\.[0-9]+")) ? "" : "expected A..B"; },
          "A..B"));

  auto* report = app.add_subcommand("report", "Summarize a run directory");
  report->add_option("run_dir", run_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    ConfigHandle cfg;
    if (gen->parsed()) {
      build_config(cfg, gen_f, true);
      OwnedString summary;
      check(tadiff_gen_data(cfg.ptr, &summary.ptr));
      std::cout << summary.str();
    } else if (train->parsed()) {
      build_config(cfg, train_f, false);
      OwnedString path;
      check(tadiff_train(cfg.ptr, resume.empty() ? nullptr : resume.c_str(), print_progress, nullptr, &path.ptr));
      std::cout << "checkpoint: " << path.str() << "\n";
    } else if (eval->parsed()) {
      build_config(cfg, eval_f, false);
      if (checkpoint.empty()) checkpoint = output_dir(cfg) + "/checkpoint.tdck";
      tadiff_report* rep = nullptr;
      check(tadiff_eval(cfg.ptr, checkpoint.c_str(), &rep));
      OwnedString csv;
      const tadiff_status s = tadiff_report_csv(rep, &csv.ptr);
      tadiff_report_free(rep);
      check(s);
      std::cout << csv.str();
    } else if (ablate->parsed()) {
      build_config(cfg, ablate_f, false);
      OwnedString table;
      if (!sweep.empty()) {
        const auto dots = sweep.find("..");
        const std::size_t from = std::stoul(sweep.substr(0, dots));
        const std::size_t to = std::stoul(sweep.substr(dots + 2));
        check(tadiff_sweep_steps(cfg.ptr, from, to, print_progress, nullptr, &table.ptr));
      } else {
        check(tadiff_ablate(cfg.ptr, print_progress, nullptr, &table.ptr));
      }
      std::cout << table.str();
    } else if (report->parsed()) {
      OwnedString text;
      check(tadiff_report_dir(run_dir.c_str(), &text.ptr));
      std::cout << text.str();
    }
  } catch (const ApiFailure& f) {
    std::cerr << "error: " << tadiff_last_error() << "\n";
    return f.status == TADIFF_ERR_CONFIG ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
