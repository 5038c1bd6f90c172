// SPDX-License-Identifier: Apache-2.0
#include "pipeline/experiments.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace tadiff {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write " + path.string());
  os << text;
  if (!os) throw DataError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string loss_csv(const std::vector<EpochLog>& log) {
  std::string out = "epoch,loss,cls,reg,lr\n";
  for (const auto& e : log) {
    out += std::to_string(e.epoch) + fmt(",%.6f", e.loss) + fmt(",%.6f", e.cls) + fmt(",%.6f", e.reg) +
           fmt(",%.8f", e.lr) + "\n";
  }
  return out;
}

std::vector<EpochLog> parse_loss_csv(const std::string& text, std::size_t keep) {
  std::vector<EpochLog> out;
  std::istringstream is(text);
  std::string line;
  std::getline(is, line); // header
  while (out.size() < keep && std::getline(is, line)) {
    EpochLog e;
    if (std::sscanf(line.c_str(), "%zu,%lf,%lf,%lf,%lf", &e.epoch, &e.loss, &e.cls, &e.reg, &e.lr) != 5) {
      throw DataError("resume: malformed loss.csv row '" + line + "'");
    }
    out.push_back(e);
  }
  return out;
}

const char* on_off(bool b) { return b ? "on" : "off"; }

} // namespace

GenDataOutcome run_gen_data(const RunConfig& cfg) {
  cfg.validate();
  GenDataOutcome out;
  out.manifest = generate_dataset(cfg.data.synthetic, cfg.data.dir);
  out.summary = summarize(out.manifest);
  write_text(cfg.data.dir / "generation.json", run_config_to_json(cfg));
  return out;
}

std::string format_summary(const DatasetSummary& s, const SyntheticConfig& cfg) {
  std::string out = "videos: " + std::to_string(s.videos) + " (real " + std::to_string(s.real_videos) + ")\n";
  for (const auto& [dom, n] : s.videos_per_domain) out += "domain " + dom + ": " + std::to_string(n) + " videos\n";
  for (const auto& m : cfg.mechanisms) {
    const auto it = s.segments_per_method.find(m.name);
    const std::size_t n = it == s.segments_per_method.end() ? 0 : it->second;
    out += "method " + m.name + " [" + std::string(domain_name(m.domain)) + "]: " + std::to_string(n) + " segments";
    if (m.domain == Domain::OpenWorld) out += " (evaluation only)";
    out += "\n";
  }
  return out;
}

Manifest load_dataset(const RunConfig& cfg) {
  const fs::path path = cfg.data.dir / "manifest.json";
  if (!fs::exists(path)) throw DataError("no dataset at " + cfg.data.dir.string() + " (run gen-data first)");
  return load_manifest(path);
}

Split protocol_split(const RunConfig& cfg, const Manifest& m, Protocol protocol) {
  return split_dataset(m, protocol, cfg.seed, cfg.data.train_fraction);
}

std::uint64_t init_seed_for(std::uint64_t train_seed) { return derive_seed(train_seed, "init"); }

namespace {

std::string identity_with_seed(const RunConfig& cfg) {
  auto j = nlohmann::ordered_json::parse(training_identity_json(cfg));
  j["train_seed"] = cfg.train.seed;
  return j.dump(2) + "\n";
}

} // namespace

TrainOutcome run_train(const RunConfig& cfg, const TrainOptions& opts) {
  cfg.validate();
  const Protocol protocol = parse_protocol(cfg.protocol);
  const Manifest m = load_dataset(cfg);
  const Split split = protocol_split(cfg, m, protocol);
  const auto samples = prepare_samples(split.train, cfg.model.pyramid, cfg.train.assignment);

  Localizer model(cfg.model, init_seed_for(cfg.train.seed));
  Trainer trainer(model, cfg.train);
  const std::string identity = identity_with_seed(cfg);

  TrainOutcome out;
  out.checkpoint = cfg.output / "checkpoint.tdck";
  if (opts.resume) {
    const Checkpoint ck = load_checkpoint(*opts.resume);
    if (ck.config_json != identity) throw ConfigError("resume: checkpoint was trained with a different configuration");
    if (!ck.optimizer) throw DataError("resume: checkpoint carries no optimizer state");
    restore_parameters(model.params(), ck.params);
    trainer.restore(ck.epochs_done, *ck.optimizer);
    const fs::path log_path = cfg.output / "loss.csv";
    if (fs::exists(log_path)) out.log = parse_loss_csv(read_text(log_path), ck.epochs_done);
  }

  fs::create_directories(cfg.output);
  write_text(cfg.output / "config.json", run_config_to_json(cfg));
  const std::size_t limit = opts.stop_after ? std::min(opts.stop_after, cfg.train.epochs) : cfg.train.epochs;
  while (trainer.epochs_done() < limit) {
    out.log.push_back(trainer.run_epoch(samples));
    write_text(cfg.output / "loss.csv", loss_csv(out.log));
    Checkpoint ck;
    ck.config_json = identity;
    ck.epochs_done = trainer.epochs_done();
    ck.params = snapshot_parameters(model.params());
    ck.optimizer = trainer.optimizer_state();
    save_checkpoint(out.checkpoint, ck);
    if (opts.on_epoch) opts.on_epoch(out.log.back());
  }
  return out;
}

RunConfig checkpoint_config(const Checkpoint& ck) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(ck.config_json);
  } catch (const std::exception& e) {
    throw DataError(std::string("checkpoint config is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("train_seed") || !j["train_seed"].is_number_unsigned()) {
    throw DataError("checkpoint config lacks train_seed");
  }
  const auto train_seed = j["train_seed"].get<std::uint64_t>();
  j.erase("train_seed");
  RunConfig cfg;
  try {
    cfg = parse_run_config(j.dump());
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint config: ") + e.what());
  }
  cfg.train.seed = train_seed;
  return cfg;
}

EvalReport run_eval(const RunConfig& cfg, const fs::path& checkpoint) {
  cfg.validate();
  const Protocol protocol = parse_protocol(cfg.protocol);
  const Checkpoint ck = load_checkpoint(checkpoint);
  const RunConfig trained = checkpoint_config(ck);
  if (trained.protocol != cfg.protocol) {
    throw DataError("checkpoint was trained for protocol '" + trained.protocol + "'; cannot evaluate protocol '" +
                    cfg.protocol + "'");
  }
  Localizer model(trained.model, 0);
  restore_parameters(model.params(), ck.params);

  const Manifest m = load_dataset(cfg);
  const Split split = protocol_split(trained, m, protocol);
  const EvalReport rep = evaluate_model(model, split.test, cfg.protocol, cfg.eval);
  write_text(cfg.output / "eval_config.json", run_config_to_json(cfg));
  write_text(cfg.output / "results.csv", report_csv_header() + "\n" + report_csv_row(rep) + "\n");
  write_text(cfg.output / "report.json", report_json(rep));
  return rep;
}

EvalReport train_and_evaluate(const RunConfig& cfg, std::span<const TrainSample> train, const Manifest& test,
                              const EpochCallback& on_epoch) {
  Localizer model(cfg.model, init_seed_for(cfg.train.seed));
  Trainer trainer(model, cfg.train);
  trainer.fit(train, on_epoch);
  return evaluate_model(model, test, cfg.protocol, cfg.eval);
}

double median(std::vector<double> v) {
  if (v.empty()) throw ContractError("median of an empty list");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace {

void summarize_runs(const std::vector<EvalReport>& runs, double& ap, double& ar) {
  std::vector<double> aps, ars;
  for (const auto& r : runs) {
    aps.push_back(r.overall.ap_avg);
    ars.push_back(r.overall.ar_avg);
  }
  ap = median(aps);
  ar = median(ars);
}

std::string runs_header(const std::string& lead) {
  const std::string h = report_csv_header();
  return lead + h.substr(h.find(',')) + "\n";
}

std::string run_row_tail(const EvalReport& r) {
  const std::string row = report_csv_row(r);
  return row.substr(row.find(','));
}

} // namespace

std::vector<AblationCell> run_ablation(const RunConfig& cfg, const RunCallback& on_run) {
  cfg.validate();
  if (cfg.model.diffusion.steps == 0) throw ConfigError("ablate: model.diffusion.steps must be at least 1");
  const Manifest m = load_dataset(cfg);
  std::vector<AblationCell> cells;
  std::string table = "protocol,noise,denoise,seeds,ap_avg,ar_avg\n";
  std::string runs = runs_header("protocol,noise,denoise,seed");
  constexpr std::pair<bool, bool> kRows[] = {{false, false}, {true, false}, {false, true}, {true, true}};
  for (const auto& pname : cfg.ablate.protocols) {
    const Split split = protocol_split(cfg, m, parse_protocol(pname));
    const auto samples = prepare_samples(split.train, cfg.model.pyramid, cfg.train.assignment);
    for (const auto& [noise, denoise] : kRows) {
      AblationCell cell{pname, noise, denoise, cfg.ablate.seeds, {}, 0.0, 0.0};
      for (auto seed : cfg.ablate.seeds) {
        RunConfig c = cfg;
        c.protocol = pname;
        c.model.diffusion.noise = noise;
        c.model.diffusion.denoise = denoise;
        c.train.seed = seed;
        cell.runs.push_back(train_and_evaluate(c, samples, split.test));
        runs += pname + "," + on_off(noise) + "," + on_off(denoise) + "," + std::to_string(seed) +
                run_row_tail(cell.runs.back()) + "\n";
        if (on_run) {
          on_run(pname + " noise=" + on_off(noise) + " denoise=" + on_off(denoise) + " seed=" + std::to_string(seed),
                 cell.runs.back());
        }
      }
      summarize_runs(cell.runs, cell.ap_avg, cell.ar_avg);
      table += pname + "," + on_off(noise) + "," + on_off(denoise) + "," + std::to_string(cell.seeds.size()) +
               fmt(",%.2f", cell.ap_avg) + fmt(",%.2f", cell.ar_avg) + "\n";
      cells.push_back(std::move(cell));
    }
  }
  write_text(cfg.output / "config.json", run_config_to_json(cfg));
  write_text(cfg.output / "ablation.csv", table);
  write_text(cfg.output / "ablation_runs.csv", runs);
  return cells;
}

std::vector<SweepPoint> run_sweep(const RunConfig& cfg, std::size_t from, std::size_t to, const RunCallback& on_run) {
  cfg.validate();
  if (from > to) throw ConfigError("sweep: empty step range " + std::to_string(from) + ".." + std::to_string(to));
  const std::string& pname = cfg.ablate.sweep_protocol;
  const Manifest m = load_dataset(cfg);
  const Split split = protocol_split(cfg, m, parse_protocol(pname));
  const auto samples = prepare_samples(split.train, cfg.model.pyramid, cfg.train.assignment);
  std::vector<SweepPoint> points;
  std::string table = "protocol,steps,seeds,ap_avg,ar_avg\n";
  std::string runs = runs_header("protocol,steps,seed");
  for (std::size_t s = from; s <= to; ++s) {
    SweepPoint pt;
    pt.steps = s;
    for (auto seed : cfg.ablate.seeds) {
      RunConfig c = cfg;
      c.protocol = pname;
      c.model.diffusion.steps = s;
      c.model.diffusion.noise = true;
      c.model.diffusion.denoise = true;
      c.train.seed = seed;
      c.model.validate();
      pt.runs.push_back(train_and_evaluate(c, samples, split.test));
      runs += pname + "," + std::to_string(s) + "," + std::to_string(seed) + run_row_tail(pt.runs.back()) + "\n";
      if (on_run) on_run(pname + " steps=" + std::to_string(s) + " seed=" + std::to_string(seed), pt.runs.back());
    }
    summarize_runs(pt.runs, pt.ap_avg, pt.ar_avg);
    table += pname + "," + std::to_string(s) + "," + std::to_string(cfg.ablate.seeds.size()) + fmt(",%.2f", pt.ap_avg) +
             fmt(",%.2f", pt.ar_avg) + "\n";
    points.push_back(std::move(pt));
  }
  write_text(cfg.output / "config.json", run_config_to_json(cfg));
  write_text(cfg.output / "sweep.csv", table);
  write_text(cfg.output / "sweep_runs.csv", runs);
  return points;
}

std::string build_report(const fs::path& run_dir) {
  if (!fs::is_directory(run_dir)) throw DataError("run directory " + run_dir.string() + " does not exist");
  std::vector<fs::path> csvs;
  for (const auto& e : fs::directory_iterator(run_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") csvs.push_back(e.path());
  }
  std::sort(csvs.begin(), csvs.end());
  std::string out = "run: " + run_dir.generic_string() + "\n";
  for (const char* name : {"config.json", "eval_config.json", "generation.json"}) {
    const fs::path p = run_dir / name;
    if (fs::exists(p)) {
      out += "config sha256: " + sha256_hex(read_text(p)) + " (" + name + ")\n";
      break;
    }
  }
  if (csvs.empty()) out += "no CSV results found\n";
  for (const auto& p : csvs) {
    out += "\n[" + p.filename().string() + "]\n" + read_text(p);
    if (!out.empty() && out.back() != '\n') out += "\n";
  }
  return out;
}

} // namespace tadiff
