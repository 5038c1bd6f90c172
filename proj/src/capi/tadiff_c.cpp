// SPDX-License-Identifier: Apache-2.0
#include "tadiff/tadiff.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include <json.hpp>

#include "pipeline/experiments.hpp"

struct tadiff_config {
  tadiff::RunConfig cfg;
};

struct tadiff_report {
  tadiff::EvalReport report;
};

struct tadiff_model {
  std::unique_ptr<tadiff::Localizer> model;
  tadiff::EvalConfig eval;
};

namespace {

thread_local std::string g_last_error;

tadiff_status fail(tadiff_status code, const char* what) {
  g_last_error = what;
  return code;
}

template <typename Fn>
tadiff_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return TADIFF_OK;
  } catch (const tadiff::ConfigError& e) {
    return fail(TADIFF_ERR_CONFIG, e.what());
  } catch (const tadiff::DataError& e) {
    return fail(TADIFF_ERR_DATA, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(TADIFF_ERR_CONFIG, e.what());
  } catch (const std::bad_alloc&) {
    return fail(TADIFF_ERR_INTERNAL, "out of memory");
  } catch (const std::logic_error& e) {
    return fail(TADIFF_ERR_INTERNAL, e.what());
  } catch (const std::exception& e) {
    return fail(TADIFF_ERR_DATA, e.what());
  } catch (...) {
    return fail(TADIFF_ERR_INTERNAL, "unknown error");
  }
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void require(const void* p, const char* what) {
  if (!p) throw tadiff::ConfigError(std::string(what) + " must not be NULL");
}

tadiff::RunCallback run_callback(tadiff_progress_fn progress, void* user) {
  if (!progress) return {};
  return [progress, user](const std::string& label, const tadiff::EvalReport& r) {
    char buf[128];
    std::snprintf(buf, sizeof buf, " ap_avg=%.2f ar_avg=%.2f", r.overall.ap_avg, r.overall.ar_avg);
    progress((label + buf).c_str(), user);
  };
}

} // namespace

extern "C" {

const char* tadiff_version(void) { return "1.0.0"; }

const char* tadiff_last_error(void) { return g_last_error.c_str(); }

void tadiff_string_free(char* s) { std::free(s); }

tadiff_status tadiff_config_default(tadiff_config** out) {
  return guarded([&] {
    require(out, "out");
    auto c = std::make_unique<tadiff_config>();
    c->cfg.resolve();
    *out = c.release();
  });
}

tadiff_status tadiff_config_parse(const char* json, tadiff_config** out) {
  return guarded([&] {
    require(json, "json");
    require(out, "out");
    auto c = std::make_unique<tadiff_config>();
    c->cfg = tadiff::parse_run_config(json);
    *out = c.release();
  });
}

tadiff_status tadiff_config_load(const char* path, tadiff_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto c = std::make_unique<tadiff_config>();
    c->cfg = tadiff::load_run_config(path);
    *out = c.release();
  });
}

void tadiff_config_free(tadiff_config* cfg) { delete cfg; }

tadiff_status tadiff_config_to_json(const tadiff_config* cfg, char** out) {
  return guarded([&] {
    require(cfg, "cfg");
    require(out, "out");
    *out = dup(tadiff::run_config_to_json(cfg->cfg));
  });
}

tadiff_status tadiff_config_set_seed(tadiff_config* cfg, uint64_t seed) {
  return guarded([&] {
    require(cfg, "cfg");
    cfg->cfg.seed = seed;
    cfg->cfg.resolve();
  });
}

tadiff_status tadiff_config_set_protocol(tadiff_config* cfg, const char* protocol) {
  return guarded([&] {
    require(cfg, "cfg");
    require(protocol, "protocol");
    tadiff::parse_protocol(protocol);
    cfg->cfg.protocol = protocol;
  });
}

tadiff_status tadiff_config_set_tadiff(tadiff_config* cfg, int enabled) {
  return guarded([&] {
    require(cfg, "cfg");
    cfg->cfg.model.diffusion.noise = enabled != 0;
    cfg->cfg.model.diffusion.denoise = enabled != 0;
  });
}

tadiff_status tadiff_config_set_steps(tadiff_config* cfg, size_t steps) {
  return guarded([&] {
    require(cfg, "cfg");
    cfg->cfg.model.diffusion.steps = steps;
    cfg->cfg.model.diffusion.validate();
  });
}

tadiff_status tadiff_config_set_output(tadiff_config* cfg, const char* dir) {
  return guarded([&] {
    require(cfg, "cfg");
    require(dir, "dir");
    if (!*dir) throw tadiff::ConfigError("output directory must not be empty");
    cfg->cfg.output = dir;
  });
}

tadiff_status tadiff_config_set_data_dir(tadiff_config* cfg, const char* dir) {
  return guarded([&] {
    require(cfg, "cfg");
    require(dir, "dir");
    if (!*dir) throw tadiff::ConfigError("data directory must not be empty");
    cfg->cfg.data.dir = dir;
  });
}

tadiff_status tadiff_config_get_output(const tadiff_config* cfg, char** dir) {
  return guarded([&] {
    require(cfg, "cfg");
    require(dir, "dir");
    *dir = dup(cfg->cfg.output.string());
  });
}

tadiff_status tadiff_gen_data(const tadiff_config* cfg, char** summary) {
  return guarded([&] {
    require(cfg, "cfg");
    const auto out = tadiff::run_gen_data(cfg->cfg);
    if (summary) *summary = dup(tadiff::format_summary(out.summary, cfg->cfg.data.synthetic));
  });
}

tadiff_status tadiff_train(const tadiff_config* cfg, const char* resume_checkpoint, tadiff_progress_fn progress,
                           void* user, char** checkpoint_path) {
  return guarded([&] {
    require(cfg, "cfg");
    tadiff::TrainOptions opts;
    if (resume_checkpoint) opts.resume = resume_checkpoint;
    if (progress) {
      opts.on_epoch = [progress, user](const tadiff::EpochLog& e) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "epoch %zu loss %.6f cls %.6f reg %.6f lr %.6g", e.epoch, e.loss, e.cls, e.reg,
                      e.lr);
        progress(buf, user);
      };
    }
    const auto out = tadiff::run_train(cfg->cfg, opts);
    if (checkpoint_path) *checkpoint_path = dup(out.checkpoint.string());
  });
}

tadiff_status tadiff_eval(const tadiff_config* cfg, const char* checkpoint, tadiff_report** out) {
  return guarded([&] {
    require(cfg, "cfg");
    require(checkpoint, "checkpoint");
    auto r = std::make_unique<tadiff_report>();
    r->report = tadiff::run_eval(cfg->cfg, checkpoint);
    if (out) *out = r.release();
  });
}

tadiff_status tadiff_ablate(const tadiff_config* cfg, tadiff_progress_fn progress, void* user, char** table_csv) {
  return guarded([&] {
    require(cfg, "cfg");
    tadiff::run_ablation(cfg->cfg, run_callback(progress, user));
    if (table_csv) *table_csv = dup(tadiff::build_report(cfg->cfg.output));
  });
}

tadiff_status tadiff_sweep_steps(const tadiff_config* cfg, size_t from, size_t to, tadiff_progress_fn progress,
                                 void* user, char** table_csv) {
  return guarded([&] {
    require(cfg, "cfg");
    const auto points = tadiff::run_sweep(cfg->cfg, from, to, run_callback(progress, user));
    if (table_csv) {
      std::string t = "steps,ap_avg,ar_avg\n";
      for (const auto& p : points) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%zu,%.2f,%.2f\n", p.steps, p.ap_avg, p.ar_avg);
        t += buf;
      }
      *table_csv = dup(t);
    }
  });
}

tadiff_status tadiff_report_dir(const char* run_dir, char** text) {
  return guarded([&] {
    require(run_dir, "run_dir");
    require(text, "text");
    *text = dup(tadiff::build_report(run_dir));
  });
}

void tadiff_report_free(tadiff_report* report) { delete report; }

tadiff_status tadiff_report_csv(const tadiff_report* report, char** csv) {
  return guarded([&] {
    require(report, "report");
    require(csv, "csv");
    *csv = dup(tadiff::report_csv_header() + "\n" + tadiff::report_csv_row(report->report) + "\n");
  });
}

tadiff_status tadiff_report_json(const tadiff_report* report, char** json) {
  return guarded([&] {
    require(report, "report");
    require(json, "json");
    *json = dup(tadiff::report_json(report->report));
  });
}

tadiff_status tadiff_report_metric(const tadiff_report* report, const char* name, double* value) {
  return guarded([&] {
    require(report, "report");
    require(name, "name");
    require(value, "value");
    const auto& r = report->report;
    const std::string n = name;
    const auto at = [&](const std::vector<double>& v, std::size_t i) {
      if (i >= v.size()) throw tadiff::ConfigError("metric " + n + " not available");
      return v[i];
    };
    const auto opt = [&](const std::optional<double>& v) {
      if (!v) throw tadiff::ConfigError("metric " + n + " was not computed");
      return *v;
    };
    if (n == "ap75") *value = at(r.overall.ap, 0);
    else if (n == "ap85") *value = at(r.overall.ap, 1);
    else if (n == "ap95") *value = at(r.overall.ap, 2);
    else if (n == "ap_avg") *value = r.overall.ap_avg;
    else if (n == "ar1") *value = at(r.overall.ar, 0);
    else if (n == "ar5") *value = at(r.overall.ar, 1);
    else if (n == "ar10") *value = at(r.overall.ar, 2);
    else if (n == "ar_avg") *value = r.overall.ar_avg;
    else if (n == "fisher") *value = opt(r.fisher);
    else if (n == "fisher_before") *value = opt(r.fisher_before);
    else throw tadiff::ConfigError("unknown metric '" + n + "'");
  });
}

tadiff_status tadiff_model_load(const char* checkpoint, tadiff_model** out) {
  return guarded([&] {
    require(checkpoint, "checkpoint");
    require(out, "out");
    const auto ck = tadiff::load_checkpoint(checkpoint);
    const auto cfg = tadiff::checkpoint_config(ck);
    auto m = std::make_unique<tadiff_model>();
    m->model = std::make_unique<tadiff::Localizer>(cfg.model, 0);
    tadiff::restore_parameters(m->model->params(), ck.params);
    m->eval = cfg.eval;
    *out = m.release();
  });
}

void tadiff_model_free(tadiff_model* model) { delete model; }

tadiff_status tadiff_model_predict(const tadiff_model* model, const char* feature_file, double fps,
                                   char** proposals_json) {
  return guarded([&] {
    require(model, "model");
    require(feature_file, "feature_file");
    require(proposals_json, "proposals_json");
    if (!(fps > 0)) throw tadiff::ConfigError("fps must be positive");
    const auto fm = tadiff::load_features(feature_file);
    const auto seq = tadiff::make_sequence(feature_file, fm, fps, fm.frames / fps);
    const auto props = tadiff::predict_video(*model->model, seq.features, fps, seq.video_id, model->eval);
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& p : props) {
      arr.push_back({{"start_sec", p.interval.start_sec}, {"end_sec", p.interval.end_sec}, {"score", p.score}});
    }
    *proposals_json = dup(arr.dump(2) + "\n");
  });
}

} // extern "C"
