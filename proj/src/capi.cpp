#include "capgen/capgen.h"

#include <cstring>
#include <string>

#include "capgen/errors.hpp"
#include "capgen/pipeline.hpp"
#include "capgen/selftest.hpp"

struct capgen_config {
  capgen::RunConfig cfg;
};

struct capgen_vocab {
  capgen::Vocab vocab;
};

struct capgen_model {
  capgen::Model model;
};

namespace {

thread_local std::string g_last_error;
capgen_log_fn g_log = nullptr;
void* g_log_user = nullptr;

template <class F>
capgen_status guarded(F&& body) {
  try {
    return body();
  } catch (const capgen::NumericError& e) {
    g_last_error = e.what();
    return CAPGEN_NUMERIC_ERROR;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CAPGEN_INPUT_ERROR;
  } catch (...) {
    g_last_error = "unknown error";
    return CAPGEN_INPUT_ERROR;
  }
}

capgen_status null_arg(const char* what) {
  g_last_error = std::string("null argument: ") + what;
  return CAPGEN_INPUT_ERROR;
}

void log_all(const std::vector<std::string>& messages) {
  if (!g_log) return;
  for (const auto& m : messages) g_log(m.c_str(), g_log_user);
}

const capgen::RunConfig& config_or_default(const capgen_config* config) {
  static const capgen::RunConfig empty;
  return config ? config->cfg : empty;
}

}  // namespace

extern "C" {

const char* capgen_last_error(void) { return g_last_error.c_str(); }

const char* capgen_version(void) { return "1.0.0"; }

void capgen_set_log_handler(capgen_log_fn fn, void* user) {
  g_log = fn;
  g_log_user = user;
}

capgen_config* capgen_config_new(void) { return new (std::nothrow) capgen_config{}; }

void capgen_config_free(capgen_config* config) { delete config; }

capgen_status capgen_config_load_file(capgen_config* config, const char* path) {
  if (!config || !path) return null_arg("config/path");
  return guarded([&] {
    config->cfg.load_file(path);
    return CAPGEN_OK;
  });
}

capgen_status capgen_config_set(capgen_config* config, const char* key, const char* value) {
  if (!config || !key || !value) return null_arg("config/key/value");
  return guarded([&] {
    config->cfg.set(key, value);
    return CAPGEN_OK;
  });
}

capgen_status capgen_build_vocab(const char* captions_path, const char* out_path, uint32_t max_size,
                                 const capgen_config* config, capgen_vocab_stats* stats) {
  if (!captions_path || !out_path) return null_arg("captions_path/out_path");
  return guarded([&] {
    const auto s = capgen::build_vocab_file(captions_path, out_path, max_size, config_or_default(config));
    log_all(s.warnings);
    if (stats) {
      stats->token_count = static_cast<uint32_t>(s.token_count);
      stats->coverage = s.coverage;
      stats->caption_count = static_cast<uint32_t>(s.caption_count);
    }
    return CAPGEN_OK;
  });
}

capgen_status capgen_vocab_load(const char* path, capgen_vocab** out) {
  if (!path || !out) return null_arg("path/out");
  *out = nullptr;
  return guarded([&] {
    *out = new capgen_vocab{capgen::Vocab::load(path)};
    return CAPGEN_OK;
  });
}

void capgen_vocab_free(capgen_vocab* vocab) { delete vocab; }

uint32_t capgen_vocab_size(const capgen_vocab* vocab) {
  return vocab ? static_cast<uint32_t>(vocab->vocab.size()) : 0;
}

capgen_status capgen_train(const capgen_config* config, capgen_epoch_fn on_epoch, void* user,
                           capgen_train_summary* summary) {
  if (!config) return null_arg("config");
  return guarded([&] {
    capgen::EpochCallback cb;
    if (on_epoch)
      cb = [on_epoch, user](const capgen::EpochRow& r) {
        const capgen_epoch_row row{static_cast<uint32_t>(r.epoch), r.train_loss, r.val_loss, r.val_bleu4,
                                   r.wall_seconds};
        on_epoch(&row, user);
      };
    const auto s = capgen::train_from_config(config->cfg, cb);
    log_all(s.warnings);
    if (summary) {
      summary->epochs_run = static_cast<uint32_t>(s.report.rows.size());
      summary->best_epoch = static_cast<uint32_t>(s.report.best_epoch);
      summary->early_stopped = s.report.stop_reason == capgen::StopReason::kEarlyStop ? 1 : 0;
      summary->train_images = static_cast<uint32_t>(s.train_images);
      summary->val_images = static_cast<uint32_t>(s.val_images);
      summary->test_images = static_cast<uint32_t>(s.test_images);
    }
    return CAPGEN_OK;
  });
}

capgen_status capgen_model_load(const char* checkpoint_path, capgen_model** out) {
  if (!checkpoint_path || !out) return null_arg("checkpoint_path/out");
  *out = nullptr;
  return guarded([&] {
    *out = new capgen_model{capgen::load_model(checkpoint_path)};
    return CAPGEN_OK;
  });
}

void capgen_model_free(capgen_model* model) { delete model; }

uint32_t capgen_model_vocab_size(const capgen_model* model) {
  return model ? static_cast<uint32_t>(model->model.config.vocab_size) : 0;
}

capgen_status capgen_caption(const capgen_model* model, const capgen_vocab* vocab, const char* feature_path,
                             char* buf, size_t cap, size_t* needed) {
  if (!model || !vocab || !feature_path) return null_arg("model/vocab/feature_path");
  return guarded([&] {
    const std::string caption = capgen::caption_file(model->model, vocab->vocab, feature_path);
    if (needed) *needed = caption.size() + 1;
    if (buf && cap > 0) {
      const std::size_t n = std::min(cap - 1, caption.size());
      std::memcpy(buf, caption.data(), n);
      buf[n] = '\0';
    }
    return CAPGEN_OK;
  });
}

capgen_status capgen_evaluate(const capgen_model* model, const capgen_vocab* vocab, const char* captions_path,
                              const char* features_dir, const char* report_path, const capgen_config* config,
                              double bleu[4], uint32_t* images) {
  if (!model || !vocab || !captions_path || !features_dir || !report_path)
    return null_arg("model/vocab/captions_path/features_dir/report_path");
  return guarded([&] {
    std::vector<std::string> warnings;
    const auto eval = capgen::evaluate_files(model->model, vocab->vocab, captions_path, features_dir, report_path,
                                             config_or_default(config), &warnings);
    log_all(warnings);
    if (bleu)
      for (int i = 0; i < 4; ++i) bleu[i] = eval.corpus[static_cast<std::size_t>(i)];
    if (images) *images = static_cast<uint32_t>(eval.results.size());
    return CAPGEN_OK;
  });
}

capgen_status capgen_selftest(capgen_suite_fn on_suite, void* user) {
  return guarded([&] {
    bool all = true;
    for (const auto& r : capgen::run_selftest()) {
      all = all && r.passed;
      if (on_suite) on_suite(r.name.c_str(), r.passed ? 1 : 0, r.detail.c_str(), user);
    }
    if (!all) g_last_error = "one or more self-test suites failed";
    return all ? CAPGEN_OK : CAPGEN_SELFTEST_FAILED;
  });
}

}  // extern "C"
