// capgen: build a vocabulary, train, evaluate, caption, self-test.
// Talks to the engine only through the C API.

#include <cstdio>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "capgen/capgen.h"

namespace {

int fail(capgen_status s) {
  std::fprintf(stderr, "capgen: %s\n", capgen_last_error());
  return static_cast<int>(s);
}

void print_warning(const char* message, void*) { std::fprintf(stderr, "warning: %s\n", message); }

struct ConfigDeleter {
  void operator()(capgen_config* c) const { capgen_config_free(c); }
};
struct VocabDeleter {
  void operator()(capgen_vocab* v) const { capgen_vocab_free(v); }
};
struct ModelDeleter {
  void operator()(capgen_model* m) const { capgen_model_free(m); }
};
using ConfigPtr = std::unique_ptr<capgen_config, ConfigDeleter>;
using VocabPtr = std::unique_ptr<capgen_vocab, VocabDeleter>;
using ModelPtr = std::unique_ptr<capgen_model, ModelDeleter>;

struct Args {
  std::string captions, features, feature, vocab, out, config, checkpoint, report;
  unsigned max_size = 13000;
  std::optional<unsigned long long> seed;
  std::optional<unsigned> max_epochs, patience;
};

int cmd_build_vocab(const Args& a) {
  capgen_vocab_stats stats{};
  if (auto s = capgen_build_vocab(a.captions.c_str(), a.out.c_str(), a.max_size, nullptr, &stats); s != CAPGEN_OK)
    return fail(s);
  std::printf("tokens: %u\ncoverage: %.2f%%\ncaptions: %u\n", stats.token_count, 100.0 * stats.coverage,
              stats.caption_count);
  return 0;
}

void print_epoch(const capgen_epoch_row* r, void*) {
  std::printf("epoch %3u  train_loss %.6f  val_loss %.6f  val_bleu4 %.4f\n", r->epoch, r->train_loss, r->val_loss,
              r->val_bleu4);
  std::fflush(stdout);
}

int cmd_train(const Args& a) {
  ConfigPtr cfg(capgen_config_new());
  if (!cfg) return 2;
  capgen_status s = CAPGEN_OK;
  if (!a.config.empty() && (s = capgen_config_load_file(cfg.get(), a.config.c_str())) != CAPGEN_OK) return fail(s);
  auto set = [&](const char* key, const std::string& value) {
    if (s == CAPGEN_OK) s = capgen_config_set(cfg.get(), key, value.c_str());
  };
  set("captions", a.captions);
  set("features", a.features);
  set("vocab", a.vocab);
  set("out", a.out);
  if (a.seed) set("seed", std::to_string(*a.seed));
  if (a.max_epochs) set("max_epochs", std::to_string(*a.max_epochs));
  if (a.patience) set("patience", std::to_string(*a.patience));
  if (s != CAPGEN_OK) return fail(s);

  capgen_train_summary summary{};
  if ((s = capgen_train(cfg.get(), print_epoch, nullptr, &summary)) != CAPGEN_OK) return fail(s);
  std::printf("stopped after %u epochs (%s); best epoch %u\n", summary.epochs_run,
              summary.early_stopped ? "early stop" : "max epochs", summary.best_epoch);
  return 0;
}

int load_pair(const Args& a, ModelPtr& model, VocabPtr& vocab) {
  capgen_model* m = nullptr;
  if (auto s = capgen_model_load(a.checkpoint.c_str(), &m); s != CAPGEN_OK) return fail(s);
  model.reset(m);
  capgen_vocab* v = nullptr;
  if (auto s = capgen_vocab_load(a.vocab.c_str(), &v); s != CAPGEN_OK) return fail(s);
  vocab.reset(v);
  return 0;
}

int cmd_evaluate(const Args& a) {
  ModelPtr model;
  VocabPtr vocab;
  if (int rc = load_pair(a, model, vocab)) return rc;
  double bleu[4] = {};
  uint32_t images = 0;
  if (auto s = capgen_evaluate(model.get(), vocab.get(), a.captions.c_str(), a.features.c_str(), a.report.c_str(),
                               nullptr, bleu, &images);
      s != CAPGEN_OK)
    return fail(s);
  std::printf("images: %u\n", images);
  for (int n = 0; n < 4; ++n) std::printf("BLEU-%d: %.6f\n", n + 1, bleu[n]);
  return 0;
}

int cmd_caption(const Args& a) {
  ModelPtr model;
  VocabPtr vocab;
  if (int rc = load_pair(a, model, vocab)) return rc;
  std::size_t needed = 0;
  if (auto s = capgen_caption(model.get(), vocab.get(), a.feature.c_str(), nullptr, 0, &needed); s != CAPGEN_OK)
    return fail(s);
  std::string text(needed, '\0');
  if (auto s = capgen_caption(model.get(), vocab.get(), a.feature.c_str(), text.data(), text.size(), nullptr);
      s != CAPGEN_OK)
    return fail(s);
  text.resize(needed - 1);
  std::printf("%s\n", text.c_str());
  return 0;
}

void print_suite(const char* suite, int passed, const char* detail, void*) {
  std::printf("%-10s %s  %s\n", suite, passed ? "PASS" : "FAIL", detail);
  std::fflush(stdout);
}

int cmd_selftest() {
  const auto s = capgen_selftest(print_suite, nullptr);
  if (s == CAPGEN_SELFTEST_FAILED) return 1;
  if (s != CAPGEN_OK) return fail(s);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"capgen: transformer image captioning over precomputed CNN feature grids"};
  app.require_subcommand(1);
  Args a;

  auto* bv = app.add_subcommand("build-vocab", "build a vocabulary file from a captions file");
  bv->add_option("--captions", a.captions, "captions file (pipe-delimited or TSV)")->required();
  bv->add_option("--out", a.out, "output vocabulary file")->required();
  bv->add_option("--max-size", a.max_size, "maximum vocabulary size, specials included")->capture_default_str();

  auto* tr = app.add_subcommand("train", "train a model, writing checkpoints and metrics");
  tr->add_option("--captions", a.captions)->required();
  tr->add_option("--features", a.features, "directory of .capf files")->required();
  tr->add_option("--vocab", a.vocab)->required();
  tr->add_option("--out", a.out, "output directory")->required();
  tr->add_option("--config", a.config, "key = value settings file; flags override it");
  tr->add_option("--seed", a.seed);
  tr->add_option("--max-epochs", a.max_epochs);
  tr->add_option("--patience", a.patience);

  auto* ev = app.add_subcommand("evaluate", "caption every image and score against references");
  ev->add_option("--checkpoint", a.checkpoint)->required();
  ev->add_option("--captions", a.captions)->required();
  ev->add_option("--features", a.features)->required();
  ev->add_option("--vocab", a.vocab)->required();
  ev->add_option("--report", a.report, "output CSV")->required();

  auto* ca = app.add_subcommand("caption", "caption a single feature file");
  ca->add_option("--checkpoint", a.checkpoint)->required();
  ca->add_option("--feature", a.feature, "CAPF1 file")->required();
  ca->add_option("--vocab", a.vocab)->required();

  auto* st = app.add_subcommand("selftest", "run gradient, causality and BLEU checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  capgen_set_log_handler(print_warning, nullptr);
  if (*bv) return cmd_build_vocab(a);
  if (*tr) return cmd_train(a);
  if (*ev) return cmd_evaluate(a);
  if (*ca) return cmd_caption(a);
  if (*st) return cmd_selftest();
  return 2;
}
