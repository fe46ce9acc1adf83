// Acceptance run: one PASS/FAIL line per headline criterion. Exits non-zero
// when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "bleu_oracle.hpp"
#include "capgen/captioner.hpp"
#include "capgen/datapipe.hpp"
#include "capgen/errors.hpp"
#include "capgen/ops.hpp"
#include "capgen/pipeline.hpp"
#include "capgen/rng.hpp"
#include "capgen/specials.hpp"
#include "capgen/trainer.hpp"
#include "capgen/transformer.hpp"
#include "support.hpp"

using namespace capgen;
namespace t = capgen::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// ---------------------------------------------------------------- gradients

using T64 = nd::Tensor<double>;
using G64 = nd::Graph<double>;

// Central differences on every element of every input, against the tape.
struct GradReport {
  double worst = 0.0;
  std::size_t checks = 0;
  std::string worst_where;
};

void check_gradients(const std::string& label, std::vector<T64> inputs,
                     const std::function<T64(G64&, const std::vector<T64>&)>& loss_fn, GradReport& rep,
                     double eps = 1e-4) {
  for (auto& x : inputs) {
    x.set_requires_grad(true);
    x.zero_grad();
  }
  {
    G64 g;
    g.backward(loss_fn(g, inputs));
  }
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto data = inputs[k].data();
    const auto analytic = inputs[k].grad();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double keep = data[i];
      data[i] = keep + eps;
      G64 gp(false);
      const double up = loss_fn(gp, inputs).item();
      data[i] = keep - eps;
      G64 gm(false);
      const double down = loss_fn(gm, inputs).item();
      data[i] = keep;
      const double numeric = (up - down) / (2 * eps);
      const double a = analytic[i];
      const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      ++rep.checks;
      if (err > rep.worst) {
        rep.worst = err;
        rep.worst_where = fmt::format("{} input {} element {}", label, k, i);
      }
    }
  }
}

T64 gaussian(Rng& rng, nd::Shape shape, double scale = 1.0, double offset = 0.0) {
  T64 x(std::move(shape));
  for (auto& v : x.data()) v = offset + scale * rng.normal();
  return x;
}

// Weighted sum with fixed random weights turns any output into a scalar whose
// gradient reaches every element.
T64 project(G64& g, const T64& y, std::uint64_t seed) {
  Rng rng(seed);
  return nd::sum(g, nd::mul(g, y, gaussian(rng, y.shape())));
}

Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  Rng rng(21);
  GradReport rep;

  check_gradients("matmul", {gaussian(rng, {2, 3, 4}), gaussian(rng, {4, 5})},
                  [](G64& g, const auto& in) { return project(g, nd::matmul(g, in[0], in[1]), 1); }, rep);
  check_gradients("batched matmul", {gaussian(rng, {2, 3, 4}), gaussian(rng, {2, 4, 2})},
                  [](G64& g, const auto& in) { return project(g, nd::matmul(g, in[0], in[1]), 2); }, rep);
  check_gradients("transpose", {gaussian(rng, {2, 3, 4})},
                  [](G64& g, const auto& in) { return project(g, nd::transpose_last2(g, in[0]), 3); }, rep);
  check_gradients("permute", {gaussian(rng, {2, 3, 4})},
                  [](G64& g, const auto& in) { return project(g, nd::permute(g, in[0], {1, 2, 0}), 4); }, rep);
  check_gradients("reshape", {gaussian(rng, {2, 6})},
                  [](G64& g, const auto& in) { return project(g, nd::reshape(g, in[0], {3, 4}), 5); }, rep);
  check_gradients("add", {gaussian(rng, {3, 4}), gaussian(rng, {3, 4})},
                  [](G64& g, const auto& in) { return project(g, nd::add(g, in[0], in[1]), 6); }, rep);
  check_gradients("mul", {gaussian(rng, {3, 4}), gaussian(rng, {3, 4})},
                  [](G64& g, const auto& in) { return project(g, nd::mul(g, in[0], in[1]), 7); }, rep);
  check_gradients("add_broadcast", {gaussian(rng, {2, 3, 4}), gaussian(rng, {4})},
                  [](G64& g, const auto& in) { return project(g, nd::add_broadcast(g, in[0], in[1]), 8); }, rep);
  check_gradients("scale", {gaussian(rng, {3, 4})},
                  [](G64& g, const auto& in) { return project(g, nd::scale(g, in[0], 0.37), 9); }, rep);
  {
    // Keep every input at least 0.05 from the kink.
    auto x = gaussian(rng, {4, 5});
    for (auto& v : x.data()) v += v >= 0 ? 0.05 : -0.05;
    check_gradients("relu", {x}, [](G64& g, const auto& in) { return project(g, nd::relu(g, in[0]), 10); }, rep);
  }
  for (std::size_t axis = 0; axis < 3; ++axis)
    check_gradients("softmax", {gaussian(rng, {2, 3, 4})},
                    [axis](G64& g, const auto& in) { return project(g, nd::softmax(g, in[0], axis), 11 + axis); }, rep);
  {
    std::vector<std::uint8_t> m(4 * 4);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) m[i * 4 + j] = (j <= i || j == 3) ? 1 : 0;
    const nd::BoolTensor mask({4, 4}, m);
    check_gradients("masked_softmax", {gaussian(rng, {2, 4, 4})},
                    [mask](G64& g, const auto& in) { return project(g, nd::masked_softmax(g, in[0], mask), 14); },
                    rep);
  }
  check_gradients("layer_norm", {gaussian(rng, {3, 6}), gaussian(rng, {6}, 0.3, 1.0), gaussian(rng, {6})},
                  [](G64& g, const auto& in) { return project(g, nd::layer_norm(g, in[0], in[1], in[2], 1e-5), 15); },
                  rep);
  {
    const nd::IndexTensor ids({2, 3}, {0, 4, 2, 4, 1, 0});
    check_gradients("embedding", {gaussian(rng, {5, 3})},
                    [ids](G64& g, const auto& in) { return project(g, nd::embedding(g, in[0], ids), 16); }, rep);
  }
  {
    const nd::IndexTensor targets({2, 3}, {1, 0, 4, 2, 3, 3});
    const nd::BoolTensor mask({2, 3}, {1, 1, 0, 1, 1, 1});
    check_gradients("cross_entropy", {gaussian(rng, {2, 3, 5})},
                    [targets, mask](G64& g, const auto& in) { return nd::cross_entropy(g, in[0], targets, mask); },
                    rep);
  }
  check_gradients("sum", {gaussian(rng, {3, 4})}, [](G64& g, const auto& in) { return nd::sum(g, in[0]); }, rep);
  check_gradients("mean", {gaussian(rng, {3, 4})}, [](G64& g, const auto& in) { return nd::mean(g, in[0]); }, rep);

  // Full encoder-decoder loss with respect to every parameter.
  ModelConfig cfg;
  cfg.vocab_size = 8;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.seq_len = 5;
  cfg.feat_len = 4;
  cfg.feat_dim = 6;
  cfg.ffn_dim = 16;
  auto params = ModelParams<double>::init(cfg, 3);
  Rng jitter(22);
  for (auto& [name, p] : params.entries())
    for (auto& v : p.data()) v += 0.1 * jitter.normal();
  const auto feats = gaussian(jitter, {2, 4, 6});
  const nd::IndexTensor inputs({2, 4}, {kStartId, 4, 5, 6, kStartId, 7, 4, kEndId});
  const nd::IndexTensor targets({2, 4}, {4, 5, 6, kEndId, 7, 4, kEndId, kPadId});
  const nd::BoolTensor mask({2, 4}, {1, 1, 1, 1, 1, 1, 1, 0});
  std::vector<T64> leaves;
  std::vector<std::string> names;
  for (auto& [name, p] : params.entries()) {
    leaves.push_back(p);
    names.push_back(name);
  }
  auto full_loss = [&](G64& g, const std::vector<T64>& in) {
    ModelParams<double> view;
    for (std::size_t i = 0; i < in.size(); ++i) view.entries().emplace_back(names[i], in[i]);
    const auto memory = encoder_forward(g, feats, view, cfg);
    const auto logits = decoder_forward(g, inputs, memory, view, cfg);
    return nd::cross_entropy(g, logits, targets, mask);
  };
  GradReport model_rep;
  check_gradients("model", leaves, full_loss, model_rep);
  if (model_rep.worst > rep.worst) {
    rep.worst = model_rep.worst;
    rep.worst_where = model_rep.worst_where;
  }
  rep.checks += model_rep.checks;

  const double secs = seconds_since(t0);
  return {rep.worst < 1e-4 && secs < 30.0,
          fmt::format("max rel err {:.2e} over {} checks (worst: {}), {:.2f} s", rep.worst, rep.checks,
                      rep.worst_where, secs)};
}

// ---------------------------------------------------------------- causality

Outcome causality() {
  const auto t0 = Clock::now();
  ModelConfig cfg;
  cfg.vocab_size = 20;
  cfg.d_model = 32;
  cfg.n_heads = 4;
  cfg.seq_len = 12;
  cfg.feat_len = 5;
  cfg.feat_dim = 7;
  cfg.ffn_dim = 64;
  const auto params = ModelParams<float>::init(cfg, 4);
  Rng rng(23);
  std::size_t bad = 0;
  const int trials = 50;
  for (int trial = 0; trial < trials; ++trial) {
    nd::Graph<float> g(false);
    nd::Tensor<float> feats({1, cfg.feat_len, cfg.feat_dim});
    for (auto& v : feats.data()) v = static_cast<float>(rng.normal());
    const auto memory = encoder_forward(g, feats, params, cfg);
    const std::size_t len = 2 + rng.below(cfg.seq_len - 1);
    std::vector<std::int32_t> ids(len);
    ids[0] = kStartId;
    for (std::size_t i = 1; i < len; ++i) ids[i] = static_cast<std::int32_t>(kNumSpecials + rng.below(cfg.vocab_size - kNumSpecials));
    const std::size_t pos = 1 + rng.below(len - 1);
    auto other = ids;
    other[pos] = static_cast<std::int32_t>(kNumSpecials + (ids[pos] - kNumSpecials + 1 + rng.below(cfg.vocab_size - kNumSpecials - 1)) %
                                                              (cfg.vocab_size - kNumSpecials));
    const auto a = decoder_forward(g, nd::IndexTensor({1, len}, ids), memory, params, cfg);
    const auto b = decoder_forward(g, nd::IndexTensor({1, len}, other), memory, params, cfg);
    const std::size_t prefix = pos * cfg.vocab_size;
    const bool same_prefix = std::memcmp(a.data().data(), b.data().data(), prefix * sizeof(float)) == 0;
    const bool changed_after = std::memcmp(a.data().data() + prefix, b.data().data() + prefix,
                                           (len - pos) * cfg.vocab_size * sizeof(float)) != 0;
    if (!same_prefix || !changed_after) ++bad;
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < 10.0,
          fmt::format("{}/{} perturbation trials bit-identical before the edit, {:.2f} s", trials - bad, trials, secs)};
}

// ---------------------------------------------------------------- BLEU

Outcome bleu_oracle() {
  const auto t0 = Clock::now();
  const auto hand = modified_ngram_precision(split_tokens("the the the the the the the"),
                                             {split_tokens("the cat is on the mat")}, 1);
  const bool hand_ok = hand.clipped == 2 && hand.total == 7;

  Rng rng(24);
  const BleuConfig plain{4, Smoothing::kNone, 0.0};
  double worst = 0.0;
  const int cases = 200;
  for (int c = 0; c < cases; ++c) {
    const std::size_t vocab = 2 + rng.below(9);
    auto random_words = [&](std::size_t min_len) {
      Tokens w(min_len + rng.below(9 - min_len));
      for (auto& x : w) x = "w" + std::to_string(rng.below(vocab));
      return w;
    };
    std::vector<Segment> segs;
    std::vector<t::OracleSegment> oracle;
    for (std::size_t s = 0, ns = 1 + rng.below(3); s < ns; ++s) {
      Segment seg{random_words(1), {}};
      for (std::size_t r = 0, nr = 1 + rng.below(4); r < nr; ++r) seg.references.push_back(random_words(1));
      oracle.push_back({seg.hypothesis, seg.references});
      segs.push_back(std::move(seg));
    }
    for (std::size_t n = 1; n <= 4; ++n)
      worst = std::max(worst, std::abs(corpus_bleu(segs, plain, n) - t::oracle_bleu(oracle, n)));
  }
  const double secs = seconds_since(t0);
  return {hand_ok && worst <= 1e-9 && secs < 5.0,
          fmt::format("clipped unigram {}/{}; max |diff| {:.1e} over {} cases x 4 orders, {:.2f} s", hand.clipped,
                      hand.total, worst, cases, secs)};
}

// ---------------------------------------------------------------- overfit

Outcome overfit() {
  const auto t0 = Clock::now();
  t::TempDir dir;
  t::OverfitFixture fx(dir.path());
  const auto fd = t::load_fixture(fx);
  Model model{fd.model, ModelParams<float>::init(fd.model, 0)};
  auto state = AdamState::zeros_like(model.params.entries());
  TrainConfig tc;
  tc.learning_rate = 1e-3;
  tc.batch_size = 8;
  std::size_t reached = 0;
  double final_loss = 0.0;
  for (std::size_t epoch = 1; epoch <= 500; ++epoch) {
    final_loss = run_epoch(model, state, fd.data, tc, epoch).mean_loss;
    if (!reached && final_loss < 0.05) reached = epoch;
  }
  std::size_t exact = 0;
  for (std::size_t i = 0; i < fx.image_ids.size(); ++i) {
    const auto ids = greedy_decode(model, fd.data.features->at(fx.image_ids[i]).grid, fd.model.seq_len);
    if (decode(std::vector<std::int32_t>(ids.begin(), ids.end()), fd.vocab) == fx.texts[i]) ++exact;
  }
  const double bleu4 = evaluate_captions(model, fd.vocab, fd.data).corpus[3];
  const double secs = seconds_since(t0);
  return {reached > 0 && exact == fx.image_ids.size() && bleu4 >= 0.99 && secs < 600.0,
          fmt::format("loss < 0.05 at epoch {} (final {:.4f}); {}/{} captions exact; BLEU-4 {:.4f}; {:.1f} s",
                      reached, final_loss, exact, fx.image_ids.size(), bleu4, secs)};
}

// ---------------------------------------------------------------- early stopping

Outcome early_stopping() {
  std::size_t mismatches = 0, fired_while_improving = 0;
  Rng rng(25);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> h;
    const std::size_t len = 1 + rng.below(60);
    for (std::size_t i = 0; i < len; ++i) {
      h.push_back(static_cast<double>(rng.below(8)) / 8.0);
      std::size_t best = 0;
      for (std::size_t j = 0; j < h.size(); ++j)
        if (h[j] > h[best]) best = j;
      const bool expected = h.size() - 1 - best >= 10;
      const bool got = early_stop_check(h, 10);
      if (got != expected) ++mismatches;
      bool latest_improved = true;
      for (std::size_t j = 0; j + 1 < h.size(); ++j) latest_improved = latest_improved && h.back() > h[j];
      if (latest_improved && got) ++fired_while_improving;
    }
  }

  t::TempDir dir;
  t::OverfitFixture fx(dir.path());
  const auto fd = t::load_fixture(fx);
  TrainConfig defaults;
  // A frozen model keeps BLEU-4 flat, so the run must stop 10 epochs after epoch 1.
  Model frozen{fd.model, ModelParams<float>::init(fd.model, 0)};
  auto st = AdamState::zeros_like(frozen.params.entries());
  TrainConfig tc;
  tc.learning_rate = 0.0;
  tc.batch_size = 8;
  const auto stopped = fit(frozen, st, fd.vocab, fd.data, fd.data, tc);
  // With patience out of reach, the cap ends the run.
  Model moving{fd.model, ModelParams<float>::init(fd.model, 0)};
  auto st2 = AdamState::zeros_like(moving.params.entries());
  tc.learning_rate = 1e-3;
  tc.patience = 1000;
  const auto capped = fit(moving, st2, fd.vocab, fd.data, fd.data, tc);

  const bool ok = mismatches == 0 && fired_while_improving == 0 && defaults.patience == 10 &&
                  defaults.max_epochs == 50 && stopped.stop_reason == StopReason::kEarlyStop &&
                  stopped.rows.size() == 11 && capped.stop_reason == StopReason::kMaxEpochs &&
                  capped.rows.size() == 50;
  return {ok, fmt::format("{} history mismatches, {} fires while improving; flat run stopped after {} epochs; "
                          "capped run ran {} epochs",
                          mismatches, fired_while_improving, stopped.rows.size(), capped.rows.size())};
}

// ---------------------------------------------------------------- determinism

Outcome determinism() {
  t::TempDir dir;
  t::OverfitFixture fx(dir.path());
  build_vocab_file(fx.captions, fx.vocab, 64);
  t::write_text(dir / "run.cfg", t::OverfitFixture::config_text(5));
  auto run = [&](const std::string& out) {
    RunConfig rc;
    rc.load_file(dir / "run.cfg");
    rc.set("captions", fx.captions.string());
    rc.set("features", fx.features.string());
    rc.set("vocab", fx.vocab.string());
    rc.set("out", (dir / out).string());
    rc.set("seed", "7");
    train_from_config(rc);
  };
  run("a");
  run("b");
  std::size_t identical = 0;
  const char* files[] = {"metrics.csv", "best.ckpt", "last.ckpt"};
  for (const char* f : files) {
    const auto a = t::read_bytes(dir / "a" / f);
    if (!a.empty() && a == t::read_bytes(dir / "b" / f)) ++identical;
  }
  return {identical == 3, fmt::format("{}/3 artifacts byte-identical across two seeded runs", identical)};
}

// ---------------------------------------------------------------- data pipeline

Outcome data_pipeline() {
  std::vector<std::string> notes;
  bool ok = true;

  // Teacher forcing on every batch of several epochs.
  t::TempDir dir;
  t::OverfitFixture fx(dir.path());
  const auto fd = t::load_fixture(fx);
  std::size_t batches = 0, shift_bad = 0;
  for (std::size_t bs : {1u, 3u, 8u})
    for (std::uint64_t epoch = 0; epoch < 5; ++epoch)
      for (const auto& b : epoch_batches(fd.data, bs, 9, epoch)) {
        ++batches;
        const std::size_t tt = b.input_ids.shape[1];
        for (std::size_t r = 0; r < b.input_ids.shape[0]; ++r) {
          const auto& full = fd.data.records[b.record_indices[r]].token_ids;
          for (std::size_t i = 0; i < tt; ++i) {
            if (b.input_ids.at(r, i) != full[i] || b.target_ids.at(r, i) != full[i + 1]) ++shift_bad;
            if (b.pad_mask.at(r * tt + i) != (full[i + 1] != kPadId)) ++shift_bad;
          }
        }
      }
  ok = ok && shift_bad == 0;
  notes.push_back(fmt::format("shift holds on {} batches", batches));

  // Split counts on full-size synthetic id lists.
  bool counts_ok = true;
  for (std::size_t n : {26144u, 31783u}) {
    std::vector<CaptionRecord> recs;
    for (std::size_t i = 0; i < n; ++i) recs.push_back(CaptionRecord{"id" + std::to_string(i), "", "x y", {}});
    const auto s = split_dataset(recs, 0, default_split_counts(n));
    std::set<std::string> tr, va, te;
    for (const auto& r : s.train) tr.insert(r.image_id);
    for (const auto& r : s.val) va.insert(r.image_id);
    for (const auto& r : s.test) te.insert(r.image_id);
    counts_ok = counts_ok && tr.size() == 20915 && va.size() == 5124 && te.size() == 105;
  }
  ok = ok && counts_ok;
  notes.push_back(counts_ok ? "splits 20915/5124/105" : "split counts wrong");

  // CAPF1 round trip.
  Rng rng(26);
  const auto grid = t::random_grid(rng, 100, 1280);
  write_capf(dir / "grid.capf", grid);
  const auto back = read_capf(dir / "grid.capf");
  const bool capf_ok = back.shape() == grid.shape() &&
                       std::memcmp(back.data().data(), grid.data().data(), grid.size() * sizeof(float)) == 0;
  ok = ok && capf_ok;
  notes.push_back(capf_ok ? "CAPF1 100x1280 bit-exact" : "CAPF1 mismatch");

  // Prefetch against the synchronous reference.
  std::size_t compared = 0, differ = 0;
  for (std::size_t cap : {1u, 2u, 4u})
    for (std::uint64_t epoch = 0; epoch < 5; ++epoch) {
      const auto ref = epoch_batches(fd.data, 3, 2, epoch);
      BatchStream stream(fd.data, 3, 2, epoch, cap);
      std::size_t i = 0;
      while (auto b = stream.next()) {
        const bool same = i < ref.size() && b->record_indices == ref[i].record_indices &&
                          b->input_ids.data == ref[i].input_ids.data &&
                          b->target_ids.data == ref[i].target_ids.data && b->pad_mask.data == ref[i].pad_mask.data &&
                          std::memcmp(b->features.data().data(), ref[i].features.data().data(),
                                      ref[i].features.size() * sizeof(float)) == 0;
        differ += same ? 0 : 1;
        ++i;
        ++compared;
      }
      differ += i == ref.size() ? 0 : 1;
    }
  ok = ok && differ == 0;
  notes.push_back(fmt::format("prefetch equals sync on {} batches", compared - differ));

  std::string detail;
  for (const auto& n : notes) detail += (detail.empty() ? "" : "; ") + n;
  return {ok, detail};
}

// ---------------------------------------------------------------- serialization

Outcome serialization() {
  t::TempDir dir;
  t::OverfitFixture fx(dir.path());
  const auto fd = t::load_fixture(fx);
  Model model{fd.model, ModelParams<float>::init(fd.model, 9)};
  auto st = AdamState::zeros_like(model.params.entries());
  TrainConfig tc;
  tc.learning_rate = 1e-3;
  tc.batch_size = 4;
  for (std::uint64_t e = 1; e <= 3; ++e) run_epoch(model, st, fd.data, tc, e);
  save_checkpoint(model.params, st, model.config, dir / "mid.ckpt");

  auto ck = load_checkpoint(dir / "mid.ckpt", model.config);
  bool exact = ck.adam.t == st.t && ck.params.entries().size() == model.params.entries().size();
  auto same = [](const nd::Tensor<float>& a, const nd::Tensor<float>& b) {
    return a.shape() == b.shape() && std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(float)) == 0;
  };
  for (std::size_t i = 0; exact && i < st.m.size(); ++i)
    exact = same(ck.params.entries()[i].second, model.params.entries()[i].second) && same(ck.adam.m[i], st.m[i]) &&
            same(ck.adam.v[i], st.v[i]);
  save_checkpoint(ck.params, ck.adam, ck.config, dir / "again.ckpt");
  exact = exact && t::read_bytes(dir / "mid.ckpt") == t::read_bytes(dir / "again.ckpt");

  // Next step of the uninterrupted run against the resumed one.
  const auto batch = epoch_batches(fd.data, tc.batch_size, tc.seed, 4).front();
  const double uninterrupted = train_step(model, st, batch, tc);
  const double after_u = train_step(model, st, batch, tc);
  Model resumed{ck.config, ck.params};
  const double resumed_loss = train_step(resumed, ck.adam, batch, tc);
  const double after_r = train_step(resumed, ck.adam, batch, tc);
  const double diff = std::max(std::abs(uninterrupted - resumed_loss), std::abs(after_u - after_r));
  return {exact && diff <= 1e-6,
          fmt::format("round trip {}; resumed next-step loss diff {:.1e}", exact ? "bit-exact" : "NOT exact", diff)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"gradient-correctness", gradient_correctness},
      {"causality", causality},
      {"bleu-oracle", bleu_oracle},
      {"overfit-fixture", overfit},
      {"early-stopping", early_stopping},
      {"determinism", determinism},
      {"data-pipeline", data_pipeline},
      {"serialization", serialization},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s  %-21s %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failures, std::size(criteria));
  return failures == 0 ? 0 : 1;
}
