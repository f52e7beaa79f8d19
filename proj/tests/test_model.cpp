#include <doctest.h>

#include <cmath>
#include <random>

#include "sengen/gradcheck.hpp"
#include "sengen/model.hpp"

using namespace sengen;

namespace {

ModelConfig tiny_config(int K = 2, int V = 5) {
  ModelConfig mc;
  mc.n_topics = K;
  mc.vocab_size = V;
  mc.embed_dim = 3;
  mc.topic_embed_dim = 3;
  mc.hidden_dim = 3;
  mc.readout_dim = 2;
  mc.enc_hidden_dim = 3;
  mc.gamma_hidden_dim = 3;
  return mc;
}

// Straight-line reimplementation of the recurrence and readout, used as an
// independent oracle for sentence_log_likelihood.
double straightline_sentence_ll(ModelParams& p, const std::vector<int>& words, int topic) {
  const ModelConfig& c = p.cfg;
  const Tensor& Emb = p.tensor("Emb");
  const Tensor& EmbZ = p.tensor("EmbZ");
  const Tensor& W_h = p.tensor("W_h");
  const Tensor& W_e = p.tensor("W_e");
  const Tensor& W_c = p.tensor("W_c");
  const Tensor& b = p.tensor("b");
  const Tensor& Wr_h = p.tensor("Wr_h");
  const Tensor& Wr_e = p.tensor("Wr_e");
  const Tensor& Wr_c = p.tensor("Wr_c");
  const Tensor& br = p.tensor("br");
  const Tensor& Wv = p.tensor("Wv_" + std::to_string(topic));
  const Tensor& bv = p.tensor("bv");

  std::vector<double> h(c.hidden_dim, 0.0), ctx(c.topic_embed_dim);
  for (int j = 0; j < c.topic_embed_dim; ++j) ctx[j] = EmbZ.at(topic, j);
  int prev = -1;
  double total = 0;
  for (int w : words) {
    std::vector<double> e(c.embed_dim, 0.0);
    if (prev >= 0)
      for (int j = 0; j < c.embed_dim; ++j) e[j] = Emb.at(prev, j);
    std::vector<double> h_new(c.hidden_dim);
    for (int i = 0; i < c.hidden_dim; ++i) {
      double a = b[i];
      for (int j = 0; j < c.hidden_dim; ++j) a += W_h.at(i, j) * h[j];
      for (int j = 0; j < c.embed_dim; ++j) a += W_e.at(i, j) * e[j];
      for (int j = 0; j < c.topic_embed_dim; ++j) a += W_c.at(i, j) * ctx[j];
      h_new[i] = std::tanh(a);
    }
    std::vector<double> r(c.readout_dim);
    for (int i = 0; i < c.readout_dim; ++i) {
      double a = br[i];
      for (int j = 0; j < c.hidden_dim; ++j) a += Wr_h.at(i, j) * h_new[j];
      for (int j = 0; j < c.embed_dim; ++j) a += Wr_e.at(i, j) * e[j];
      for (int j = 0; j < c.topic_embed_dim; ++j) a += Wr_c.at(i, j) * ctx[j];
      r[i] = std::tanh(a);
    }
    std::vector<double> logits(c.vocab_size);
    for (int v = 0; v < c.vocab_size; ++v) {
      double a = bv[v];
      for (int j = 0; j < c.readout_dim; ++j) a += Wv.at(v, j) * r[j];
      logits[v] = a;
    }
    double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0;
    for (double l : logits) z += std::exp(l - mx);
    total += logits[w] - mx - std::log(z);
    h = h_new;
    prev = w;
  }
  return total;
}

}  // namespace

TEST_CASE("decoder_init zero state and topic context") {
  ModelParams params(tiny_config());
  params.init(3);
  Tape tape;
  ModelBinding mb = bind_model(tape, params);
  DecoderState s = decoder_init(tape, mb, params.cfg, 1);
  for (int i = 0; i < params.cfg.hidden_dim; ++i)
    CHECK(tape.value(s.h)[i] == doctest::Approx(0.0));
  for (int j = 0; j < params.cfg.topic_embed_dim; ++j)
    CHECK(tape.value(s.context)[j] == doctest::Approx(params.tensor("EmbZ").at(1, j)));
  CHECK(s.prev_word == -1);
  CHECK_THROWS_AS(decoder_init(tape, mb, params.cfg, 7), std::out_of_range);
}

TEST_CASE("all-zero parameters give a uniform word distribution") {
  ModelParams params(tiny_config());
  Tape tape;
  ModelBinding mb = bind_model(tape, params);
  VocabSupport full = VocabSupport::full_vocab(params.cfg.vocab_size);
  DecoderState s = decoder_init(tape, mb, params.cfg, 0);
  DecoderStep step = decoder_step(tape, mb, params.cfg, s, 0, full);
  for (int v = 0; v < params.cfg.vocab_size; ++v)
    CHECK(tape.value(step.log_probs)[v] ==
          doctest::Approx(std::log(1.0 / params.cfg.vocab_size)));
}

TEST_CASE("distinct per-topic softmax layers give distinct distributions") {
  ModelParams params(tiny_config());
  params.init(5);
  Tape tape;
  ModelBinding mb = bind_model(tape, params);
  VocabSupport full = VocabSupport::full_vocab(params.cfg.vocab_size);
  DecoderState s0 = decoder_init(tape, mb, params.cfg, 0);
  DecoderStep a = decoder_step(tape, mb, params.cfg, s0, 0, full);
  DecoderStep b = decoder_step(tape, mb, params.cfg, s0, 1, full);
  bool differs = false;
  for (int v = 0; v < params.cfg.vocab_size; ++v)
    if (std::fabs(tape.value(a.log_probs)[v] - tape.value(b.log_probs)[v]) > 1e-9)
      differs = true;
  CHECK(differs);
}

TEST_CASE("decoder distributions are proper over random supports") {
  std::mt19937_64 rng(17);
  ModelParams params(tiny_config(3, 8));
  params.init(9);
  for (int trial = 0; trial < 100; ++trial) {
    Tape tape;
    ModelBinding mb = bind_model(tape, params);
    std::vector<int> ids;
    for (int v = 0; v < 8; ++v)
      if (rng() % 2) ids.push_back(v);
    if (ids.empty()) ids.push_back(kEosId);
    VocabSupport sup = VocabSupport::subset(ids);
    DecoderState s = decoder_init(tape, mb, params.cfg, (int)(rng() % 3));
    DecoderStep step = decoder_step(tape, mb, params.cfg, s, (int)(rng() % 3), sup);
    double total = 0;
    for (int i = 0; i < sup.size(); ++i) total += std::exp(tape.value(step.log_probs)[i]);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("sentence_log_likelihood basics") {
  ModelParams params(tiny_config(2, 5));
  VocabSupport full = VocabSupport::full_vocab(5);
  SUBCASE("uniform decoder gives L * log(1/V)") {
    std::vector<int> words = {2, 3, 4, kEosId};
    double ll = sentence_log_likelihood_value(params, words, 0, full);
    CHECK(ll == doctest::Approx(4 * std::log(1.0 / 5)));
  }
  SUBCASE("one-word sentence") {
    params.init(11);
    double ll = sentence_log_likelihood_value(params, {kEosId}, 1, full);
    CHECK(ll <= 0.0);
  }
  SUBCASE("empty or unterminated sentences rejected") {
    Tape tape;
    ModelBinding mb = bind_model(tape, params);
    CHECK_THROWS_AS(sentence_log_likelihood(tape, mb, params.cfg, {}, 0, full),
                    std::invalid_argument);
    CHECK_THROWS_AS(sentence_log_likelihood(tape, mb, params.cfg, {2, 3}, 0, full),
                    std::invalid_argument);
  }
  SUBCASE("support excluding the target word is an error") {
    VocabSupport sup = VocabSupport::subset({kEosId, 2});
    Tape tape;
    ModelBinding mb = bind_model(tape, params);
    CHECK_THROWS_AS(sentence_log_likelihood(tape, mb, params.cfg, {3, kEosId}, 0, sup),
                    std::runtime_error);
  }
}

TEST_CASE("sentence_log_likelihood matches a straight-line oracle") {
  std::mt19937_64 rng(23);
  ModelParams params(tiny_config(2, 5));
  params.init(29);
  VocabSupport full = VocabSupport::full_vocab(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> words;
    int len = 1 + (int)(rng() % 5);
    for (int i = 0; i < len; ++i) words.push_back((int)(rng() % 5));
    words.push_back(kEosId);
    int topic = (int)(rng() % 2);
    double got = sentence_log_likelihood_value(params, words, topic, full);
    double want = straightline_sentence_ll(params, words, topic);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("restricting support to the full vocabulary reproduces the full value") {
  ModelParams params(tiny_config(2, 6));
  params.init(31);
  std::vector<int> words = {2, 5, kEosId};
  VocabSupport full = VocabSupport::full_vocab(6);
  VocabSupport as_subset = VocabSupport::subset({0, 1, 2, 3, 4, 5});
  double a = sentence_log_likelihood_value(params, words, 1, full);
  double b = sentence_log_likelihood_value(params, words, 1, as_subset);
  CHECK(a == doctest::Approx(b).epsilon(1e-15));
}

TEST_CASE("single decoder step gradient matches finite differences") {
  ModelParams params(tiny_config(2, 5));
  params.init(37, 0.5);
  VocabSupport full = VocabSupport::full_vocab(5);
  std::vector<int> words = {3, kEosId};
  auto eval = [&] { return sentence_log_likelihood_value(params, words, 1, full); };
  params.store.zero_grads();
  {
    Tape tape;
    ModelBinding mb = bind_model(tape, params);
    tape.backward(sentence_log_likelihood(tape, mb, params.cfg, words, 1, full));
  }
  GradCheckResult r = finite_difference_check({&params.store}, eval);
  INFO(r.worst_entry);
  CHECK(r.max_rel_err < 1e-4);
}

TEST_CASE("sample_document determinism and saturated mixture") {
  ModelParams params(tiny_config(2, 5));
  params.init(41);
  SUBCASE("fixed seed reproduces the document bit-for-bit") {
    std::mt19937_64 r1(99), r2(99);
    SampledDocument a = sample_document(params, 3, 10, r1);
    SampledDocument b = sample_document(params, 3, 10, r2);
    CHECK(a.doc.sentences == b.doc.sentences);
    CHECK(a.topics == b.topics);
    CHECK(a.theta == b.theta);
  }
  SUBCASE("saturated theta pins every sentence to topic 0") {
    std::mt19937_64 rng(7);
    SampledDocument d = sample_document_forced(params, {10.0, -10.0}, 1000, 3, rng);
    for (int z : d.topics) CHECK(z == 0);
  }
}

TEST_CASE("sampled topics match softmax(theta) within 3 standard errors") {
  ModelParams params(tiny_config(3, 5));
  params.init(43);
  std::vector<double> theta = {0.5, -0.3, 1.1};
  std::vector<double> want = softmax(theta);
  std::mt19937_64 rng(12345);
  const int n = 10000;
  std::vector<int> counts(3, 0);
  SampledDocument d = sample_document_forced(params, theta, n, 2, rng);
  for (int z : d.topics) ++counts[z];
  for (int k = 0; k < 3; ++k) {
    double se = std::sqrt(want[k] * (1 - want[k]) / n);
    CHECK(std::fabs((double)counts[k] / n - want[k]) < 3 * se);
  }
}
