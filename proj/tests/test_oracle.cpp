#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "sengen/oracle.hpp"

using namespace sengen;

namespace {

ModelConfig tiny_config(int K, int V) {
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

SyntheticSpec small_spec() {
  SyntheticSpec s;
  s.n_topics = 2;
  s.block_size = 4;
  s.n_train_docs = 40;
  s.n_valid_docs = 5;
  s.n_test_docs = 5;
  s.sentences_per_doc = 4;
  s.words_per_sentence = 5;
  s.seed = 3;
  return s;
}

}  // namespace

TEST_CASE("parse_synthetic_spec defaults, overrides, and rejection") {
  {
    std::stringstream in("");
    SyntheticSpec s = parse_synthetic_spec(in);
    CHECK(s.n_topics == 2);
    CHECK(s.block_size == 20);
    CHECK(s.concentration == doctest::Approx(8.0));
    CHECK(s.vocab_size() == 42);
  }
  {
    std::stringstream in("n_topics=3\nblock_size = 5 # five\nseed=11\n");
    SyntheticSpec s = parse_synthetic_spec(in);
    CHECK(s.n_topics == 3);
    CHECK(s.block_size == 5);
    CHECK(s.seed == 11);
    CHECK(s.vocab_size() == 17);
  }
  {
    std::stringstream in("mystery = 1\n");
    CHECK_THROWS_AS(parse_synthetic_spec(in), std::invalid_argument);
  }
  {
    std::stringstream in("n_topics = 0\n");
    CHECK_THROWS_AS(parse_synthetic_spec(in), std::invalid_argument);
  }
}

TEST_CASE("synthetic parameters concentrate each topic on its own block") {
  SyntheticSpec spec = small_spec();
  ModelParams params = make_synthetic_params(spec);
  VocabSupport full = VocabSupport::full_vocab(spec.vocab_size());
  double p_eos_target = 1.0 / (spec.words_per_sentence + 1);

  for (int k = 0; k < spec.n_topics; ++k) {
    Tape tape;
    ModelBinding mb = bind_model(tape, params);
    DecoderState init = decoder_init(tape, mb, params.cfg, k);
    DecoderStep step = decoder_step(tape, mb, params.cfg, init, k, full);
    // copy: the second decoder_step below grows the tape
    Tensor lp = tape.value(step.log_probs);

    double p_eos = std::exp(lp[kEosId]);
    CHECK(p_eos == doctest::Approx(p_eos_target).epsilon(1e-6));
    double in_block = 0, off_block = std::exp(lp[kUnkId]);
    for (int j = 0; j < spec.n_topics * spec.block_size; ++j) {
      double p = std::exp(lp[2 + j]);
      if (j / spec.block_size == k)
        in_block += p;
      else
        off_block += p;
    }
    CHECK(in_block == doctest::Approx(1.0 - p_eos_target).epsilon(1e-6));
    CHECK(off_block < 1e-9);

    // zero recurrent weights: the distribution is the same at every position
    DecoderState s2 = step.state;
    s2.prev_word = 2;
    DecoderStep step2 = decoder_step(tape, mb, params.cfg, s2, k, full);
    for (int v = 0; v < spec.vocab_size(); ++v)
      CHECK(tape.value(step2.log_probs)[v] == doctest::Approx(lp[v]).epsilon(1e-9));
  }
}

TEST_CASE("synthetic corpus determinism and structure") {
  SyntheticSpec spec = small_spec();
  SyntheticCorpus a = make_synthetic_corpus(spec);
  SyntheticCorpus b = make_synthetic_corpus(spec);

  REQUIRE((int)a.train.documents.size() == spec.n_train_docs);
  REQUIRE((int)a.valid.documents.size() == spec.n_valid_docs);
  REQUIRE((int)a.test.documents.size() == spec.n_test_docs);
  CHECK(a.vocabulary.size() == spec.vocab_size());

  for (size_t d = 0; d < a.train.documents.size(); ++d)
    CHECK(a.train.documents[d].sentences == b.train.documents[d].sentences);
  REQUIRE(a.train_labels.size() == b.train_labels.size());
  for (size_t i = 0; i < a.train_labels.size(); ++i)
    CHECK(a.train_labels[i].topic == b.train_labels[i].topic);

  spec.seed = 4;
  SyntheticCorpus c = make_synthetic_corpus(spec);
  bool differs = false;
  for (size_t d = 0; d < a.train.documents.size() && !differs; ++d)
    differs = a.train.documents[d].sentences != c.train.documents[d].sentences;
  CHECK(differs);
}

TEST_CASE("synthetic labels match their documents and block membership") {
  SyntheticSpec spec = small_spec();
  SyntheticCorpus sc = make_synthetic_corpus(spec);

  size_t li = 0;
  for (const auto& doc : sc.train.documents) {
    REQUIRE(doc.sentences.size() == (size_t)spec.sentences_per_doc);
    for (int s = 0; s < (int)doc.sentences.size(); ++s, ++li) {
      REQUIRE(li < sc.train_labels.size());
      const SentenceLabel& l = sc.train_labels[li];
      CHECK(l.doc_id == doc.id);
      CHECK(l.sentence_index == s);
      // every content word must come from the labeled topic's block
      for (int w : doc.sentences[s]) {
        if (w == kEosId) continue;
        CHECK(w != kUnkId);
        int block = (w - 2) / spec.block_size;
        CHECK(block == l.topic);
      }
      CHECK(doc.sentences[s].back() == kEosId);
    }
  }
  CHECK(li == sc.train_labels.size());
}

TEST_CASE("synthetic vocabulary counts equal a brute-force recount of the training split") {
  SyntheticSpec spec = small_spec();
  SyntheticCorpus sc = make_synthetic_corpus(spec);
  std::vector<long long> counts(sc.vocabulary.size(), 0);
  long long total = 0;
  for (const auto& d : sc.train.documents)
    for (const auto& s : d.sentences)
      for (int w : s) {
        ++counts[w];
        ++total;
      }
  CHECK(sc.vocabulary.counts == counts);
  for (int v = 0; v < sc.vocabulary.size(); ++v)
    CHECK(sc.vocabulary.unigram[v] == doctest::Approx((double)counts[v] / total));
}

TEST_CASE("aggregate topic usage is balanced across topics") {
  SyntheticSpec spec = small_spec();
  spec.n_train_docs = 300;
  SyntheticCorpus sc = make_synthetic_corpus(spec);
  std::vector<int> hits(spec.n_topics, 0);
  for (const auto& l : sc.train_labels) ++hits[l.topic];
  int n = (int)sc.train_labels.size();
  for (int k = 0; k < spec.n_topics; ++k) {
    double share = (double)hits[k] / n;
    INFO("topic ", k, " share ", share);
    CHECK(std::fabs(share - 1.0 / spec.n_topics) < 0.1);
  }
}

TEST_CASE("labels round trip through the text format") {
  std::vector<SentenceLabel> labels = {{"train0", 0, 1}, {"train0", 1, 0}, {"test3", 7, 2}};
  std::stringstream ss;
  write_labels(ss, labels);
  auto back = read_labels(ss);
  REQUIRE(back.size() == labels.size());
  for (size_t i = 0; i < labels.size(); ++i) {
    CHECK(back[i].doc_id == labels[i].doc_id);
    CHECK(back[i].sentence_index == labels[i].sentence_index);
    CHECK(back[i].topic == labels[i].topic);
  }
  std::stringstream bad("only_one_field\n");
  CHECK_THROWS(read_labels(bad));
}

TEST_CASE("oracle_log_likelihood argument validation") {
  ModelParams big(tiny_config(17, 5));
  Document doc;
  doc.sentences = {{2, kEosId}};
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(oracle_log_likelihood(big, doc, 10, rng), std::invalid_argument);
  ModelParams ok(tiny_config(2, 5));
  CHECK_THROWS_AS(oracle_log_likelihood(ok, doc, 1, rng), std::invalid_argument);
}

TEST_CASE("oracle_log_likelihood collapses exactly for K=1") {
  ModelParams params(tiny_config(1, 5));
  params.init(7);
  Document doc;
  doc.sentences = {{2, 3, kEosId}, {4, kEosId}};
  VocabSupport full = VocabSupport::full_vocab(5);
  double exact = sentence_log_likelihood_value(params, doc.sentences[0], 0, full) +
                 sentence_log_likelihood_value(params, doc.sentences[1], 0, full);
  std::mt19937_64 rng(9);
  LogLikelihoodEstimate est = oracle_log_likelihood(params, doc, 50, rng);
  CHECK(est.estimate == doctest::Approx(exact).epsilon(1e-12));
  CHECK(est.standard_error == doctest::Approx(0.0));
}

TEST_CASE("oracle_log_likelihood is exact for a uniform decoder") {
  // all-zero parameters: every topic gives the same sentence likelihood, so
  // the mixture integrates out exactly regardless of theta
  ModelParams params(tiny_config(3, 6));
  Document doc;
  doc.sentences = {{2, 4, kEosId}, {5, kEosId}};
  std::mt19937_64 rng(13);
  LogLikelihoodEstimate est = oracle_log_likelihood(params, doc, 100, rng);
  CHECK(est.estimate == doctest::Approx(5 * std::log(1.0 / 6)).epsilon(1e-10));
  CHECK(est.standard_error < 1e-12);
}

TEST_CASE("oracle_log_likelihood seed self-consistency and cross-seed agreement") {
  ModelParams params(tiny_config(2, 6));
  params.init(17);
  Document doc;
  doc.sentences = {{2, 3, kEosId}, {4, 5, kEosId}};
  std::mt19937_64 r1(21), r2(21), r3(22);
  LogLikelihoodEstimate a = oracle_log_likelihood(params, doc, 20000, r1);
  LogLikelihoodEstimate b = oracle_log_likelihood(params, doc, 20000, r2);
  CHECK(a.estimate == b.estimate);
  CHECK(a.standard_error == b.standard_error);
  LogLikelihoodEstimate c = oracle_log_likelihood(params, doc, 20000, r3);
  double tol = 3 * std::sqrt(a.standard_error * a.standard_error +
                             c.standard_error * c.standard_error);
  CHECK(std::fabs(a.estimate - c.estimate) <= tol);
}

TEST_CASE("topic_recovery_score") {
  CHECK(topic_recovery_score({0, 1, 0, 1}, {0, 1, 0, 1}, 2) == doctest::Approx(1.0));
  // relabeling invariance: a global swap still scores 1
  CHECK(topic_recovery_score({1, 0, 1, 0}, {0, 1, 0, 1}, 2) == doctest::Approx(1.0));
  CHECK(topic_recovery_score({0, 0, 1, 1}, {0, 1, 0, 1}, 2) == doctest::Approx(0.5));
  CHECK(topic_recovery_score({2, 0, 1}, {0, 1, 2}, 3) == doctest::Approx(1.0));
  // the best permutation can never do worse than chance on balanced labels
  CHECK(topic_recovery_score({0, 0, 0, 0}, {0, 1, 0, 1}, 2) == doctest::Approx(0.5));
  CHECK_THROWS_AS(topic_recovery_score({0}, {0, 1}, 2), std::invalid_argument);
  CHECK_THROWS_AS(topic_recovery_score({0}, {0}, 9), std::invalid_argument);
}
