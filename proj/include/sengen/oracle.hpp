#pragma once

#include <iosfwd>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sengen/model.hpp"

namespace sengen {

struct SyntheticSpec {
  int n_topics = 2;
  int block_size = 20;            // designated tokens per topic, disjoint blocks
  double concentration = 8.0;     // scales the theta draws
  int n_train_docs = 500;
  int n_valid_docs = 50;
  int n_test_docs = 50;
  int sentences_per_doc = 8;
  int words_per_sentence = 6;
  unsigned long long seed = 1;

  void validate() const;
  int vocab_size() const { return 2 + n_topics * block_size; }
};

SyntheticSpec parse_synthetic_spec(std::istream& in);
SyntheticSpec load_synthetic_spec(const std::string& path);

struct SentenceLabel {
  std::string doc_id;
  int sentence_index = 0;
  int topic = 0;
};

struct SyntheticCorpus {
  Vocabulary vocabulary;
  Corpus train, valid, test;
  std::vector<SentenceLabel> train_labels, valid_labels, test_labels;

  // the corpora point at this object's vocabulary; moves must rebind
  SyntheticCorpus() = default;
  SyntheticCorpus(SyntheticCorpus&& o) noexcept { *this = std::move(o); }
  SyntheticCorpus& operator=(SyntheticCorpus&& o) noexcept {
    vocabulary = std::move(o.vocabulary);
    train = std::move(o.train);
    valid = std::move(o.valid);
    test = std::move(o.test);
    train_labels = std::move(o.train_labels);
    valid_labels = std::move(o.valid_labels);
    test_labels = std::move(o.test_labels);
    train.vocabulary = &vocabulary;
    valid.vocabulary = &vocabulary;
    test.vocabulary = &vocabulary;
    return *this;
  }
};

// Hand-built generative parameters whose topic-k softmax concentrates on
// block k, sampled through the model's own ancestral sampler.
ModelParams make_synthetic_params(const SyntheticSpec& spec);
SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec);

void write_labels(std::ostream& out, const std::vector<SentenceLabel>& labels);
std::vector<SentenceLabel> read_labels(std::istream& in);

struct LogLikelihoodEstimate {
  double estimate = 0;        // log-mean-exp over theta draws
  double standard_error = 0;  // delta-method
};

// Monte Carlo over theta ~ N(0, I), exact enumeration over sentence topics.
// K <= 16 enforced.
LogLikelihoodEstimate oracle_log_likelihood(ModelParams& params, const Document& doc,
                                            int n_theta_samples, std::mt19937_64& rng);

// Best accuracy over all relabelings of the predicted topics; K <= 8.
double topic_recovery_score(const std::vector<int>& predicted, const std::vector<int>& truth,
                            int n_topics);

}  // namespace sengen
