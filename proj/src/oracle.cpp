#include "sengen/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace sengen {

void SyntheticSpec::validate() const {
  if (n_topics < 1 || block_size < 1 || n_train_docs < 1 || n_valid_docs < 1 ||
      n_test_docs < 1 || sentences_per_doc < 1 || words_per_sentence < 1)
    throw std::invalid_argument("synthetic spec: sizes must be positive");
  if (!(concentration > 0))
    throw std::invalid_argument("synthetic spec: concentration must be positive");
}

SyntheticSpec parse_synthetic_spec(std::istream& in) {
  SyntheticSpec s;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("spec line " + std::to_string(lineno) + ": expected key=value");
    std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    auto strip = [](std::string x) {
      size_t a = x.find_first_not_of(" \t\r");
      size_t b = x.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : x.substr(a, b - a + 1);
    };
    key = strip(key);
    val = strip(val);
    if (key == "n_topics") s.n_topics = std::stoi(val);
    else if (key == "block_size") s.block_size = std::stoi(val);
    else if (key == "concentration") s.concentration = std::stod(val);
    else if (key == "n_train_docs") s.n_train_docs = std::stoi(val);
    else if (key == "n_valid_docs") s.n_valid_docs = std::stoi(val);
    else if (key == "n_test_docs") s.n_test_docs = std::stoi(val);
    else if (key == "sentences_per_doc") s.sentences_per_doc = std::stoi(val);
    else if (key == "words_per_sentence") s.words_per_sentence = std::stoi(val);
    else if (key == "seed") s.seed = std::stoull(val);
    else throw std::invalid_argument("spec: unknown key '" + key + "'");
  }
  s.validate();
  return s;
}

SyntheticSpec load_synthetic_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read synthetic spec: " + path);
  return parse_synthetic_spec(in);
}

ModelParams make_synthetic_params(const SyntheticSpec& spec) {
  spec.validate();
  ModelConfig mc;
  mc.n_topics = spec.n_topics;
  mc.vocab_size = spec.vocab_size();
  mc.embed_dim = 8;
  mc.topic_embed_dim = 8;
  mc.hidden_dim = 8;
  mc.readout_dim = 4;
  mc.enc_hidden_dim = 8;
  mc.gamma_hidden_dim = 8;
  ModelParams params(mc);  // all tensors start at zero

  // With zero recurrent weights the readout is the constant tanh(br), so
  // per-topic logits are fully controlled through Wv_k.
  const double r0 = std::tanh(0.5);
  params.tensor("br").fill(0.5);

  const double block_logit = 8.0;
  const double off_logit = -20.0;
  // P(eos) per step targets 1/(words_per_sentence + 1)
  const double p_eos = 1.0 / (spec.words_per_sentence + 1);
  const double eos_logit =
      block_logit + std::log(spec.block_size * p_eos / (1.0 - p_eos));

  auto set_row = [&](Tensor& W, int row, double logit) {
    double w = logit / (mc.readout_dim * r0);
    for (int c = 0; c < mc.readout_dim; ++c) W.at(row, c) = w;
  };
  for (int k = 0; k < spec.n_topics; ++k) {
    Tensor& W = params.topic_softmax(k);
    set_row(W, kUnkId, off_logit);
    set_row(W, kEosId, eos_logit);
    for (int j = 0; j < spec.n_topics * spec.block_size; ++j) {
      int token = 2 + j;
      bool in_block = j / spec.block_size == k;
      set_row(W, token, in_block ? block_logit : off_logit);
    }
  }
  return params;
}

namespace {

void generate_split(ModelParams& params, const SyntheticSpec& spec, int n_docs,
                    const std::string& prefix, std::mt19937_64& rng, Corpus& out,
                    std::vector<SentenceLabel>& labels) {
  std::normal_distribution<double> n01(0.0, 1.0);
  int max_len = 4 * spec.words_per_sentence;
  for (int d = 0; d < n_docs; ++d) {
    std::vector<double> theta(spec.n_topics);
    for (double& t : theta) t = spec.concentration * n01(rng);
    SampledDocument sd =
        sample_document_forced(params, theta, spec.sentences_per_doc, max_len, rng);
    sd.doc.id = prefix + std::to_string(d);
    for (int s = 0; s < (int)sd.topics.size(); ++s)
      labels.push_back({sd.doc.id, s, sd.topics[s]});
    out.documents.push_back(std::move(sd.doc));
  }
}

}  // namespace

SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec) {
  spec.validate();
  ModelParams params = make_synthetic_params(spec);
  SyntheticCorpus sc;
  std::mt19937_64 rng(spec.seed);
  sc.train.split = Split::train;
  sc.valid.split = Split::valid;
  sc.test.split = Split::test;
  generate_split(params, spec, spec.n_train_docs, "train", rng, sc.train, sc.train_labels);
  generate_split(params, spec, spec.n_valid_docs, "valid", rng, sc.valid, sc.valid_labels);
  generate_split(params, spec, spec.n_test_docs, "test", rng, sc.test, sc.test_labels);

  // Vocabulary counts reflect the generated training split.
  Vocabulary& v = sc.vocabulary;
  v.tokens.push_back(kUnkTok);
  v.tokens.push_back(kEosTok);
  for (int k = 0; k < spec.n_topics; ++k)
    for (int j = 0; j < spec.block_size; ++j)
      v.tokens.push_back("w" + std::to_string(k) + "_" + std::to_string(j));
  v.counts.assign(v.tokens.size(), 0);
  for (const auto& d : sc.train.documents)
    for (const auto& s : d.sentences)
      for (int w : s) ++v.counts[w];
  for (int i = 0; i < v.size(); ++i) v.ids[v.tokens[i]] = i;
  long long total = std::accumulate(v.counts.begin(), v.counts.end(), 0LL);
  v.unigram.resize(v.size());
  for (int i = 0; i < v.size(); ++i)
    v.unigram[i] = total ? (double)v.counts[i] / total : 0.0;

  sc.train.vocabulary = &sc.vocabulary;
  sc.valid.vocabulary = &sc.vocabulary;
  sc.test.vocabulary = &sc.vocabulary;
  return sc;
}

void write_labels(std::ostream& out, const std::vector<SentenceLabel>& labels) {
  for (const auto& l : labels)
    out << l.doc_id << "\t" << l.sentence_index << "\t" << l.topic << "\n";
}

std::vector<SentenceLabel> read_labels(std::istream& in) {
  std::vector<SentenceLabel> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    SentenceLabel l;
    std::string idx, topic;
    if (!std::getline(ls, l.doc_id, '\t') || !std::getline(ls, idx, '\t') ||
        !std::getline(ls, topic))
      throw std::runtime_error("labels: malformed line: " + line);
    l.sentence_index = std::stoi(idx);
    l.topic = std::stoi(topic);
    labels.push_back(std::move(l));
  }
  return labels;
}

LogLikelihoodEstimate oracle_log_likelihood(ModelParams& params, const Document& doc,
                                            int n_theta_samples, std::mt19937_64& rng) {
  int K = params.cfg.n_topics;
  if (K > 16) throw std::invalid_argument("oracle_log_likelihood: K > 16 not supported");
  if (n_theta_samples < 2)
    throw std::invalid_argument("oracle_log_likelihood: need at least 2 samples");

  VocabSupport full = VocabSupport::full_vocab(params.cfg.vocab_size);
  std::vector<std::vector<double>> ll(doc.sentences.size(), std::vector<double>(K));
  for (size_t s = 0; s < doc.sentences.size(); ++s)
    for (int k = 0; k < K; ++k)
      ll[s][k] = sentence_log_likelihood_value(params, doc.sentences[s], k, full);

  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<double> log_weights(n_theta_samples);
  for (int t = 0; t < n_theta_samples; ++t) {
    std::vector<double> theta(K);
    for (double& x : theta) x = n01(rng);
    std::vector<double> mix = softmax(theta);
    double acc = 0;
    for (size_t s = 0; s < doc.sentences.size(); ++s) {
      double mx = -1e300;
      for (int k = 0; k < K; ++k) mx = std::max(mx, std::log(mix[k]) + ll[s][k]);
      double z = 0;
      for (int k = 0; k < K; ++k) z += std::exp(std::log(mix[k]) + ll[s][k] - mx);
      acc += mx + std::log(z);
    }
    log_weights[t] = acc;
  }

  double m = *std::max_element(log_weights.begin(), log_weights.end());
  double mean = 0;
  for (double lw : log_weights) mean += std::exp(lw - m);
  mean /= n_theta_samples;
  double var = 0;
  for (double lw : log_weights) {
    double d = std::exp(lw - m) - mean;
    var += d * d;
  }
  var /= (n_theta_samples - 1);

  LogLikelihoodEstimate est;
  est.estimate = m + std::log(mean);
  est.standard_error = std::sqrt(var / n_theta_samples) / mean;  // delta method
  return est;
}

double topic_recovery_score(const std::vector<int>& predicted, const std::vector<int>& truth,
                            int n_topics) {
  if (predicted.size() != truth.size())
    throw std::invalid_argument("topic_recovery_score: length mismatch");
  if (n_topics > 8)
    throw std::invalid_argument("topic_recovery_score: K > 8 not supported");
  std::vector<int> perm(n_topics);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0;
  do {
    int hits = 0;
    for (size_t i = 0; i < predicted.size(); ++i)
      if (perm[predicted[i]] == truth[i]) ++hits;
    best = std::max(best, predicted.empty() ? 0.0 : (double)hits / predicted.size());
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace sengen
