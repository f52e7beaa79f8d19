#include "sengen/objective.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace sengen {

Var kl_gaussian(Tape& tape, Var mu, Var sigma, Var log_sigma) {
  // 1 + 2 log sigma - mu^2 - sigma^2, summed, times -1/2
  Var inner = tape.sub(tape.scale_shift(log_sigma, 2.0, 1.0),
                       tape.add(tape.hadamard(mu, mu), tape.hadamard(sigma, sigma)));
  return tape.scale(tape.sum(inner), -0.5);
}

double kl_gaussian(const std::vector<double>& mu, const std::vector<double>& sigma) {
  if (mu.size() != sigma.size()) throw std::invalid_argument("kl_gaussian: size mismatch");
  double acc = 0;
  for (size_t k = 0; k < mu.size(); ++k) {
    if (!(sigma[k] > 0)) throw std::invalid_argument("kl_gaussian: sigma must be positive");
    acc += 1.0 + 2.0 * std::log(sigma[k]) - mu[k] * mu[k] - sigma[k] * sigma[k];
  }
  return -0.5 * acc;
}

Var expected_log_prior(Tape& tape, Var q, Var theta_hat) {
  return tape.dot(q, tape.log_softmax(theta_hat));
}

double expected_log_prior(const std::vector<double>& q, const std::vector<double>& theta_hat) {
  Tape tape;
  Var qv = tape.input(Tensor({(int)q.size()}, q));
  Var th = tape.input(Tensor({(int)theta_hat.size()}, theta_hat));
  return tape.value(expected_log_prior(tape, qv, th))[0];
}

Var entropy(Tape& tape, Var q, Var log_q) {
  return tape.neg(tape.dot(q, log_q));
}

double entropy(const std::vector<double>& q) {
  double acc = 0;
  for (double p : q)
    if (p > 0) acc -= p * std::log(p);
  return acc;
}

Var expected_reconstruction(Tape& tape, const ModelBinding& mb, const ModelConfig& cfg,
                            Var q, const std::vector<int>& sentence,
                            const VocabSupport& support) {
  std::vector<Var> terms;
  for (int k = 0; k < cfg.n_topics; ++k) {
    Var ll = sentence_log_likelihood(tape, mb, cfg, sentence, k, support);
    terms.push_back(tape.mul(tape.pick(q, k), ll));
  }
  return tape.add_many(terms);
}

double expected_reconstruction_value(ModelParams& params, const std::vector<double>& q,
                                     const std::vector<int>& sentence,
                                     const VocabSupport& support) {
  Tape tape;
  ModelBinding mb = bind_model(tape, params);
  Var qv = tape.input(Tensor({(int)q.size()}, q));
  return tape.value(expected_reconstruction(tape, mb, params.cfg, qv, sentence, support))[0];
}

DocumentElboVars document_elbo(Tape& tape, const ModelBinding& mb, const EncoderBinding& eb,
                               const ModelConfig& cfg, const Document& doc,
                               const Tensor& epsilon, const VocabSupport& support) {
  if (doc.sentences.empty()) throw std::invalid_argument("document_elbo: empty document");
  DocPosteriorVars post = encode_document(tape, eb, mb.Emb, document_words(doc), epsilon);
  Var kl = kl_gaussian(tape, post.mu, post.sigma, post.log_sigma);

  std::vector<Var> prior_terms, entropy_terms, recon_terms;
  for (const auto& sentence : doc.sentences) {
    SentPosteriorVars sp = encode_sentence(tape, eb, mb.Emb, sentence);
    prior_terms.push_back(expected_log_prior(tape, sp.q, post.theta_hat));
    entropy_terms.push_back(entropy(tape, sp.q, sp.log_q));
    recon_terms.push_back(expected_reconstruction(tape, mb, cfg, sp.q, sentence, support));
  }
  Var prior = tape.add_many(prior_terms);
  Var ent = tape.add_many(entropy_terms);
  Var recon = tape.add_many(recon_terms);
  Var elbo = tape.add_many({tape.neg(kl), prior, ent, recon});

  DocumentElboVars out;
  out.elbo = elbo;
  out.breakdown.kl = tape.value(kl)[0];
  out.breakdown.expected_log_prior = tape.value(prior)[0];
  out.breakdown.entropy = tape.value(ent)[0];
  out.breakdown.expected_reconstruction = tape.value(recon)[0];
  out.breakdown.elbo = tape.value(elbo)[0];
  return out;
}

ElboBreakdown document_elbo_value(ModelParams& model, EncoderParams& enc, const Document& doc,
                                  const std::vector<double>& epsilon,
                                  const VocabSupport& support) {
  Tape tape;
  ModelBinding mb = bind_model(tape, model);
  EncoderBinding eb = bind_encoder(tape, enc);
  Tensor eps({(int)epsilon.size()}, epsilon);
  return document_elbo(tape, mb, eb, model.cfg, doc, eps, support).breakdown;
}

namespace {

// Mean single-sample bound for one document, noise stream seeded per document.
double document_bound(ModelParams& model, EncoderParams& enc, const Document& doc,
                      int n_eps_samples, unsigned long long seed, size_t doc_index,
                      const VocabSupport& full) {
  std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL * (doc_index + 1));
  std::normal_distribution<double> n01(0.0, 1.0);
  double acc = 0;
  for (int s = 0; s < n_eps_samples; ++s) {
    std::vector<double> eps(model.cfg.n_topics);
    for (double& e : eps) e = n01(rng);
    acc += document_elbo_value(model, enc, doc, eps, full).elbo;
  }
  return acc / n_eps_samples;
}

std::vector<double> all_bounds(ModelParams& model, EncoderParams& enc, const Corpus& corpus,
                               int n_eps_samples, unsigned long long seed, int n_threads) {
  if (corpus.documents.empty()) throw std::invalid_argument("perplexity: empty corpus");
  VocabSupport full = VocabSupport::full_vocab(model.cfg.vocab_size);
  std::vector<double> bounds(corpus.documents.size());
  n_threads = std::max(1, n_threads);
  if (n_threads == 1) {
    for (size_t d = 0; d < corpus.documents.size(); ++d)
      bounds[d] = document_bound(model, enc, corpus.documents[d], n_eps_samples, seed, d, full);
    return bounds;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&, t] {
      for (size_t d = t; d < corpus.documents.size(); d += n_threads)
        bounds[d] = document_bound(model, enc, corpus.documents[d], n_eps_samples, seed, d, full);
    });
  }
  for (auto& th : pool) th.join();
  return bounds;
}

}  // namespace

double perplexity(ModelParams& model, EncoderParams& enc, const Corpus& corpus,
                  int n_eps_samples, unsigned long long seed, int n_threads) {
  std::vector<double> bounds = all_bounds(model, enc, corpus, n_eps_samples, seed, n_threads);
  double acc = 0;
  for (size_t d = 0; d < bounds.size(); ++d)
    acc += std::exp(-bounds[d] / corpus.documents[d].n_words());
  return acc / bounds.size();
}

void write_eval_report(std::ostream& out, ModelParams& model, EncoderParams& enc,
                       const Corpus& corpus, int n_eps_samples, unsigned long long seed,
                       int n_threads) {
  std::vector<double> bounds = all_bounds(model, enc, corpus, n_eps_samples, seed, n_threads);
  out << std::setprecision(17);
  double acc = 0;
  for (size_t d = 0; d < bounds.size(); ++d) {
    int nw = corpus.documents[d].n_words();
    out << corpus.documents[d].id << "\t" << bounds[d] << "\t" << nw << "\t"
        << bounds[d] / nw << "\n";
    acc += std::exp(-bounds[d] / nw);
  }
  out << "PERPLEXITY\t" << acc / bounds.size() << "\n";
}

}  // namespace sengen
