#pragma once

#include <iosfwd>
#include <vector>

#include "sengen/encoder.hpp"
#include "sengen/model.hpp"

namespace sengen {

struct ElboBreakdown {
  double kl = 0;
  double expected_log_prior = 0;
  double entropy = 0;
  double expected_reconstruction = 0;
  double elbo = 0;
};

// KL(N(mu, diag sigma^2) || N(0, I)) = -1/2 sum(1 + 2 log sigma - mu^2 - sigma^2)
Var kl_gaussian(Tape& tape, Var mu, Var sigma, Var log_sigma);
double kl_gaussian(const std::vector<double>& mu, const std::vector<double>& sigma);

// Single-sample estimate of E_q log P(z_s|theta): sum_k q_k log softmax(theta_hat)_k
Var expected_log_prior(Tape& tape, Var q, Var theta_hat);
double expected_log_prior(const std::vector<double>& q, const std::vector<double>& theta_hat);

Var entropy(Tape& tape, Var q, Var log_q);
double entropy(const std::vector<double>& q);  // 0 log 0 := 0

// Exact sum over topics: sum_k q_k * log P(w_s | beta, k)
Var expected_reconstruction(Tape& tape, const ModelBinding& mb, const ModelConfig& cfg,
                            Var q, const std::vector<int>& sentence,
                            const VocabSupport& support);
double expected_reconstruction_value(ModelParams& params, const std::vector<double>& q,
                                     const std::vector<int>& sentence,
                                     const VocabSupport& support);

struct DocumentElboVars {
  Var elbo;
  ElboBreakdown breakdown;
};

// Assembles the per-document variational bound with one shared theta_hat
// sample across all sentences; differentiable end to end.
DocumentElboVars document_elbo(Tape& tape, const ModelBinding& mb, const EncoderBinding& eb,
                               const ModelConfig& cfg, const Document& doc,
                               const Tensor& epsilon, const VocabSupport& support);

ElboBreakdown document_elbo_value(ModelParams& model, EncoderParams& enc, const Document& doc,
                                  const std::vector<double>& epsilon,
                                  const VocabSupport& support);

// Mean over documents of exp(-elbo_d / N_d), full-vocabulary support; the
// per-document bound is averaged over n_eps_samples noise draws.
// Per-document noise streams are seeded from `seed` and the document index.
double perplexity(ModelParams& model, EncoderParams& enc, const Corpus& corpus,
                  int n_eps_samples, unsigned long long seed, int n_threads = 1);

// doc_id<TAB>elbo<TAB>n_words<TAB>per_word_bound lines, then PERPLEXITY<TAB>value.
void write_eval_report(std::ostream& out, ModelParams& model, EncoderParams& enc,
                       const Corpus& corpus, int n_eps_samples, unsigned long long seed,
                       int n_threads = 1);

}  // namespace sengen
