#pragma once

#include <vector>

#include "sengen/model.hpp"
#include "sengen/params.hpp"
#include "sengen/tape.hpp"

namespace sengen {

// Variational-encoder parameters. The word-embedding table is shared with
// the decoder (ModelParams), so it is not duplicated here.
class EncoderParams {
 public:
  ModelConfig cfg;
  ParamStore store;

  explicit EncoderParams(const ModelConfig& config);
  void init(unsigned long long seed, double range = 0.08);
};

struct EncoderBinding {
  Var W_gamma, b_gamma;
  Var W_mu, b_mu;
  Var W_sigma, b_sigma;
  GruVars gru;
  Var W_enc, b_enc;
};

EncoderBinding bind_encoder(Tape& tape, EncoderParams& params);

// Gaussian posterior parameters for one document plus the reparametrized
// sample theta_hat = mu + sigma .* eps.
struct DocPosteriorVars {
  Var mu;
  Var sigma;
  Var log_sigma;  // clamped preactivation, log of sigma
  Var theta_hat;
};

struct SentPosteriorVars {
  Var log_q;
  Var q;
};

// Plain-value views of the posteriors.
struct DocumentPosterior {
  std::vector<double> mu, sigma, theta_hat, epsilon;
};
struct SentencePosterior {
  std::vector<double> q;
};

// Bag-of-words document encoder: gamma = tanh(W_g * sum Emb[w] + b_g).
// The log-sigma preactivation is clamped to [-8, 8] before exp.
DocPosteriorVars encode_document(Tape& tape, const EncoderBinding& eb, Var Emb,
                                 const std::vector<int>& word_ids, const Tensor& epsilon);

// GRU over the sentence's word embeddings; softmax readout of the final state.
SentPosteriorVars encode_sentence(Tape& tape, const EncoderBinding& eb, Var Emb,
                                  const std::vector<int>& word_ids);

// Forward-only conveniences (fresh tape).
DocumentPosterior encode_document_value(ModelParams& model, EncoderParams& enc,
                                        const std::vector<int>& word_ids,
                                        const std::vector<double>& epsilon);
SentencePosterior encode_sentence_value(ModelParams& model, EncoderParams& enc,
                                        const std::vector<int>& word_ids);

std::vector<int> document_words(const Document& doc);

}  // namespace sengen
