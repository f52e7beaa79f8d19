#include "sengen/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sengen {

EncoderParams::EncoderParams(const ModelConfig& config) : cfg(config) {
  const auto& c = cfg;
  store.add("W_gamma", {c.gamma_hidden_dim, c.embed_dim});
  store.add("b_gamma", {c.gamma_hidden_dim});
  store.add("W_mu", {c.n_topics, c.gamma_hidden_dim});
  store.add("b_mu", {c.n_topics});
  store.add("W_sigma", {c.n_topics, c.gamma_hidden_dim});
  store.add("b_sigma", {c.n_topics});
  add_gru_params(store, "enc", c.embed_dim, c.enc_hidden_dim);
  store.add("W_enc", {c.n_topics, c.enc_hidden_dim});
  store.add("b_enc", {c.n_topics});
}

void EncoderParams::init(unsigned long long seed, double range) {
  std::mt19937_64 rng(seed);
  store.init_uniform(rng, range);
}

EncoderBinding bind_encoder(Tape& tape, EncoderParams& params) {
  auto L = [&](const std::string& n) {
    Param& p = params.store.at(n);
    return tape.leaf(&p.value, &p.grad);
  };
  EncoderBinding eb;
  eb.W_gamma = L("W_gamma");
  eb.b_gamma = L("b_gamma");
  eb.W_mu = L("W_mu");
  eb.b_mu = L("b_mu");
  eb.W_sigma = L("W_sigma");
  eb.b_sigma = L("b_sigma");
  eb.gru = bind_gru(tape, params.store, "enc");
  eb.W_enc = L("W_enc");
  eb.b_enc = L("b_enc");
  return eb;
}

DocPosteriorVars encode_document(Tape& tape, const EncoderBinding& eb, Var Emb,
                                 const std::vector<int>& word_ids, const Tensor& epsilon) {
  if (word_ids.empty()) throw std::invalid_argument("encode_document: empty document");
  // summation order is fixed so the bag of words is exactly order-invariant
  std::vector<int> sorted_ids = word_ids;
  std::sort(sorted_ids.begin(), sorted_ids.end());
  Var bow = tape.rows_sum(Emb, sorted_ids);
  Var gamma = tape.tanh_elem(tape.affine(eb.W_gamma, bow, eb.b_gamma));
  DocPosteriorVars out;
  out.mu = tape.affine(eb.W_mu, gamma, eb.b_mu);
  out.log_sigma = tape.clamp(tape.affine(eb.W_sigma, gamma, eb.b_sigma), -8.0, 8.0);
  out.sigma = tape.exp_elem(out.log_sigma);
  Var eps = tape.input(epsilon);
  out.theta_hat = tape.add(out.mu, tape.hadamard(out.sigma, eps));
  return out;
}

SentPosteriorVars encode_sentence(Tape& tape, const EncoderBinding& eb, Var Emb,
                                  const std::vector<int>& word_ids) {
  if (word_ids.empty()) throw std::invalid_argument("encode_sentence: empty sentence");
  Var h = tape.input(Tensor({(int)tape.value(eb.gru.bz).size()}));
  for (int w : word_ids) h = gru_step(tape, eb.gru, h, tape.row(Emb, w));
  Var logits = tape.affine(eb.W_enc, h, eb.b_enc);
  SentPosteriorVars out;
  out.log_q = tape.log_softmax(logits);
  out.q = tape.exp_elem(out.log_q);
  return out;
}

DocumentPosterior encode_document_value(ModelParams& model, EncoderParams& enc,
                                        const std::vector<int>& word_ids,
                                        const std::vector<double>& epsilon) {
  Tape tape;
  Param& emb = model.store.at("Emb");
  Var Emb = tape.leaf(&emb.value, &emb.grad);
  EncoderBinding eb = bind_encoder(tape, enc);
  Tensor eps({(int)epsilon.size()}, epsilon);
  DocPosteriorVars v = encode_document(tape, eb, Emb, word_ids, eps);
  DocumentPosterior out;
  out.mu = tape.value(v.mu).data;
  out.sigma = tape.value(v.sigma).data;
  out.theta_hat = tape.value(v.theta_hat).data;
  out.epsilon = epsilon;
  return out;
}

SentencePosterior encode_sentence_value(ModelParams& model, EncoderParams& enc,
                                        const std::vector<int>& word_ids) {
  Tape tape;
  Param& emb = model.store.at("Emb");
  Var Emb = tape.leaf(&emb.value, &emb.grad);
  EncoderBinding eb = bind_encoder(tape, enc);
  SentPosteriorVars v = encode_sentence(tape, eb, Emb, word_ids);
  return {tape.value(v.q).data};
}

std::vector<int> document_words(const Document& doc) {
  std::vector<int> out;
  for (const auto& s : doc.sentences) out.insert(out.end(), s.begin(), s.end());
  return out;
}

}  // namespace sengen
