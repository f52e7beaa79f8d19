#include "sengen/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sengen {

std::string decoder_cell_name(DecoderCell c) {
  return c == DecoderCell::elman ? "elman" : "gru";
}

DecoderCell decoder_cell_from_name(const std::string& name) {
  if (name == "elman") return DecoderCell::elman;
  if (name == "gru") return DecoderCell::gru;
  throw std::invalid_argument("unknown decoder cell: " + name);
}

void add_gru_params(ParamStore& store, const std::string& prefix, int input_dim,
                    int hidden_dim) {
  for (const char* gate : {"z", "r", "h"}) {
    store.add(prefix + "_W" + gate, {hidden_dim, input_dim});
    store.add(prefix + "_U" + gate, {hidden_dim, hidden_dim});
    store.add(prefix + "_b" + gate, {hidden_dim});
  }
}

GruVars bind_gru(Tape& tape, ParamStore& store, const std::string& prefix) {
  auto L = [&](const std::string& n) {
    Param& p = store.at(prefix + "_" + n);
    return tape.leaf(&p.value, &p.grad);
  };
  GruVars g;
  g.Wz = L("Wz"); g.Uz = L("Uz"); g.bz = L("bz");
  g.Wr = L("Wr"); g.Ur = L("Ur"); g.br = L("br");
  g.Wh = L("Wh"); g.Uh = L("Uh"); g.bh = L("bh");
  return g;
}

Var gru_step(Tape& t, const GruVars& g, Var h_prev, Var x) {
  Var z = t.sigmoid_elem(t.add(t.affine(g.Wz, x, g.bz), t.matvec(g.Uz, h_prev)));
  Var r = t.sigmoid_elem(t.add(t.affine(g.Wr, x, g.br), t.matvec(g.Ur, h_prev)));
  Var hb = t.tanh_elem(
      t.add(t.affine(g.Wh, x, g.bh), t.matvec(g.Uh, t.hadamard(r, h_prev))));
  // h' = (1 - z) .* h_prev + z .* hb
  return t.add(t.hadamard(t.scale_shift(z, -1.0, 1.0), h_prev), t.hadamard(z, hb));
}

VocabSupport VocabSupport::full_vocab(int vocab_size) {
  VocabSupport s;
  s.is_full = true;
  s.ids.resize(vocab_size);
  for (int i = 0; i < vocab_size; ++i) {
    s.ids[i] = i;
    s.pos[i] = i;
  }
  return s;
}

VocabSupport VocabSupport::subset(std::vector<int> word_ids) {
  VocabSupport s;
  std::sort(word_ids.begin(), word_ids.end());
  word_ids.erase(std::unique(word_ids.begin(), word_ids.end()), word_ids.end());
  s.ids = std::move(word_ids);
  for (int i = 0; i < (int)s.ids.size(); ++i) s.pos[s.ids[i]] = i;
  return s;
}

ModelParams::ModelParams(const ModelConfig& config) : cfg(config) {
  const auto& c = cfg;
  store.add("Emb", {c.vocab_size, c.embed_dim});
  store.add("EmbZ", {c.n_topics, c.topic_embed_dim});
  if (c.decoder_cell == DecoderCell::elman) {
    store.add("W_h", {c.hidden_dim, c.hidden_dim});
    store.add("W_e", {c.hidden_dim, c.embed_dim});
    store.add("W_c", {c.hidden_dim, c.topic_embed_dim});
    store.add("b", {c.hidden_dim});
  } else {
    // gru input is [Emb[w_{i-1}]; c_s]
    add_gru_params(store, "dec", c.embed_dim + c.topic_embed_dim, c.hidden_dim);
  }
  store.add("Wr_h", {c.readout_dim, c.hidden_dim});
  store.add("Wr_e", {c.readout_dim, c.embed_dim});
  store.add("Wr_c", {c.readout_dim, c.topic_embed_dim});
  store.add("br", {c.readout_dim});
  for (int k = 0; k < c.n_topics; ++k)
    store.add("Wv_" + std::to_string(k), {c.vocab_size, c.readout_dim});
  store.add("bv", {c.vocab_size});
}

void ModelParams::init(unsigned long long seed, double range) {
  std::mt19937_64 rng(seed);
  store.init_uniform(rng, range);
}

ModelBinding bind_model(Tape& tape, ModelParams& params) {
  auto L = [&](const std::string& n) {
    Param& p = params.store.at(n);
    return tape.leaf(&p.value, &p.grad);
  };
  ModelBinding mb;
  mb.Emb = L("Emb");
  mb.EmbZ = L("EmbZ");
  if (params.cfg.decoder_cell == DecoderCell::elman) {
    mb.W_h = L("W_h");
    mb.W_e = L("W_e");
    mb.W_c = L("W_c");
    mb.b = L("b");
  } else {
    mb.dec_gru = bind_gru(tape, params.store, "dec");
  }
  mb.Wr_h = L("Wr_h");
  mb.Wr_e = L("Wr_e");
  mb.Wr_c = L("Wr_c");
  mb.br = L("br");
  for (int k = 0; k < params.cfg.n_topics; ++k) mb.Wv.push_back(L("Wv_" + std::to_string(k)));
  mb.bv = L("bv");
  return mb;
}

DecoderState decoder_init(Tape& tape, const ModelBinding& mb, const ModelConfig& cfg,
                          int topic) {
  if (topic < 0 || topic >= cfg.n_topics)
    throw std::out_of_range("decoder_init: topic " + std::to_string(topic) +
                            " out of range (K=" + std::to_string(cfg.n_topics) + ")");
  DecoderState s;
  s.h = tape.input(Tensor({cfg.hidden_dim}));
  s.context = tape.row(mb.EmbZ, topic);
  s.prev_word = -1;
  return s;
}

DecoderStep decoder_step(Tape& tape, const ModelBinding& mb, const ModelConfig& cfg,
                         const DecoderState& state, int topic,
                         const VocabSupport& support) {
  if (topic < 0 || topic >= cfg.n_topics)
    throw std::out_of_range("decoder_step: topic out of range");
  Var e_prev = state.prev_word < 0 ? tape.input(Tensor({cfg.embed_dim}))
                                   : tape.row(mb.Emb, state.prev_word);
  Var h_new;
  if (cfg.decoder_cell == DecoderCell::elman) {
    h_new = tape.tanh_elem(tape.add_many(
        {tape.matvec(mb.W_h, state.h), tape.matvec(mb.W_e, e_prev),
         tape.affine(mb.W_c, state.context, mb.b)}));
  } else {
    h_new = gru_step(tape, mb.dec_gru, state.h, tape.concat(e_prev, state.context));
  }
  Var readout = tape.tanh_elem(tape.add_many(
      {tape.matvec(mb.Wr_h, h_new), tape.matvec(mb.Wr_e, e_prev),
       tape.affine(mb.Wr_c, state.context, mb.br)}));
  Var logits = tape.affine(mb.Wv[topic], readout, mb.bv);
  Var log_probs = support.is_full ? tape.log_softmax(logits)
                                  : tape.log_softmax_subset(logits, support.ids);
  DecoderStep out;
  out.state = state;
  out.state.h = h_new;
  out.log_probs = log_probs;
  return out;
}

Var sentence_log_likelihood(Tape& tape, const ModelBinding& mb, const ModelConfig& cfg,
                            const std::vector<int>& words, int topic,
                            const VocabSupport& support) {
  if (words.empty()) throw std::invalid_argument("sentence_log_likelihood: empty sentence");
  if (words.back() != kEosId)
    throw std::invalid_argument("sentence_log_likelihood: sentence must end with <eos>");
  DecoderState state = decoder_init(tape, mb, cfg, topic);
  std::vector<Var> terms;
  for (int w : words) {
    DecoderStep step = decoder_step(tape, mb, cfg, state, topic, support);
    int p = support.position_of(w);
    if (p < 0)
      throw std::runtime_error("sentence_log_likelihood: target word " + std::to_string(w) +
                               " not in vocabulary support");
    terms.push_back(tape.pick(step.log_probs, p));
    state = step.state;
    state.prev_word = w;
  }
  return tape.add_many(terms);
}

double sentence_log_likelihood_value(ModelParams& params, const std::vector<int>& words,
                                     int topic, const VocabSupport& support) {
  Tape tape;
  ModelBinding mb = bind_model(tape, params);
  Var ll = sentence_log_likelihood(tape, mb, params.cfg, words, topic, support);
  return tape.value(ll)[0];
}

std::vector<double> softmax(const std::vector<double>& x) {
  double mx = *std::max_element(x.begin(), x.end());
  std::vector<double> p(x.size());
  double z = 0;
  for (size_t i = 0; i < x.size(); ++i) z += (p[i] = std::exp(x[i] - mx));
  for (double& v : p) v /= z;
  return p;
}

int sample_categorical(const std::vector<double>& probs, std::mt19937_64& rng) {
  double total = 0;
  for (double p : probs) total += p;
  std::uniform_real_distribution<double> u(0.0, total);
  double r = u(rng);
  double acc = 0;
  for (size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (r <= acc) return (int)i;
  }
  return (int)probs.size() - 1;
}

std::vector<int> sample_sentence(ModelParams& params, int topic, int max_len,
                                 std::mt19937_64& rng) {
  Tape tape;
  ModelBinding mb = bind_model(tape, params);
  VocabSupport full = VocabSupport::full_vocab(params.cfg.vocab_size);
  DecoderState state = decoder_init(tape, mb, params.cfg, topic);
  std::vector<int> words;
  for (int i = 0; i < max_len; ++i) {
    DecoderStep step = decoder_step(tape, mb, params.cfg, state, topic, full);
    std::vector<double> probs(params.cfg.vocab_size);
    for (int v = 0; v < params.cfg.vocab_size; ++v)
      probs[v] = std::exp(tape.value(step.log_probs)[v]);
    int w = sample_categorical(probs, rng);
    words.push_back(w);
    if (w == kEosId) break;
    state = step.state;
    state.prev_word = w;
  }
  return words;
}

SampledDocument sample_document_forced(ModelParams& params, const std::vector<double>& theta,
                                       int n_sentences, int max_len, std::mt19937_64& rng) {
  if (n_sentences < 1) throw std::invalid_argument("sample_document: n_sentences must be >= 1");
  SampledDocument out;
  out.theta = theta;
  std::vector<double> mix = softmax(theta);
  for (int s = 0; s < n_sentences; ++s) {
    int z = sample_categorical(mix, rng);
    out.topics.push_back(z);
    std::vector<int> words = sample_sentence(params, z, max_len, rng);
    if (words.empty() || words.back() != kEosId) words.push_back(kEosId);
    out.doc.sentences.push_back(std::move(words));
  }
  return out;
}

SampledDocument sample_document(ModelParams& params, int n_sentences, int max_len,
                                std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<double> theta(params.cfg.n_topics);
  for (double& t : theta) t = n01(rng);
  return sample_document_forced(params, theta, n_sentences, max_len, rng);
}

}  // namespace sengen
