#pragma once

#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "sengen/corpus.hpp"
#include "sengen/params.hpp"
#include "sengen/tape.hpp"

namespace sengen {

enum class DecoderCell { elman, gru };

std::string decoder_cell_name(DecoderCell c);
DecoderCell decoder_cell_from_name(const std::string& name);

struct ModelConfig {
  int n_topics = 25;
  int vocab_size = 0;
  int embed_dim = 100;        // E
  int topic_embed_dim = 100;  // E_z
  int hidden_dim = 200;       // H
  int readout_dim = 100;      // R
  int enc_hidden_dim = 200;   // sentence-encoder hidden
  int gamma_hidden_dim = 200; // document-encoder hidden
  DecoderCell decoder_cell = DecoderCell::elman;
};

// Gated-recurrent-cell parameters: update gate z, reset gate r, candidate h.
struct GruVars {
  Var Wz, Uz, bz;
  Var Wr, Ur, br;
  Var Wh, Uh, bh;
};

void add_gru_params(ParamStore& store, const std::string& prefix, int input_dim,
                    int hidden_dim);
GruVars bind_gru(Tape& tape, ParamStore& store, const std::string& prefix);
Var gru_step(Tape& tape, const GruVars& g, Var h_prev, Var x);

// Softmax support: either the full vocabulary or a sampled index subset.
struct VocabSupport {
  std::vector<int> ids;  // sorted ascending
  std::unordered_map<int, int> pos;
  bool is_full = false;

  static VocabSupport full_vocab(int vocab_size);
  static VocabSupport subset(std::vector<int> word_ids);

  int size() const { return (int)ids.size(); }
  int position_of(int word_id) const {
    auto it = pos.find(word_id);
    return it == pos.end() ? -1 : it->second;
  }
  bool contains(int word_id) const { return pos.count(word_id) > 0; }
};

// Generative-side parameters: shared recurrent/readout weights plus one
// word-softmax matrix per topic.
class ModelParams {
 public:
  ModelConfig cfg;
  ParamStore store;

  explicit ModelParams(const ModelConfig& config);
  void init(unsigned long long seed, double range = 0.08);

  Tensor& tensor(const std::string& name) { return store.at(name).value; }
  const Tensor& tensor(const std::string& name) const { return store.at(name).value; }
  Tensor& topic_softmax(int k) { return store.at("Wv_" + std::to_string(k)).value; }
};

// Per-tape handles to every generative parameter.
struct ModelBinding {
  Var Emb, EmbZ;
  Var W_h, W_e, W_c, b;  // elman cell
  GruVars dec_gru;       // gru cell
  Var Wr_h, Wr_e, Wr_c, br;
  std::vector<Var> Wv;
  Var bv;
};

ModelBinding bind_model(Tape& tape, ModelParams& params);

struct DecoderState {
  Var h;
  Var context;        // EmbZ[topic]
  int prev_word = -1; // -1 marks the zeroth-word sentinel
};

struct DecoderStep {
  DecoderState state;   // prev_word not yet advanced; caller sets it
  Var log_probs;        // over the support, exp sums to 1
};

DecoderState decoder_init(Tape& tape, const ModelBinding& mb, const ModelConfig& cfg,
                          int topic);
DecoderStep decoder_step(Tape& tape, const ModelBinding& mb, const ModelConfig& cfg,
                         const DecoderState& state, int topic,
                         const VocabSupport& support);

// Teacher-forced log P(w_s | z_s) summed over all positions including <eos>.
Var sentence_log_likelihood(Tape& tape, const ModelBinding& mb, const ModelConfig& cfg,
                            const std::vector<int>& words, int topic,
                            const VocabSupport& support);

// Forward-only convenience (fresh tape, no gradients).
double sentence_log_likelihood_value(ModelParams& params, const std::vector<int>& words,
                                     int topic, const VocabSupport& support);

struct SampledDocument {
  Document doc;
  std::vector<double> theta;
  std::vector<int> topics;  // one per sentence
};

SampledDocument sample_document(ModelParams& params, int n_sentences, int max_len,
                                std::mt19937_64& rng);
// Same but with the topic-strength vector pinned by the caller.
SampledDocument sample_document_forced(ModelParams& params, const std::vector<double>& theta,
                                       int n_sentences, int max_len, std::mt19937_64& rng);

std::vector<int> sample_sentence(ModelParams& params, int topic, int max_len,
                                 std::mt19937_64& rng);

// Inverse-CDF draw from unnormalized probabilities.
int sample_categorical(const std::vector<double>& probs, std::mt19937_64& rng);

std::vector<double> softmax(const std::vector<double>& x);

}  // namespace sengen
