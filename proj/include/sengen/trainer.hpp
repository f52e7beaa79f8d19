#pragma once

#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "sengen/checkpoint.hpp"
#include "sengen/objective.hpp"

namespace sengen {

struct TrainConfig {
  int n_topics = 25;
  int embed_dim = 100;
  int topic_embed_dim = 100;
  int hidden_dim = 200;
  int readout_dim = 100;
  int enc_hidden_dim = 200;
  int gamma_hidden_dim = 200;
  int sampled_vocab_size = 4000;
  int batch_size = 1;
  double clip_norm = 5.0;
  double adadelta_rho = 0.95;
  double adadelta_eps = 1e-6;
  int patience = 3;
  int max_epochs = 10;
  double init_range = 0.08;
  unsigned long long seed = 1;
  DecoderCell decoder_cell = DecoderCell::elman;

  void validate() const;
  ModelConfig model_config(int vocab_size) const;
};

// key=value lines; '#' comments; unknown keys rejected.
TrainConfig parse_train_config(std::istream& in);
TrainConfig load_train_config(const std::string& path);

// Batch words, <eos>, plus n_extra ids drawn without replacement in
// proportion to the unigram distribution (renormalized over the remainder).
VocabSupport sample_vocab_support(const std::vector<const Document*>& batch_docs,
                                  const Vocabulary& vocab, int n_extra,
                                  std::mt19937_64& rng);

// Scales all gradients so the global L2 norm does not exceed clip_norm.
void clip_gradients(std::vector<ParamStore*> stores, double clip_norm);

struct AdadeltaState {
  std::vector<Tensor> acc_grad_sq;
  std::vector<Tensor> acc_update_sq;
  explicit AdadeltaState(const ParamStore& store);
};

void adadelta_step(ParamStore& store, AdadeltaState& state, double rho, double eps);

struct EpochRecord {
  int epoch = 0;
  double train_obj = 0;  // mean per-document negative ELBO
  double valid_obj = 0;  // mean per-word negative ELBO, full support
  double seconds = 0;
};

struct TrainResult {
  std::string best_checkpoint;
  std::vector<EpochRecord> log;
  int best_epoch = 0;
  double best_valid_obj = 0;
};

// Per-document: draw eps, sample support, build the ELBO graph, backward,
// clip, Adadelta. Early-stops on the validation bound; keeps the best
// checkpoint at <out_dir>/best.ckpt and the log at <out_dir>/train.log.
TrainResult train(const Corpus& train_corpus, const Corpus& valid_corpus,
                  const TrainConfig& config, const std::string& out_dir);

void write_train_log(std::ostream& out, const std::vector<EpochRecord>& log);

}  // namespace sengen
