#include "sengen/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace sengen {

void TrainConfig::validate() const {
  auto pos = [](double v, const char* name) {
    if (!(v > 0)) throw std::invalid_argument(std::string("config: ") + name + " must be positive");
  };
  pos(n_topics, "n_topics");
  pos(embed_dim, "embed_dim");
  pos(topic_embed_dim, "topic_embed_dim");
  pos(hidden_dim, "hidden_dim");
  pos(readout_dim, "readout_dim");
  pos(enc_hidden_dim, "enc_hidden_dim");
  pos(gamma_hidden_dim, "gamma_hidden_dim");
  pos(batch_size, "batch_size");
  pos(clip_norm, "clip_norm");
  pos(adadelta_rho, "adadelta_rho");
  pos(adadelta_eps, "adadelta_eps");
  pos(patience, "patience");
  pos(init_range, "init_range");
  if (sampled_vocab_size < 0) throw std::invalid_argument("config: sampled_vocab_size must be positive");
  if (max_epochs < 0) throw std::invalid_argument("config: max_epochs must be non-negative");
}

ModelConfig TrainConfig::model_config(int vocab_size) const {
  ModelConfig mc;
  mc.n_topics = n_topics;
  mc.vocab_size = vocab_size;
  mc.embed_dim = embed_dim;
  mc.topic_embed_dim = topic_embed_dim;
  mc.hidden_dim = hidden_dim;
  mc.readout_dim = readout_dim;
  mc.enc_hidden_dim = enc_hidden_dim;
  mc.gamma_hidden_dim = gamma_hidden_dim;
  mc.decoder_cell = decoder_cell;
  return mc;
}

TrainConfig parse_train_config(std::istream& in) {
  TrainConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
    auto strip = [](std::string s) {
      size_t a = s.find_first_not_of(" \t\r");
      size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = strip(line.substr(0, eq)), val = strip(line.substr(eq + 1));
    if (key == "n_topics") c.n_topics = std::stoi(val);
    else if (key == "embed_dim") c.embed_dim = std::stoi(val);
    else if (key == "topic_embed_dim") c.topic_embed_dim = std::stoi(val);
    else if (key == "hidden_dim") c.hidden_dim = std::stoi(val);
    else if (key == "readout_dim") c.readout_dim = std::stoi(val);
    else if (key == "enc_hidden_dim") c.enc_hidden_dim = std::stoi(val);
    else if (key == "gamma_hidden_dim") c.gamma_hidden_dim = std::stoi(val);
    else if (key == "sampled_vocab_size") c.sampled_vocab_size = std::stoi(val);
    else if (key == "batch_size") c.batch_size = std::stoi(val);
    else if (key == "clip_norm") c.clip_norm = std::stod(val);
    else if (key == "adadelta_rho") c.adadelta_rho = std::stod(val);
    else if (key == "adadelta_eps") c.adadelta_eps = std::stod(val);
    else if (key == "patience") c.patience = std::stoi(val);
    else if (key == "max_epochs") c.max_epochs = std::stoi(val);
    else if (key == "init_range") c.init_range = std::stod(val);
    else if (key == "seed") c.seed = std::stoull(val);
    else if (key == "decoder_cell") c.decoder_cell = decoder_cell_from_name(val);
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config: " + path);
  return parse_train_config(in);
}

VocabSupport sample_vocab_support(const std::vector<const Document*>& batch_docs,
                                  const Vocabulary& vocab, int n_extra,
                                  std::mt19937_64& rng) {
  std::set<int> chosen;
  chosen.insert(kEosId);
  for (const Document* d : batch_docs)
    for (const auto& s : d->sentences) chosen.insert(s.begin(), s.end());

  std::vector<int> candidates;
  std::vector<double> weights;
  for (int v = 0; v < vocab.size(); ++v) {
    if (chosen.count(v)) continue;
    candidates.push_back(v);
    weights.push_back(vocab.unigram[v]);
  }
  n_extra = std::min<int>(n_extra, (int)candidates.size());
  for (int draw = 0; draw < n_extra; ++draw) {
    int pick = sample_categorical(weights, rng);
    chosen.insert(candidates[pick]);
    candidates.erase(candidates.begin() + pick);
    weights.erase(weights.begin() + pick);
  }
  return VocabSupport::subset(std::vector<int>(chosen.begin(), chosen.end()));
}

void clip_gradients(std::vector<ParamStore*> stores, double clip_norm) {
  if (!(clip_norm > 0)) throw std::invalid_argument("clip_gradients: clip_norm must be positive");
  double sq = 0;
  for (ParamStore* s : stores) sq += s->grad_sq_norm();
  double norm = std::sqrt(sq);
  if (norm > clip_norm)
    for (ParamStore* s : stores) s->scale_grads(clip_norm / norm);
}

AdadeltaState::AdadeltaState(const ParamStore& store) {
  for (int i = 0; i < store.size(); ++i) {
    acc_grad_sq.emplace_back(store[i].value.shape);
    acc_update_sq.emplace_back(store[i].value.shape);
  }
}

void adadelta_step(ParamStore& store, AdadeltaState& state, double rho, double eps) {
  if ((int)state.acc_grad_sq.size() != store.size())
    throw std::invalid_argument("adadelta_step: state does not match store");
  for (int i = 0; i < store.size(); ++i) {
    Param& p = store[i];
    Tensor& eg2 = state.acc_grad_sq[i];
    Tensor& ed2 = state.acc_update_sq[i];
    if (!same_shape(eg2, p.value)) throw std::invalid_argument("adadelta_step: shape mismatch");
    for (int j = 0; j < p.value.size(); ++j) {
      double g = p.grad[j];
      eg2[j] = rho * eg2[j] + (1.0 - rho) * g * g;
      double dx = -std::sqrt(ed2[j] + eps) / std::sqrt(eg2[j] + eps) * g;
      ed2[j] = rho * ed2[j] + (1.0 - rho) * dx * dx;
      p.value[j] += dx;
    }
  }
}

namespace {

std::vector<double> draw_eps(int k, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<double> eps(k);
  for (double& e : eps) e = n01(rng);
  return eps;
}

// Mean per-word negative bound with a per-document noise stream that does
// not depend on the epoch, so epochs are comparable.
double validation_objective(ModelParams& model, EncoderParams& enc, const Corpus& corpus,
                            unsigned long long seed) {
  VocabSupport full = VocabSupport::full_vocab(model.cfg.vocab_size);
  double acc = 0;
  for (size_t d = 0; d < corpus.documents.size(); ++d) {
    std::mt19937_64 rng(seed + 0x51ed2701ULL * (d + 1));
    auto eps = draw_eps(model.cfg.n_topics, rng);
    double elbo = document_elbo_value(model, enc, corpus.documents[d], eps, full).elbo;
    acc += -elbo / corpus.documents[d].n_words();
  }
  return acc / corpus.documents.size();
}

double train_objective(ModelParams& model, EncoderParams& enc, const Corpus& corpus,
                       unsigned long long seed) {
  VocabSupport full = VocabSupport::full_vocab(model.cfg.vocab_size);
  double acc = 0;
  for (size_t d = 0; d < corpus.documents.size(); ++d) {
    std::mt19937_64 rng(seed + 0x7a3c9b51ULL * (d + 1));
    auto eps = draw_eps(model.cfg.n_topics, rng);
    acc += -document_elbo_value(model, enc, corpus.documents[d], eps, full).elbo;
  }
  return acc / corpus.documents.size();
}

}  // namespace

TrainResult train(const Corpus& train_corpus, const Corpus& valid_corpus,
                  const TrainConfig& config, const std::string& out_dir) {
  config.validate();
  if (train_corpus.vocabulary != valid_corpus.vocabulary)
    throw std::invalid_argument("train: corpora must share a vocabulary");
  const Vocabulary& vocab = *train_corpus.vocabulary;
  if (config.sampled_vocab_size > vocab.size())
    throw std::invalid_argument("train: sampled_vocab_size exceeds vocabulary size");
  std::filesystem::create_directories(out_dir);

  ModelConfig mc = config.model_config(vocab.size());
  Checkpoint ckpt;
  ckpt.cfg = mc;
  ckpt.model = std::make_unique<ModelParams>(mc);
  ckpt.encoder = std::make_unique<EncoderParams>(mc);
  ckpt.seed = config.seed;
  {
    std::ostringstream scheme;
    scheme << "uniform" << config.init_range;
    ckpt.init_scheme = scheme.str();
  }
  ckpt.model->init(config.seed, config.init_range);
  ckpt.encoder->init(config.seed + 1, config.init_range);
  ModelParams& model = *ckpt.model;
  EncoderParams& enc = *ckpt.encoder;

  AdadeltaState opt_model(model.store), opt_enc(enc.store);
  std::mt19937_64 rng(config.seed * 0x2545f4914f6cdd1dULL + 0xb5026f5aa96619e9ULL);

  TrainResult result;
  result.best_checkpoint = out_dir + "/best.ckpt";
  std::string log_path = out_dir + "/train.log";

  // Epoch 0 records the untrained model and seeds the best checkpoint.
  {
    auto t0 = std::chrono::steady_clock::now();
    EpochRecord r;
    r.epoch = 0;
    r.train_obj = train_objective(model, enc, train_corpus, config.seed);
    r.valid_obj = validation_objective(model, enc, valid_corpus, config.seed);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(r);
    result.best_epoch = 0;
    result.best_valid_obj = r.valid_obj;
    save_checkpoint(result.best_checkpoint, ckpt);
  }

  std::vector<size_t> order(train_corpus.documents.size());
  std::iota(order.begin(), order.end(), (size_t)0);

  int since_best = 0;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double train_acc = 0;
    long long step = 0;
    for (size_t pos = 0; pos < order.size(); pos += config.batch_size) {
      std::vector<const Document*> batch;
      for (size_t b = pos; b < std::min(order.size(), pos + config.batch_size); ++b)
        batch.push_back(&train_corpus.documents[order[b]]);
      VocabSupport support =
          sample_vocab_support(batch, vocab, config.sampled_vocab_size, rng);
      model.store.zero_grads();
      enc.store.zero_grads();
      std::vector<Var> losses;
      Tape tape;
      ModelBinding mb = bind_model(tape, model);
      EncoderBinding eb = bind_encoder(tape, enc);
      for (const Document* doc : batch) {
        auto eps_v = draw_eps(mc.n_topics, rng);
        Tensor eps({mc.n_topics}, eps_v);
        DocumentElboVars ev = document_elbo(tape, mb, eb, mc, *doc, eps, support);
        if (!std::isfinite(ev.breakdown.elbo))
          throw std::domain_error("train: objective diverged at document " + doc->id +
                                   ", epoch " + std::to_string(epoch) + ", step " +
                                   std::to_string(step));
        losses.push_back(tape.neg(ev.elbo));
        train_acc += -ev.breakdown.elbo;
      }
      tape.backward(tape.add_many(losses));
      clip_gradients({&model.store, &enc.store}, config.clip_norm);
      adadelta_step(model.store, opt_model, config.adadelta_rho, config.adadelta_eps);
      adadelta_step(enc.store, opt_enc, config.adadelta_rho, config.adadelta_eps);
      ++step;
    }

    EpochRecord r;
    r.epoch = epoch;
    r.train_obj = train_acc / train_corpus.documents.size();
    r.valid_obj = validation_objective(model, enc, valid_corpus, config.seed);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(r);

    if (r.valid_obj < result.best_valid_obj) {
      result.best_valid_obj = r.valid_obj;
      result.best_epoch = epoch;
      ckpt.epoch = epoch;
      save_checkpoint(result.best_checkpoint, ckpt);
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }

  std::ofstream log_out(log_path);
  write_train_log(log_out, result.log);
  return result;
}

void write_train_log(std::ostream& out, const std::vector<EpochRecord>& log) {
  out << std::setprecision(17);
  for (const auto& r : log)
    out << r.epoch << "\t" << r.train_obj << "\t" << r.valid_obj << "\t" << r.seconds << "\n";
}

}  // namespace sengen
