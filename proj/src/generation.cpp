#include "sengen/generation.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace sengen {

namespace {

struct Hypothesis {
  std::vector<int> words;
  double score = 0;
  DecoderState state;
  bool done = false;
};

bool better(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.words < b.words;  // smaller token id first, prefix before extension
}

}  // namespace

BeamResult beam_search(ModelParams& params, int topic, int width, int max_len) {
  if (width < 1 || max_len < 1)
    throw std::invalid_argument("beam_search: width and max_len must be >= 1");
  if (topic < 0 || topic >= params.cfg.n_topics)
    throw std::out_of_range("beam_search: topic out of range");

  Tape tape;
  ModelBinding mb = bind_model(tape, params);
  VocabSupport full = VocabSupport::full_vocab(params.cfg.vocab_size);

  std::vector<Hypothesis> beam(1);
  beam[0].state = decoder_init(tape, mb, params.cfg, topic);

  for (int step = 0; step < max_len; ++step) {
    std::vector<Hypothesis> candidates;
    bool any_live = false;
    for (const Hypothesis& h : beam) {
      if (h.done) {
        candidates.push_back(h);
        continue;
      }
      any_live = true;
      DecoderStep ds = decoder_step(tape, mb, params.cfg, h.state, topic, full);
      const Tensor& lp = tape.value(ds.log_probs);
      for (int v = 0; v < params.cfg.vocab_size; ++v) {
        Hypothesis c;
        c.words = h.words;
        c.words.push_back(v);
        c.score = h.score + lp[v];
        c.done = (v == kEosId);
        if (!c.done) {
          c.state = ds.state;
          c.state.prev_word = v;
        }
        candidates.push_back(std::move(c));
      }
    }
    if (!any_live) break;
    std::sort(candidates.begin(), candidates.end(), better);
    if ((int)candidates.size() > width) candidates.resize(width);
    beam = std::move(candidates);
  }

  const Hypothesis& best = *std::min_element(
      beam.begin(), beam.end(),
      [](const Hypothesis& a, const Hypothesis& b) { return better(a, b); });
  return {best.words, best.score};
}

std::vector<int> stochastic_sample(ModelParams& params, int topic, int max_len,
                                   std::mt19937_64& rng) {
  if (max_len < 1) throw std::invalid_argument("stochastic_sample: max_len must be >= 1");
  if (topic < 0 || topic >= params.cfg.n_topics)
    throw std::out_of_range("stochastic_sample: topic out of range");
  return sample_sentence(params, topic, max_len, rng);
}

std::string detokenize(const std::vector<int>& words, const Vocabulary& vocab) {
  std::string out;
  for (int w : words) {
    if (w == kEosId) break;
    if (!out.empty()) out += " ";
    out += vocab.tokens.at(w);
  }
  return out;
}

void write_generation_report(std::ostream& out, ModelParams& params, const Vocabulary& vocab,
                             const std::vector<int>& topics, int beam_width, int n_samples,
                             int max_len, unsigned long long seed) {
  out << std::setprecision(17);
  for (int k : topics) {
    out << "TOPIC " << k << "\n";
    BeamResult best = beam_search(params, k, beam_width, max_len);
    out << "BEST\t" << best.log_prob << "\t" << detokenize(best.words, vocab) << "\n";
    std::mt19937_64 rng(seed + 0x6a09e667ULL * (k + 1));
    for (int i = 0; i < n_samples; ++i) {
      std::vector<int> sample = stochastic_sample(params, k, max_len, rng);
      out << "SAMPLE " << i << "\t" << detokenize(sample, vocab) << "\n";
    }
  }
}

}  // namespace sengen
