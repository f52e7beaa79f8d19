#pragma once

#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "sengen/model.hpp"

namespace sengen {

struct BeamResult {
  std::vector<int> words;  // ends with <eos> unless cut at max_len
  double log_prob = 0;
};

// Length-capped beam search over the decoder distributions with full
// vocabulary support. Ties break toward the lexicographically smaller
// token sequence (a prefix beats its extensions).
BeamResult beam_search(ModelParams& params, int topic, int width, int max_len);

// Ancestral sampling, one word per step, stopping at <eos> or max_len.
std::vector<int> stochastic_sample(ModelParams& params, int topic, int max_len,
                                   std::mt19937_64& rng);

std::string detokenize(const std::vector<int>& words, const Vocabulary& vocab);

// TOPIC k / BEST / SAMPLE i blocks for each requested topic.
void write_generation_report(std::ostream& out, ModelParams& params, const Vocabulary& vocab,
                             const std::vector<int>& topics, int beam_width, int n_samples,
                             int max_len, unsigned long long seed);

}  // namespace sengen
