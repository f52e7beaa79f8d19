#pragma once

#include <memory>
#include <string>

#include "sengen/encoder.hpp"
#include "sengen/model.hpp"

namespace sengen {

struct Checkpoint {
  ModelConfig cfg;
  std::unique_ptr<ModelParams> model;
  std::unique_ptr<EncoderParams> encoder;
  int epoch = 0;
  unsigned long long seed = 0;
  std::string init_scheme = "uniform0.08";
};

// Container layout: header line "sengen-ckpt v1", key=value metadata block
// terminated by "tensors", then each tensor as a name line, a shape line,
// and raw row-major little-endian doubles.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace sengen
