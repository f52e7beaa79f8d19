#include "sengen/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

namespace sengen {

namespace {

// Assumes a little-endian host, which covers every target we build on.
void write_doubles(std::ostream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()), (std::streamsize)(v.size() * 8));
}

void read_doubles(std::istream& in, std::vector<double>& v) {
  in.read(reinterpret_cast<char*>(v.data()), (std::streamsize)(v.size() * 8));
  if (!in) throw std::runtime_error("checkpoint: truncated tensor data");
}

void write_store(std::ostream& out, const ParamStore& store) {
  for (int i = 0; i < store.size(); ++i) {
    const Param& p = store[i];
    out << p.name << "\n";
    for (size_t d = 0; d < p.value.shape.size(); ++d)
      out << (d ? " " : "") << p.value.shape[d];
    out << "\n";
    write_doubles(out, p.value.data);
    out << "\n";
  }
}

void read_store(std::istream& in, ParamStore& store) {
  std::string name, shape_line;
  for (int i = 0; i < store.size(); ++i) {
    if (!std::getline(in, name) || !std::getline(in, shape_line))
      throw std::runtime_error("checkpoint: truncated tensor header");
    Param& p = store.at(name);
    read_doubles(in, p.value.data);
    in.get();  // trailing newline
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  const ModelConfig& c = ckpt.cfg;
  out << "sengen-ckpt v1\n";
  out << "K=" << c.n_topics << "\n";
  out << "V=" << c.vocab_size << "\n";
  out << "E=" << c.embed_dim << "\n";
  out << "E_z=" << c.topic_embed_dim << "\n";
  out << "H=" << c.hidden_dim << "\n";
  out << "R=" << c.readout_dim << "\n";
  out << "H_enc=" << c.enc_hidden_dim << "\n";
  out << "H_gamma=" << c.gamma_hidden_dim << "\n";
  out << "decoder_cell=" << decoder_cell_name(c.decoder_cell) << "\n";
  out << "init=" << ckpt.init_scheme << "\n";
  out << "epoch=" << ckpt.epoch << "\n";
  out << "seed=" << ckpt.seed << "\n";
  out << "tensors\n";
  write_store(out, ckpt.model->store);
  write_store(out, ckpt.encoder->store);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "sengen-ckpt v1")
    throw std::runtime_error("checkpoint: bad header in " + path);
  std::map<std::string, std::string> meta;
  while (std::getline(in, line) && line != "tensors") {
    size_t eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("checkpoint: bad metadata: " + line);
    meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto geti = [&](const std::string& k) { return std::stoi(meta.at(k)); };
  Checkpoint ckpt;
  ckpt.cfg.n_topics = geti("K");
  ckpt.cfg.vocab_size = geti("V");
  ckpt.cfg.embed_dim = geti("E");
  ckpt.cfg.topic_embed_dim = geti("E_z");
  ckpt.cfg.hidden_dim = geti("H");
  ckpt.cfg.readout_dim = geti("R");
  ckpt.cfg.enc_hidden_dim = geti("H_enc");
  ckpt.cfg.gamma_hidden_dim = geti("H_gamma");
  ckpt.cfg.decoder_cell = decoder_cell_from_name(meta.at("decoder_cell"));
  ckpt.init_scheme = meta.at("init");
  ckpt.epoch = geti("epoch");
  ckpt.seed = std::stoull(meta.at("seed"));
  ckpt.model = std::make_unique<ModelParams>(ckpt.cfg);
  ckpt.encoder = std::make_unique<EncoderParams>(ckpt.cfg);
  read_store(in, ckpt.model->store);
  read_store(in, ckpt.encoder->store);
  return ckpt;
}

}  // namespace sengen
