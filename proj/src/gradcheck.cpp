#include "sengen/gradcheck.hpp"

#include <cmath>
#include <random>

#include "sengen/objective.hpp"

namespace sengen {

GradCheckResult finite_difference_check(std::vector<ParamStore*> stores,
                                        const std::function<double()>& eval,
                                        double h) {
  GradCheckResult result;
  for (ParamStore* store : stores) {
    for (int i = 0; i < store->size(); ++i) {
      Param& p = (*store)[i];
      for (int j = 0; j < p.value.size(); ++j) {
        double saved = p.value[j];
        p.value[j] = saved + h;
        double fp = eval();
        p.value[j] = saved - h;
        double fm = eval();
        p.value[j] = saved;
        double fd = (fp - fm) / (2 * h);
        double g = p.grad[j];
        double denom = std::max(1e-8, std::max(std::fabs(fd), std::fabs(g)));
        double rel = std::fabs(fd - g) / denom;
        if (rel > result.max_rel_err) {
          result.max_rel_err = rel;
          result.worst_entry = p.name + "[" + std::to_string(j) + "]";
        }
      }
    }
  }
  return result;
}

namespace {

void fill_uniform(Tensor& t, std::mt19937_64& rng, double range = 2.0) {
  std::uniform_real_distribution<double> u(-range, range);
  for (double& v : t.data) v = u(rng);
}

void fill_store(ParamStore& store, std::mt19937_64& rng, double range) {
  std::uniform_real_distribution<double> u(-range, range);
  for (int i = 0; i < store.size(); ++i)
    for (double& v : store[i].value.data) v = u(rng);
}

// Primitive ops, each wrapped as a scalar loss over a tiny parameter set.
SuiteCheck check_op(const std::string& name, std::mt19937_64& rng,
                    const std::function<Var(Tape&, std::vector<Var>&)>& build,
                    const std::vector<Shape>& shapes, double range = 2.0) {
  ParamStore store;
  for (size_t i = 0; i < shapes.size(); ++i) store.add("p" + std::to_string(i), shapes[i]);
  for (int i = 0; i < store.size(); ++i) fill_uniform(store[i].value, rng, range);

  auto eval = [&] {
    Tape tape;
    std::vector<Var> leaves;
    for (int i = 0; i < store.size(); ++i)
      leaves.push_back(tape.leaf(&store[i].value, &store[i].grad));
    return tape.value(build(tape, leaves))[0];
  };
  store.zero_grads();
  {
    Tape tape;
    std::vector<Var> leaves;
    for (int i = 0; i < store.size(); ++i)
      leaves.push_back(tape.leaf(&store[i].value, &store[i].grad));
    tape.backward(build(tape, leaves));
  }
  GradCheckResult r = finite_difference_check({&store}, eval);
  return {name, r.max_rel_err, 1e-6};
}

SuiteCheck check_document_elbo(DecoderCell cell, std::mt19937_64& rng) {
  ModelConfig mc;
  mc.n_topics = 2;
  mc.vocab_size = 6;
  mc.embed_dim = 4;
  mc.topic_embed_dim = 4;
  mc.hidden_dim = 3;
  mc.readout_dim = 3;
  mc.enc_hidden_dim = 3;
  mc.gamma_hidden_dim = 3;
  mc.decoder_cell = cell;
  ModelParams model(mc);
  EncoderParams enc(mc);
  // Biases too: exercise every tensor, not just matrices.
  fill_store(model.store, rng, 0.5);
  fill_store(enc.store, rng, 0.5);

  Document doc;
  doc.sentences = {{2, 4, 3, kEosId}, {5, 2, kEosId}};
  std::vector<double> eps = {0.37, -0.81};
  VocabSupport full = VocabSupport::full_vocab(mc.vocab_size);

  auto eval = [&] { return document_elbo_value(model, enc, doc, eps, full).elbo; };
  model.store.zero_grads();
  enc.store.zero_grads();
  {
    Tape tape;
    ModelBinding mb = bind_model(tape, model);
    EncoderBinding eb = bind_encoder(tape, enc);
    Tensor eps_t({2}, eps);
    DocumentElboVars ev = document_elbo(tape, mb, eb, mc, doc, eps_t, full);
    tape.backward(ev.elbo);
  }
  GradCheckResult r = finite_difference_check({&model.store, &enc.store}, eval);
  std::string name = "document_elbo_" + decoder_cell_name(cell);
  return {name, r.max_rel_err, 1e-4};
}

}  // namespace

std::vector<SuiteCheck> run_gradient_suite(unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::vector<SuiteCheck> checks;

  checks.push_back(check_op(
      "affine", rng,
      [](Tape& t, std::vector<Var>& p) { return t.sum(t.affine(p[0], p[1], p[2])); },
      {{3, 3}, {3}, {3}}));
  checks.push_back(check_op(
      "tanh_elem", rng,
      [](Tape& t, std::vector<Var>& p) { return t.sum(t.tanh_elem(p[0])); }, {{5}}));
  checks.push_back(check_op(
      "sigmoid_elem", rng,
      [](Tape& t, std::vector<Var>& p) { return t.sum(t.sigmoid_elem(p[0])); }, {{5}}));
  checks.push_back(check_op(
      "exp_elem", rng,
      [](Tape& t, std::vector<Var>& p) { return t.sum(t.exp_elem(p[0])); }, {{5}}));
  checks.push_back(check_op(
      "hadamard", rng,
      [](Tape& t, std::vector<Var>& p) { return t.sum(t.hadamard(p[0], p[1])); },
      {{5}, {5}}));
  checks.push_back(check_op(
      "log_softmax", rng,
      [](Tape& t, std::vector<Var>& p) {
        return t.dot(t.log_softmax(p[0]), p[1]);
      },
      {{10}, {10}}));
  checks.push_back(check_op(
      "log_softmax_subset", rng,
      [](Tape& t, std::vector<Var>& p) {
        return t.dot(t.log_softmax_subset(p[0], {1, 3, 4, 7}), p[1]);
      },
      {{10}, {4}}));
  checks.push_back(check_op(
      "embedding_lookup", rng,
      [](Tape& t, std::vector<Var>& p) { return t.dot(t.row(p[0], 2), p[1]); },
      {{4, 3}, {3}}));
  checks.push_back(check_op(
      "gru_step", rng,
      [](Tape& t, std::vector<Var>& p) {
        GruVars g{p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7], p[8]};
        return t.sum(gru_step(t, g, p[9], p[10]));
      },
      {{3, 2}, {3, 3}, {3}, {3, 2}, {3, 3}, {3}, {3, 2}, {3, 3}, {3}, {3}, {2}}, 0.8));

  checks.push_back(check_document_elbo(DecoderCell::elman, rng));
  checks.push_back(check_document_elbo(DecoderCell::gru, rng));
  return checks;
}

}  // namespace sengen
