#include <doctest.h>

#include <cmath>
#include <random>

#include "sengen/gradcheck.hpp"
#include "sengen/objective.hpp"
#include "sengen/oracle.hpp"

using namespace sengen;

namespace {

ModelConfig tiny_config(int K, int V) {
  ModelConfig mc;
  mc.n_topics = K;
  mc.vocab_size = V;
  mc.embed_dim = 3;
  mc.topic_embed_dim = 3;
  mc.hidden_dim = 3;
  mc.readout_dim = 2;
  mc.enc_hidden_dim = 3;
  mc.gamma_hidden_dim = 3;
  return mc;
}

}  // namespace

TEST_CASE("kl_gaussian closed-form cases") {
  CHECK(kl_gaussian({0, 0}, {1, 1}) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(kl_gaussian({1, 0}, {1, 1}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(kl_gaussian({0.0}, {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(kl_gaussian({0.0}, {-1.0}), std::invalid_argument);
}

TEST_CASE("kl_gaussian nonnegative, zero iff standard normal") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2), s(0.1, 3.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> mu(4), sigma(4);
    for (int k = 0; k < 4; ++k) {
      mu[k] = u(rng);
      sigma[k] = s(rng);
    }
    double kl = kl_gaussian(mu, sigma);
    CHECK(kl >= -1e-12);
    bool standard = true;
    for (int k = 0; k < 4; ++k)
      if (std::fabs(mu[k]) > 1e-9 || std::fabs(sigma[k] - 1) > 1e-9) standard = false;
    if (kl < 1e-9) {
      // equality direction: kl ~ 0 only very near the standard normal
      for (int k = 0; k < 4; ++k) {
        CHECK(std::fabs(mu[k]) < 1e-3);
        CHECK(std::fabs(sigma[k] - 1) < 1e-3);
      }
    }
    if (standard) CHECK(kl < 1e-9);
  }
}

TEST_CASE("kl_gaussian agrees with a Monte Carlo estimate") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> um(-1.5, 1.5), us(0.3, 2.0);
  std::normal_distribution<double> n01(0, 1);
  const int n = 200000;
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<double> mu(4), sigma(4);
    for (int k = 0; k < 4; ++k) {
      mu[k] = um(rng);
      sigma[k] = us(rng);
    }
    double analytic = kl_gaussian(mu, sigma);
    // E_q[log q - log p] over draws x = mu + sigma*eps
    double mean = 0, m2 = 0;
    for (int i = 1; i <= n; ++i) {
      double v = 0;
      for (int k = 0; k < 4; ++k) {
        double x = mu[k] + sigma[k] * n01(rng);
        double lq = -0.5 * std::log(2 * M_PI) - std::log(sigma[k]) -
                    0.5 * (x - mu[k]) * (x - mu[k]) / (sigma[k] * sigma[k]);
        double lp = -0.5 * std::log(2 * M_PI) - 0.5 * x * x;
        v += lq - lp;
      }
      double d = v - mean;
      mean += d / i;
      m2 += d * (v - mean);
    }
    double se = std::sqrt(m2 / (n - 1) / n);
    INFO("analytic=", analytic, " mc=", mean, " se=", se);
    CHECK(std::fabs(analytic - mean) < 3 * se);
  }
}

TEST_CASE("expected_log_prior") {
  double logK3 = std::log(1.0 / 3);
  CHECK(expected_log_prior({1, 0, 0}, {0, 0, 0}) == doctest::Approx(logK3));
  CHECK(expected_log_prior({1.0 / 3, 1.0 / 3, 1.0 / 3}, {0, 0, 0}) == doctest::Approx(logK3));
  // direct-sum oracle on a random case
  std::vector<double> q = {0.2, 0.5, 0.3}, theta = {0.4, -1.0, 2.2};
  std::vector<double> sm = softmax(theta);
  double want = 0;
  for (int k = 0; k < 3; ++k) want += q[k] * std::log(sm[k]);
  CHECK(expected_log_prior(q, theta) == doctest::Approx(want).epsilon(1e-12));
  CHECK(expected_log_prior(q, theta) <= 0.0);
}

TEST_CASE("entropy") {
  CHECK(entropy({1.0, 0.0, 0.0}) == doctest::Approx(0.0));
  CHECK(entropy({0.25, 0.25, 0.25, 0.25}) == doctest::Approx(std::log(4.0)));
  CHECK(entropy({0.5, 0.5, 0.0, 0.0}) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("expected_reconstruction") {
  ModelConfig mc = tiny_config(2, 5);
  ModelParams params(mc);
  VocabSupport full = VocabSupport::full_vocab(5);
  std::vector<int> sent = {2, 4, kEosId};

  SUBCASE("uniform decoder gives L log(1/V) for any q") {
    double want = 3 * std::log(1.0 / 5);
    CHECK(expected_reconstruction_value(params, {1, 0}, sent, full) == doctest::Approx(want));
    CHECK(expected_reconstruction_value(params, {0.4, 0.6}, sent, full) == doctest::Approx(want));
  }
  SUBCASE("one-hot q selects a single topic; random q is the direct sum") {
    params.init(7);
    double ll0 = sentence_log_likelihood_value(params, sent, 0, full);
    double ll1 = sentence_log_likelihood_value(params, sent, 1, full);
    CHECK(expected_reconstruction_value(params, {1, 0}, sent, full) == doctest::Approx(ll0));
    CHECK(expected_reconstruction_value(params, {0.3, 0.7}, sent, full) ==
          doctest::Approx(0.3 * ll0 + 0.7 * ll1).epsilon(1e-12));
  }
}

TEST_CASE("document_elbo breakdown recombines exactly") {
  ModelConfig mc = tiny_config(2, 6);
  ModelParams model(mc);
  EncoderParams enc(mc);
  model.init(9);
  enc.init(10);
  Document doc;
  doc.id = "d";
  doc.sentences = {{2, 4, kEosId}, {5, kEosId}};
  VocabSupport full = VocabSupport::full_vocab(6);
  ElboBreakdown b = document_elbo_value(model, enc, doc, {0.2, -0.7}, full);
  CHECK(b.elbo == doctest::Approx(-b.kl + b.expected_log_prior + b.entropy +
                                  b.expected_reconstruction)
                      .epsilon(1e-12));
  CHECK(b.kl >= 0.0);
  CHECK(b.entropy >= 0.0);
  CHECK(b.entropy <= 2 * std::log(2.0) + 1e-12);
  CHECK(b.expected_reconstruction <= 0.0);
}

TEST_CASE("single-sentence one-hot toy decomposition") {
  // zero encoder: mu=0 sigma=1 (kl=0); uniform q so entropy = log K and the
  // prior term is the q-weighted log-softmax of theta_hat = eps
  ModelConfig mc = tiny_config(2, 6);
  ModelParams model(mc);
  EncoderParams enc(mc);
  model.init(13);
  Document doc;
  doc.sentences = {{3, kEosId}};
  VocabSupport full = VocabSupport::full_vocab(6);
  std::vector<double> eps = {0.9, -0.4};
  ElboBreakdown b = document_elbo_value(model, enc, doc, eps, full);
  CHECK(b.kl == doctest::Approx(0.0));
  CHECK(b.entropy == doctest::Approx(std::log(2.0)));
  std::vector<double> sm = softmax(eps);
  double want_prior = 0.5 * std::log(sm[0]) + 0.5 * std::log(sm[1]);
  CHECK(b.expected_log_prior == doctest::Approx(want_prior));
  double ll0 = sentence_log_likelihood_value(model, doc.sentences[0], 0, full);
  double ll1 = sentence_log_likelihood_value(model, doc.sentences[0], 1, full);
  CHECK(b.expected_reconstruction == doctest::Approx(0.5 * ll0 + 0.5 * ll1));
}

TEST_CASE("document_elbo gradients match finite differences on the toy instance") {
  ModelConfig mc = tiny_config(2, 6);
  ModelParams model(mc);
  EncoderParams enc(mc);
  model.init(15, 0.5);
  enc.init(16, 0.5);
  Document doc;
  doc.sentences = {{2, 4, 3, kEosId}, {5, 2, kEosId}};
  std::vector<double> eps = {0.37, -0.81};
  VocabSupport full = VocabSupport::full_vocab(6);

  auto eval = [&] { return document_elbo_value(model, enc, doc, eps, full).elbo; };
  model.store.zero_grads();
  enc.store.zero_grads();
  {
    Tape tape;
    ModelBinding mb = bind_model(tape, model);
    EncoderBinding eb = bind_encoder(tape, enc);
    Tensor eps_t({2}, eps);
    tape.backward(document_elbo(tape, mb, eb, mc, doc, eps_t, full).elbo);
  }
  GradCheckResult r = finite_difference_check({&model.store, &enc.store}, eval);
  INFO(r.worst_entry);
  CHECK(r.max_rel_err < 1e-4);
}

TEST_CASE("mean ELBO over eps draws stays below the oracle log-likelihood") {
  ModelConfig mc = tiny_config(2, 6);
  ModelParams model(mc);
  EncoderParams enc(mc);
  model.init(17, 0.5);
  enc.init(18, 0.5);
  Document doc;
  doc.sentences = {{2, 4, kEosId}, {5, 3, kEosId}};
  VocabSupport full = VocabSupport::full_vocab(6);

  std::mt19937_64 rng(19);
  std::normal_distribution<double> n01(0, 1);
  const int n_eps = 200;
  double mean = 0, m2 = 0;
  for (int i = 1; i <= n_eps; ++i) {
    std::vector<double> eps = {n01(rng), n01(rng)};
    double v = document_elbo_value(model, enc, doc, eps, full).elbo;
    double d = v - mean;
    mean += d / i;
    m2 += d * (v - mean);
  }
  double se_elbo = std::sqrt(m2 / (n_eps - 1) / n_eps);

  std::mt19937_64 orng(21);
  LogLikelihoodEstimate est = oracle_log_likelihood(model, doc, 100000, orng);
  double combined = 3 * std::sqrt(se_elbo * se_elbo +
                                  est.standard_error * est.standard_error);
  INFO("mean elbo=", mean, " oracle=", est.estimate, " tol=", combined);
  CHECK(mean <= est.estimate + combined);
}

TEST_CASE("perplexity of a uniform decoder with K=1 equals |V|") {
  ModelConfig mc = tiny_config(1, 6);
  ModelParams model(mc);
  EncoderParams enc(mc);
  Corpus corpus;
  Document d;
  d.id = "d0";
  d.sentences = {{2, 3, kEosId}, {4, kEosId}};
  corpus.documents.push_back(d);
  double ppl = perplexity(model, enc, corpus, 1, 7);
  CHECK(ppl == doctest::Approx(6.0).epsilon(1e-9));
}

TEST_CASE("perplexity is invariant to document duplication and order") {
  ModelConfig mc = tiny_config(2, 6);
  ModelParams model(mc);
  EncoderParams enc(mc);
  model.init(23);
  enc.init(24);
  Document a, b;
  a.id = "a";
  a.sentences = {{2, 4, kEosId}};
  b.id = "b";
  b.sentences = {{5, kEosId}, {3, 2, kEosId}};

  // eps streams must follow the document, not its position: evaluate with
  // eps fixed at zero samples via n_eps=1... instead compare doubled corpus
  Corpus one, doubled;
  one.documents = {a, b};
  doubled.documents = {a, b, a, b};
  // per-document seeds depend on the index, so use many eps samples and a
  // loose tolerance on the sampled bound
  double p1 = perplexity(model, enc, one, 64, 31);
  double p2 = perplexity(model, enc, doubled, 64, 33);
  CHECK(p1 == doctest::Approx(p2).epsilon(0.05));
}

TEST_CASE("parallel perplexity matches serial") {
  ModelConfig mc = tiny_config(2, 6);
  ModelParams model(mc);
  EncoderParams enc(mc);
  model.init(25);
  enc.init(26);
  Corpus corpus;
  for (int i = 0; i < 6; ++i) {
    Document d;
    d.id = "d" + std::to_string(i);
    d.sentences = {{2, (i % 4) + 2, kEosId}};
    corpus.documents.push_back(d);
  }
  double serial = perplexity(model, enc, corpus, 2, 41, 1);
  double parallel = perplexity(model, enc, corpus, 2, 41, 3);
  CHECK(serial == doctest::Approx(parallel).epsilon(1e-15));
}
