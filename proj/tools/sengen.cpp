#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "sengen/checkpoint.hpp"
#include "sengen/corpus.hpp"
#include "sengen/generation.hpp"
#include "sengen/gradcheck.hpp"
#include "sengen/objective.hpp"
#include "sengen/oracle.hpp"
#include "sengen/trainer.hpp"

namespace fs = std::filesystem;
using namespace sengen;

namespace {

std::vector<RawDocument> load_raw_input(const std::string& input) {
  std::vector<RawDocument> docs;
  if (fs::is_directory(input)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(input))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      std::ifstream in(f);
      std::stringstream buf;
      buf << in.rdbuf();
      RawDocument rd;
      rd.id = f.filename().string();
      for (const auto& s : segment_sentences(buf.str())) {
        auto toks = tokenize(s);
        if (!toks.empty()) rd.sentences.push_back(std::move(toks));
      }
      docs.push_back(std::move(rd));
    }
  } else {
    std::ifstream in(input);
    if (!in) throw std::runtime_error("cannot read input: " + input);
    docs = read_raw_documents(in, "doc");
  }
  if (docs.empty()) throw std::runtime_error("no documents found in " + input);
  return docs;
}

void parse_split_ratio(const std::string& spec, int n, int& n_train, int& n_valid) {
  double a, b, c;
  char c1, c2;
  std::stringstream ss(spec);
  if (!(ss >> a >> c1 >> b >> c2 >> c) || c1 != ':' || c2 != ':' || a <= 0 || b < 0 || c < 0)
    throw std::invalid_argument("bad --split spec: " + spec + " (expected train:valid:test)");
  n_train = (int)std::lround(n * a / (a + b + c));
  n_valid = (int)std::lround(n * b / (a + b + c));
  n_train = std::max(1, std::min(n_train, n - 2));
  n_valid = std::max(1, std::min(n_valid, n - n_train - 1));
}

Corpus load_corpus_file(const std::string& path, const Vocabulary& vocab, Split split) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read corpus: " + path);
  return read_corpus(in, vocab, split);
}

Vocabulary load_vocab_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read vocabulary: " + path);
  return read_vocabulary(in);
}

void write_text(const std::string& path, const std::function<void(std::ostream&)>& fn) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  fn(out);
}

int cmd_preprocess(const std::string& input, const std::string& out_dir, int vocab_size,
                   const std::string& split_spec, int sentence_cap) {
  auto docs = load_raw_input(input);
  int n_train = 0, n_valid = 0;
  parse_split_ratio(split_spec, (int)docs.size(), n_train, n_valid);
  std::vector<RawDocument> train(docs.begin(), docs.begin() + n_train);
  std::vector<RawDocument> valid(docs.begin() + n_train, docs.begin() + n_train + n_valid);
  std::vector<RawDocument> test(docs.begin() + n_train + n_valid, docs.end());

  Vocabulary vocab = build_vocabulary(train, vocab_size);
  fs::create_directories(out_dir);
  write_text(out_dir + "/vocab.txt", [&](std::ostream& o) { write_vocabulary(o, vocab); });

  auto emit = [&](const std::vector<RawDocument>& d, Split s, const std::string& name) {
    Corpus c = encode_corpus(d, vocab, s, sentence_cap);
    write_text(out_dir + "/" + name, [&](std::ostream& o) { write_corpus(o, c); });
    return c;
  };
  Corpus tc = emit(train, Split::train, "train.txt");
  Corpus vc = emit(valid, Split::valid, "valid.txt");
  Corpus sc = emit(test, Split::test, "test.txt");

  auto report = [](const char* name, const Corpus& c) {
    CorpusStats st = corpus_stats(c);
    std::cout << name << ": documents=" << st.n_documents
              << " mean_sentences_per_doc=" << st.mean_sentences_per_doc
              << " mean_words_per_sentence=" << st.mean_words_per_sentence << "\n";
  };
  std::cout << "vocabulary: " << vocab.size() << " tokens\n";
  report("train", tc);
  report("valid", vc);
  report("test", sc);
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& corpus_dir,
              const std::string& out_dir) {
  TrainConfig config = load_train_config(config_path);
  Vocabulary vocab = load_vocab_file(corpus_dir + "/vocab.txt");
  Corpus train_c = load_corpus_file(corpus_dir + "/train.txt", vocab, Split::train);
  Corpus valid_c = load_corpus_file(corpus_dir + "/valid.txt", vocab, Split::valid);
  TrainResult r = train(train_c, valid_c, config, out_dir);
  std::cout << "best epoch " << r.best_epoch << " valid_obj " << std::setprecision(17)
            << r.best_valid_obj << "\n"
            << "checkpoint: " << r.best_checkpoint << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& corpus_dir,
             const std::string& split, int eps_samples, unsigned long long seed,
             int threads) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  Vocabulary vocab = load_vocab_file(corpus_dir + "/vocab.txt");
  if (vocab.size() != ckpt.cfg.vocab_size)
    throw std::runtime_error("vocabulary size does not match checkpoint");
  Corpus corpus = load_corpus_file(corpus_dir + "/" + split + ".txt", vocab, Split::test);
  write_eval_report(std::cout, *ckpt.model, *ckpt.encoder, corpus, eps_samples, seed, threads);
  return 0;
}

int cmd_generate(const std::string& ckpt_path, const std::string& vocab_path,
                 std::vector<int> topics, int beam, int samples, int max_len,
                 unsigned long long seed) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  Vocabulary vocab = load_vocab_file(vocab_path);
  if (vocab.size() != ckpt.cfg.vocab_size)
    throw std::runtime_error("vocabulary size does not match checkpoint");
  if (topics.empty())
    for (int k = 0; k < ckpt.cfg.n_topics; ++k) topics.push_back(k);
  for (int k : topics)
    if (k < 0 || k >= ckpt.cfg.n_topics)
      throw std::runtime_error("topic " + std::to_string(k) + " out of range");
  write_generation_report(std::cout, *ckpt.model, vocab, topics, beam, samples, max_len, seed);
  return 0;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir) {
  SyntheticSpec spec = load_synthetic_spec(spec_path);
  SyntheticCorpus sc = make_synthetic_corpus(spec);
  fs::create_directories(out_dir);
  write_text(out_dir + "/vocab.txt", [&](std::ostream& o) { write_vocabulary(o, sc.vocabulary); });
  write_text(out_dir + "/train.txt", [&](std::ostream& o) { write_corpus(o, sc.train); });
  write_text(out_dir + "/valid.txt", [&](std::ostream& o) { write_corpus(o, sc.valid); });
  write_text(out_dir + "/test.txt", [&](std::ostream& o) { write_corpus(o, sc.test); });
  write_text(out_dir + "/train.labels", [&](std::ostream& o) { write_labels(o, sc.train_labels); });
  write_text(out_dir + "/valid.labels", [&](std::ostream& o) { write_labels(o, sc.valid_labels); });
  write_text(out_dir + "/test.labels", [&](std::ostream& o) { write_labels(o, sc.test_labels); });
  std::cout << "wrote synthetic corpus to " << out_dir << " (|V|=" << sc.vocabulary.size()
            << ", train=" << sc.train.documents.size() << " docs)\n";
  return 0;
}

int cmd_gradcheck(unsigned long long seed) {
  auto checks = run_gradient_suite(seed);
  bool all_ok = true;
  double worst = 0;
  for (const auto& c : checks) {
    std::cout << (c.passed() ? "PASS" : "FAIL") << "\t" << c.name << "\tmax_rel_err="
              << c.max_rel_err << "\ttol=" << c.tolerance << "\n";
    all_ok = all_ok && c.passed();
    worst = std::max(worst, c.max_rel_err);
  }
  std::cout << "max relative error: " << worst << "\n";
  return all_ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SenGen: sentence-level neural variational topic model"};
  app.require_subcommand(1);

  std::string input, out_dir, config_path, corpus_dir, ckpt_path, vocab_path, spec_path;
  std::string split_spec = "8:1:1", eval_split = "test";
  int vocab_size = 60359, sentence_cap = 40;
  int eps_samples = 1, threads = 1, beam = 5, samples = 2, max_len = 30;
  unsigned long long seed = 1;
  std::vector<int> topics;

  auto* pre = app.add_subcommand("preprocess", "segment, tokenize and encode raw text");
  pre->add_option("--input", input, "document directory or %%%%-separated file")->required();
  pre->add_option("--out", out_dir, "output directory")->required();
  pre->add_option("--vocab-size", vocab_size, "maximum vocabulary size");
  pre->add_option("--split", split_spec, "train:valid:test ratio");
  pre->add_option("--sentence-cap", sentence_cap, "maximum sentence length");

  auto* tr = app.add_subcommand("train", "train a model");
  tr->add_option("--config", config_path, "key=value config file")->required();
  tr->add_option("--corpus", corpus_dir, "directory with vocab.txt/train.txt/valid.txt")->required();
  tr->add_option("--out", out_dir, "output directory")->required();

  auto* ev = app.add_subcommand("eval", "perplexity report on a corpus split");
  ev->add_option("--checkpoint", ckpt_path)->required();
  ev->add_option("--corpus", corpus_dir)->required();
  ev->add_option("--split", eval_split, "corpus split to evaluate");
  ev->add_option("--eps-samples", eps_samples, "noise draws per document");
  ev->add_option("--seed", seed);
  ev->add_option("--threads", threads, "evaluation parallelism cap");

  auto* gen = app.add_subcommand("generate", "per-topic beam search and samples");
  gen->add_option("--checkpoint", ckpt_path)->required();
  gen->add_option("--vocab", vocab_path, "vocabulary file for detokenization")->required();
  gen->add_option("--topics", topics, "topic ids (default: all)");
  gen->add_option("--beam", beam, "beam width");
  gen->add_option("--samples", samples, "stochastic samples per topic");
  gen->add_option("--max-len", max_len);
  gen->add_option("--seed", seed);

  auto* syn = app.add_subcommand("synth", "generate a synthetic corpus with known topics");
  syn->add_option("--spec", spec_path, "key=value synthetic spec")->required();
  syn->add_option("--out", out_dir)->required();

  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  gc->add_option("--seed", seed);

  try {
    app.parse(argc, argv);
    if (pre->parsed()) return cmd_preprocess(input, out_dir, vocab_size, split_spec, sentence_cap);
    if (tr->parsed()) return cmd_train(config_path, corpus_dir, out_dir);
    if (ev->parsed()) return cmd_eval(ckpt_path, corpus_dir, eval_split, eps_samples, seed, threads);
    if (gen->parsed()) return cmd_generate(ckpt_path, vocab_path, topics, beam, samples, max_len, seed);
    if (syn->parsed()) return cmd_synth(spec_path, out_dir);
    if (gc->parsed()) return cmd_gradcheck(seed);
    return 1;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);  // prints the message
    return code == 0 ? 0 : 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::domain_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
