#pragma once

#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace sengen {

constexpr int kUnkId = 0;
constexpr int kEosId = 1;
inline const char* kUnkTok = "<unk>";
inline const char* kEosTok = "<eos>";

struct Vocabulary {
  std::vector<std::string> tokens;          // id -> token
  std::unordered_map<std::string, int> ids; // token -> id
  std::vector<long long> counts;            // training-corpus frequencies
  std::vector<double> unigram;              // counts normalized

  int size() const { return (int)tokens.size(); }
  int id_of(const std::string& tok) const {
    auto it = ids.find(tok);
    return it == ids.end() ? kUnkId : it->second;
  }
};

struct Document {
  std::string id;
  std::vector<std::vector<int>> sentences;  // token ids, each ends with <eos>

  int n_words() const {
    int n = 0;
    for (const auto& s : sentences) n += (int)s.size();
    return n;
  }
};

enum class Split { train, valid, test };

struct Corpus {
  std::vector<Document> documents;
  Split split = Split::train;
  const Vocabulary* vocabulary = nullptr;
};

struct CorpusStats {
  int n_documents = 0;
  double mean_sentences_per_doc = 0;
  double mean_words_per_sentence = 0;
};

// A raw document: tokenized sentences, before vocabulary encoding.
struct RawDocument {
  std::string id;
  std::vector<std::vector<std::string>> sentences;
};

// Rule-based splitter: break after . ! ? followed by whitespace and an
// uppercase letter (or end of text), unless the word ending at the
// punctuation is a known abbreviation.
std::vector<std::string> segment_sentences(const std::string& text);

// Lowercase, whitespace split, with .,!?;:"() detached as single tokens.
std::vector<std::string> tokenize(const std::string& sentence);

// Frequency-pruned vocabulary with <unk>/<eos> at fixed slots; ties broken
// lexicographically. <eos> counts one per training sentence, <unk> absorbs
// the counts of pruned tokens.
Vocabulary build_vocabulary(const std::vector<RawDocument>& train_docs, int max_size);

// OOV -> <unk>, append <eos>, truncate to cap, drop empty documents.
Corpus encode_corpus(const std::vector<RawDocument>& docs, const Vocabulary& vocab,
                     Split split, int sentence_cap = 40);

std::vector<std::string> decode(const std::vector<int>& ids, const Vocabulary& vocab);

CorpusStats corpus_stats(const Corpus& corpus);

// One document per %%%%-separated block; a block's first line of text is
// kept as part of the body, ids are positional.
std::vector<RawDocument> read_raw_documents(std::istream& in, const std::string& id_prefix);

void write_vocabulary(std::ostream& out, const Vocabulary& vocab);
Vocabulary read_vocabulary(std::istream& in);

// doc_id<TAB>sentence<TAB>sentence..., token ids space-separated
void write_corpus(std::ostream& out, const Corpus& corpus);
Corpus read_corpus(std::istream& in, const Vocabulary& vocab, Split split);

}  // namespace sengen
