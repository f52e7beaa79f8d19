#include "sengen/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace sengen {

namespace {

const std::vector<std::string>& abbreviations() {
  static const std::vector<std::string> abbrevs = {
      "mr.", "mrs.", "dr.", "st.", "u.s.", "e.g.", "i.e.", "prof.", "vs.", "etc."};
  return abbrevs;
}

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

std::string lower(std::string s) {
  for (char& c : s) c = (char)std::tolower((unsigned char)c);
  return s;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

// The word ending at position i (inclusive), lowercased.
std::string word_ending_at(const std::string& text, size_t i) {
  size_t start = i;
  while (start > 0 && !std::isspace((unsigned char)text[start - 1])) --start;
  return lower(text.substr(start, i - start + 1));
}

}  // namespace

std::vector<std::string> segment_sentences(const std::string& text) {
  std::vector<std::string> out;
  size_t start = 0;
  for (size_t i = 0; i < text.size(); ++i) {
    if (!is_terminal(text[i])) continue;
    size_t j = i + 1;
    if (j < text.size() && !std::isspace((unsigned char)text[j])) continue;
    while (j < text.size() && std::isspace((unsigned char)text[j])) ++j;
    bool at_end = (j == text.size());
    if (!at_end && !std::isupper((unsigned char)text[j])) continue;
    if (text[i] == '.') {
      std::string w = word_ending_at(text, i);
      const auto& ab = abbreviations();
      if (std::find(ab.begin(), ab.end(), w) != ab.end()) continue;
    }
    std::string seg = trim(text.substr(start, i + 1 - start));
    if (!seg.empty()) out.push_back(seg);
    start = j;
  }
  std::string tail = trim(text.substr(start));
  if (!tail.empty()) out.push_back(tail);
  return out;
}

std::vector<std::string> tokenize(const std::string& sentence) {
  static const std::string punct = ".,!?;:\"()";
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (char c : sentence) {
    if (std::isspace((unsigned char)c)) {
      flush();
    } else if (punct.find(c) != std::string::npos) {
      flush();
      out.push_back(std::string(1, c));
    } else {
      cur.push_back((char)std::tolower((unsigned char)c));
    }
  }
  flush();
  return out;
}

Vocabulary build_vocabulary(const std::vector<RawDocument>& train_docs, int max_size) {
  if (max_size < 2) throw std::invalid_argument("build_vocabulary: max_size must be >= 2");
  if (train_docs.empty()) throw std::runtime_error("build_vocabulary: no training data");
  std::map<std::string, long long> freq;  // ordered map gives the lexicographic tie-break
  long long n_sentences = 0;
  for (const auto& d : train_docs)
    for (const auto& s : d.sentences) {
      if (s.empty()) continue;
      ++n_sentences;
      for (const auto& t : s) ++freq[t];
    }
  if (n_sentences == 0) throw std::runtime_error("build_vocabulary: no training data");

  std::vector<std::pair<std::string, long long>> by_count(freq.begin(), freq.end());
  std::stable_sort(by_count.begin(), by_count.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocabulary v;
  v.tokens = {kUnkTok, kEosTok};
  v.counts = {0, n_sentences};
  int keep = std::min((int)by_count.size(), max_size - 2);
  for (int i = 0; i < keep; ++i) {
    v.tokens.push_back(by_count[i].first);
    v.counts.push_back(by_count[i].second);
  }
  for (size_t i = keep; i < by_count.size(); ++i) v.counts[kUnkId] += by_count[i].second;
  for (int i = 0; i < v.size(); ++i) v.ids[v.tokens[i]] = i;

  long long total = 0;
  for (long long c : v.counts) total += c;
  v.unigram.resize(v.size());
  for (int i = 0; i < v.size(); ++i) v.unigram[i] = (double)v.counts[i] / (double)total;
  return v;
}

Corpus encode_corpus(const std::vector<RawDocument>& docs, const Vocabulary& vocab,
                     Split split, int sentence_cap) {
  Corpus c;
  c.split = split;
  c.vocabulary = &vocab;
  for (const auto& rd : docs) {
    Document d;
    d.id = rd.id;
    for (const auto& s : rd.sentences) {
      if (s.empty()) continue;
      std::vector<int> ids;
      for (const auto& t : s) ids.push_back(vocab.id_of(t));
      if ((int)ids.size() > sentence_cap - 1) ids.resize(sentence_cap - 1);
      ids.push_back(kEosId);
      d.sentences.push_back(std::move(ids));
    }
    if (d.sentences.empty()) {
      std::cerr << "warning: dropping empty document " << rd.id << "\n";
      continue;
    }
    c.documents.push_back(std::move(d));
  }
  return c;
}

std::vector<std::string> decode(const std::vector<int>& ids, const Vocabulary& vocab) {
  std::vector<std::string> out;
  for (int i : ids) out.push_back(vocab.tokens.at(i));
  return out;
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats st;
  st.n_documents = (int)corpus.documents.size();
  long long n_sent = 0, n_words = 0;
  for (const auto& d : corpus.documents) {
    n_sent += (long long)d.sentences.size();
    for (const auto& s : d.sentences) n_words += (long long)s.size();
  }
  if (st.n_documents) st.mean_sentences_per_doc = (double)n_sent / st.n_documents;
  if (n_sent) st.mean_words_per_sentence = (double)n_words / n_sent;
  return st;
}

std::vector<RawDocument> read_raw_documents(std::istream& in, const std::string& id_prefix) {
  std::vector<RawDocument> docs;
  std::string line, text;
  int idx = 0;
  auto finish = [&] {
    if (trim(text).empty()) {
      text.clear();
      return;
    }
    RawDocument rd;
    rd.id = id_prefix + std::to_string(idx++);
    for (const auto& s : segment_sentences(text)) {
      auto toks = tokenize(s);
      if (!toks.empty()) rd.sentences.push_back(std::move(toks));
    }
    docs.push_back(std::move(rd));
    text.clear();
  };
  while (std::getline(in, line)) {
    if (trim(line) == "%%%%") {
      finish();
    } else {
      text += line;
      text += "\n";
    }
  }
  finish();
  return docs;
}

void write_vocabulary(std::ostream& out, const Vocabulary& vocab) {
  for (int i = 0; i < vocab.size(); ++i)
    out << vocab.tokens[i] << "\t" << vocab.counts[i] << "\n";
}

Vocabulary read_vocabulary(std::istream& in) {
  Vocabulary v;
  std::string line;
  long long total = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos) throw std::runtime_error("vocabulary: malformed line: " + line);
    v.tokens.push_back(line.substr(0, tab));
    v.counts.push_back(std::stoll(line.substr(tab + 1)));
    total += v.counts.back();
  }
  if (v.size() < 2 || v.tokens[kUnkId] != kUnkTok || v.tokens[kEosId] != kEosTok)
    throw std::runtime_error("vocabulary: reserved tokens missing");
  for (int i = 0; i < v.size(); ++i) v.ids[v.tokens[i]] = i;
  v.unigram.resize(v.size());
  for (int i = 0; i < v.size(); ++i)
    v.unigram[i] = total ? (double)v.counts[i] / (double)total : 0.0;
  return v;
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& d : corpus.documents) {
    out << d.id;
    for (const auto& s : d.sentences) {
      out << "\t";
      for (size_t i = 0; i < s.size(); ++i) {
        if (i) out << " ";
        out << s[i];
      }
    }
    out << "\n";
  }
}

Corpus read_corpus(std::istream& in, const Vocabulary& vocab, Split split) {
  Corpus c;
  c.split = split;
  c.vocabulary = &vocab;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string field;
    Document d;
    bool first = true;
    while (std::getline(ls, field, '\t')) {
      if (first) {
        d.id = field;
        first = false;
        continue;
      }
      std::stringstream fs(field);
      std::vector<int> sent;
      int id;
      while (fs >> id) {
        if (id < 0 || id >= vocab.size())
          throw std::runtime_error("corpus: token id out of range in document " + d.id);
        sent.push_back(id);
      }
      if (sent.empty() || sent.back() != kEosId)
        throw std::runtime_error("corpus: sentence missing <eos> in document " + d.id);
      d.sentences.push_back(std::move(sent));
    }
    if (d.sentences.empty()) throw std::runtime_error("corpus: empty document record " + d.id);
    c.documents.push_back(std::move(d));
  }
  if (c.documents.empty()) throw std::runtime_error("corpus: no documents");
  return c;
}

}  // namespace sengen
