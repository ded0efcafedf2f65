#include "hqml/smiles.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>

#include "hqml/error.hpp"
#include "hqml/rng.hpp"

namespace hqml::smiles {

namespace {

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// "<RX_k>" -> k; nullopt if the token is not a reaction tag at all.
std::optional<int> parse_tag(std::string_view token) {
  if (token.rfind("<RX", 0) != 0) return std::nullopt;
  constexpr std::string_view prefix = "<RX_";
  if (token.size() < prefix.size() + 2 || token.substr(0, prefix.size()) != prefix ||
      token.back() != '>') {
    fail(ErrorKind::Parse, "malformed reaction tag '" + std::string(token) + "'");
  }
  const auto digits = token.substr(prefix.size(), token.size() - prefix.size() - 1);
  int value = 0;
  for (char ch : digits) {
    if (!std::isdigit(static_cast<unsigned char>(ch)) || digits.size() > 2) {
      fail(ErrorKind::Parse, "malformed reaction tag '" + std::string(token) + "'");
    }
    value = value * 10 + (ch - '0');
  }
  if (value < 1 || value > 10) {
    fail(ErrorKind::Parse, "reaction type " + std::to_string(value) + " outside 1-10");
  }
  return value;
}

ReactionRecord make_record(std::string_view input, std::string_view output, std::size_t line_no) {
  ReactionRecord r;
  r.raw_input = std::string(trim(input));
  r.raw_output = std::string(trim(output));
  Tokenized in;
  try {
    in = tokenize(r.raw_input);
  } catch (const Error& e) {
    fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!in.reaction_type) {
    fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": input lacks a <RX_k> tag");
  }
  r.reaction_type = *in.reaction_type;
  r.input_tokens = std::move(in.tokens);
  r.output_tokens = split_whitespace(r.raw_output);
  if (r.output_tokens.empty()) {
    fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": empty reactant side");
  }
  return r;
}

}  // namespace

Tokenized tokenize(std::string_view line) {
  auto tokens = split_whitespace(line);
  if (tokens.empty()) fail(ErrorKind::Parse, "empty SMILES line");
  Tokenized out;
  if (auto tag = parse_tag(tokens.front())) {
    out.reaction_type = tag;
    tokens.erase(tokens.begin());
  }
  if (tokens.empty()) fail(ErrorKind::Parse, "no tokens after the reaction tag");
  out.tokens = std::move(tokens);
  return out;
}

std::string compress(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& t : tokens) out += t;
  return out;
}

std::string_view to_string(ChainLabel label) noexcept {
  return label == ChainLabel::Acetic ? "acetic" : "acetone";
}

std::optional<ChainLabel> label_chain_compressed(std::string_view compressed) {
  if (compressed.find(kAceticChain) != std::string_view::npos) return ChainLabel::Acetic;
  if (compressed.find(kAcetoneChain) != std::string_view::npos) return ChainLabel::Acetone;
  return std::nullopt;
}

std::optional<ChainLabel> label_chain(std::span<const std::string> output_tokens) {
  return label_chain_compressed(compress(output_tokens));
}

std::vector<ReactionRecord> parse_corpus(std::istream& in) {
  std::vector<ReactionRecord> records;
  std::string line;
  std::size_t line_no = 0;
  std::optional<bool> tsv;
  std::optional<std::pair<std::string, std::size_t>> pending;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    if (!tsv) tsv = line.find('\t') != std::string::npos;
    if (*tsv) {
      const auto tab = line.find('\t');
      if (tab == std::string::npos) {
        fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected input<TAB>output");
      }
      records.push_back(make_record(std::string_view(line).substr(0, tab),
                                    std::string_view(line).substr(tab + 1), line_no));
    } else if (!pending) {
      pending.emplace(std::string(body), line_no);
    } else {
      records.push_back(make_record(pending->first, body, pending->second));
      pending.reset();
    }
  }
  if (pending) {
    fail(ErrorKind::Parse, "line " + std::to_string(pending->second) + ": input without output line");
  }
  return records;
}

std::vector<ReactionRecord> read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open corpus '" + path + "'");
  return parse_corpus(in);
}

Selection filter_single_reaction(std::span<const ReactionRecord> records, std::size_t subset_size,
                                 int reaction_type) {
  Selection sel;
  for (const auto& r : records) {
    if (sel.records.size() == subset_size) break;
    if (r.reaction_type != reaction_type) continue;
    ReactionRecord kept = r;
    kept.target = compress(r.output_tokens);
    sel.records.push_back(std::move(kept));
  }
  if (sel.records.size() < subset_size) {
    sel.warning = "only " + std::to_string(sel.records.size()) + " record(s) of reaction type " +
                  std::to_string(reaction_type) + " (wanted " + std::to_string(subset_size) + ")";
  }
  return sel;
}

Selection select_chain_subset(std::span<const ReactionRecord> records, std::size_t subset_size) {
  Selection sel;
  for (const auto& r : records) {
    if (sel.records.size() == subset_size) break;
    const auto label = label_chain(r.output_tokens);
    if (!label) continue;
    ReactionRecord kept = r;
    kept.target = std::string(to_string(*label));
    sel.records.push_back(std::move(kept));
  }
  if (sel.records.size() < subset_size) {
    sel.warning = "only " + std::to_string(sel.records.size()) +
                  " record(s) carry an acetic/acetone chain (wanted " + std::to_string(subset_size) + ")";
  }
  return sel;
}

std::size_t Vocab::add(const std::string& s) {
  auto [it, inserted] = index_.try_emplace(s, entries_.size());
  if (inserted) entries_.push_back(s);
  return it->second;
}

std::size_t Vocab::encode(const std::string& s) const {
  const auto it = index_.find(s);
  if (it == index_.end()) fail(ErrorKind::Vocab, "'" + s + "' is not in the vocabulary");
  return it->second;
}

const std::string& Vocab::decode(std::size_t index) const {
  if (index >= entries_.size()) {
    fail(ErrorKind::Vocab, "index " + std::to_string(index) + " outside vocabulary of " +
                               std::to_string(entries_.size()));
  }
  return entries_[index];
}

EncodedCorpus build_vocab_and_encode(std::span<const ReactionRecord> records) {
  EncodedCorpus enc;
  for (const auto& r : records) {
    if (r.target.empty()) fail(ErrorKind::Input, "record has no target; select a task subset first");
    enc.reactions.add(compress(r.input_tokens));
    Sample s;
    s.label = enc.reactants.add(r.target);
    for (const auto& t : r.input_tokens) s.tokens.push_back(enc.tokens.add(t));
    enc.samples.push_back(std::move(s));
  }
  return enc;
}

std::pair<Dataset, Dataset> train_validation_split(const Dataset& data, double train_ratio,
                                                   std::uint64_t seed) {
  if (!(train_ratio > 0.0 && train_ratio <= 1.0)) {
    fail(ErrorKind::Config, "train ratio must lie in (0, 1]");
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed, Stream::Split);
  rng.shuffle(order.begin(), order.end());
  // The small epsilon keeps 0.9 * 200 at 180 despite binary rounding.
  const auto n_train = static_cast<std::size_t>(train_ratio * static_cast<double>(data.size()) + 1e-9);
  Dataset train, val;
  for (std::size_t k = 0; k < order.size(); ++k) {
    (k < n_train ? train : val).push_back(data[order[k]]);
  }
  return {std::move(train), std::move(val)};
}

}  // namespace hqml::smiles
