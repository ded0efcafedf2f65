#pragma once

// Lexical preprocessing of space-tokenized SMILES reaction corpora.
//
// A corpus sample is an input line "<RX_k> t1 t2 ..." (the product, prefixed
// by its reaction type) paired with an output line holding the reactants.
// Tokens are the corpus's own space-separated units; nothing here checks
// chemical validity.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hqml/model.hpp"

namespace hqml::smiles {

struct Tokenized {
  std::optional<int> reaction_type;
  std::vector<std::string> tokens;
};

/// Splits on whitespace and strips a leading <RX_k> tag (k in 1..10).
/// Parse error for a malformed tag or when no tokens remain.
Tokenized tokenize(std::string_view line);

/// Concatenation without separators.
std::string compress(std::span<const std::string> tokens);

enum class ChainLabel { Acetic, Acetone };

std::string_view to_string(ChainLabel label) noexcept;

inline constexpr std::string_view kAceticChain = "CC(=O)O";
inline constexpr std::string_view kAcetoneChain = "CC(=O)C";

/// Acetic acid wins whenever its pattern occurs; acetone only otherwise.
std::optional<ChainLabel> label_chain_compressed(std::string_view compressed);
std::optional<ChainLabel> label_chain(std::span<const std::string> output_tokens);

struct ReactionRecord {
  int reaction_type = 0;
  std::vector<std::string> input_tokens;
  std::vector<std::string> output_tokens;
  /// Class string: the compressed reactants (single-reaction task) or the
  /// chain label (chain task). Empty until a task assigns it.
  std::string target;
  std::string raw_input;
  std::string raw_output;
};

/// Reads TSV (input<TAB>output per line) or, when the first sample line has
/// no tab, alternating input/output lines. Blank lines and lines starting
/// with '#' are skipped. Every input must carry a reaction tag.
std::vector<ReactionRecord> parse_corpus(std::istream& in);
std::vector<ReactionRecord> read_corpus(const std::string& path);

struct Selection {
  std::vector<ReactionRecord> records;
  std::optional<std::string> warning;
};

/// Keeps records of `reaction_type` in file order, capped at `subset_size`.
/// Targets are set to the compressed reactant string.
Selection filter_single_reaction(std::span<const ReactionRecord> records,
                                 std::size_t subset_size = 9, int reaction_type = 1);

/// Keeps records whose reactants carry an acetic/acetone chain, in file order,
/// capped at `subset_size`. Targets are set to the chain label.
Selection select_chain_subset(std::span<const ReactionRecord> records,
                              std::size_t subset_size = 200);

/// Ordered list of unique strings; index = insertion position.
class Vocab {
 public:
  /// Returns the index of `s`, inserting it if new.
  std::size_t add(const std::string& s);
  /// Vocab error when absent.
  std::size_t encode(const std::string& s) const;
  const std::string& decode(std::size_t index) const;
  bool contains(const std::string& s) const { return index_.count(s) != 0; }
  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<std::string>& entries() const noexcept { return entries_; }

 private:
  std::vector<std::string> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct EncodedCorpus {
  Vocab reactions;  // compressed input strings
  Vocab reactants;  // target strings; index = class id
  Vocab tokens;     // token vocabulary for the embedding
  Dataset samples;  // tokens -> token ids, label -> reactants index
};

/// First-seen word encoding of inputs, targets and tokens.
EncodedCorpus build_vocab_and_encode(std::span<const ReactionRecord> records);

/// Seeded shuffle, then the first floor(ratio * n) samples train and the rest validate.
std::pair<Dataset, Dataset> train_validation_split(const Dataset& data, double train_ratio,
                                                   std::uint64_t seed);

// ---- Toy corpus ------------------------------------------------------------------

/// Counts for the synthetic reaction corpus. Molecules are grammar-plausible
/// token sequences (atoms, branches, numbered rings) with no chemical meaning.
struct ToyCorpusParams {
  /// Records of reaction type 1, each with a distinct reactant string.
  std::size_t type1 = 9;
  /// Records for each of the reaction types 2..10.
  std::size_t other_per_type = 3;
  /// Records whose reactants carry the acetic or the acetone chain.
  std::size_t acetic = 0;
  std::size_t acetone = 0;
  /// Prepend the worked examples used in the documentation.
  bool include_examples = true;
  std::uint64_t seed = 0;
};

struct ToyRecord {
  std::string input;   // "<RX_k> t1 t2 ..."
  std::string output;  // space-separated reactant tokens
};

/// Type-1/other records never contain a chain pattern; chain records are
/// interleaved in seeded random order after them.
std::vector<ToyRecord> generate_smiles_toy(const ToyCorpusParams& params);

/// input<TAB>output per line.
void write_corpus_tsv(const std::string& path, const std::vector<ToyRecord>& records);

}  // namespace hqml::smiles
