#include <algorithm>
#include <fstream>
#include <sstream>
#include <set>

#include "hqml/error.hpp"
#include "hqml/rng.hpp"
#include "hqml/smiles.hpp"

namespace hqml::smiles {

namespace {

using Tokens = std::vector<std::string>;

void append(Tokens& dst, const Tokens& src) { dst.insert(dst.end(), src.begin(), src.end()); }

std::string join(const Tokens& t) {
  std::string out;
  for (const auto& s : t) {
    if (!out.empty()) out += ' ';
    out += s;
  }
  return out;
}

// Random molecule fragment sequence; `ring` tracks the next free ring digit.
Tokens random_molecule(Rng& rng, std::size_t min_parts, std::size_t max_parts) {
  static const Tokens atoms = {"C", "C", "C", "N", "O", "F", "S", "Cl", "Br"};
  static const std::vector<Tokens> rings = {
      {"c", "#", "c", "c", "c", "c", "c", "#"},
      {"c", "#", "c", "c", "n", "c", "c", "#"},
      {"C", "#", "C", "C", "C", "C", "C", "#"},
      {"C", "#", "C", "C", "N", "C", "C", "#"},
      {"c", "#", "c", "c", "s", "c", "#"},
  };
  int ring = 1;
  Tokens out;
  const std::size_t parts = min_parts + rng.below(max_parts - min_parts + 1);
  for (std::size_t p = 0; p < parts; ++p) {
    // A branch cannot open a molecule.
    const auto choice = rng.below(out.empty() ? 3 : 4);
    switch (choice) {
      case 0:
      case 1: out.push_back(atoms[rng.below(atoms.size())]); break;
      case 2: {
        if (ring > 9) {
          out.push_back("C");
          break;
        }
        for (const auto& t : rings[rng.below(rings.size())]) {
          out.push_back(t == "#" ? std::to_string(ring) : t);
        }
        ++ring;
        break;
      }
      default: append(out, {"(", atoms[rng.below(atoms.size())], ")"});
    }
  }
  return out;
}

Tokens split_tokens(const std::string& s) {
  Tokens out;
  std::istringstream in(s);
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

bool has_chain(const Tokens& t) { return label_chain(t).has_value(); }

std::string tag(int type) { return "<RX_" + std::to_string(type) + ">"; }

// Reaction-type specific leaving group (reactant side) and linker (product side).
Tokens leaving_group(int type) {
  static const std::vector<Tokens> groups = {{"Cl"}, {"Br"}, {"I"}, {"O"},
                                             {"B", "(", "O", ")", "O"}, {"N"},
                                             {"[N+]", "(", "=", "O", ")", "[O-]"},
                                             {"O", "S", "(", "=", "O", ")", "(", "=", "O", ")", "C"},
                                             {"C", "#", "N"}, {"[Mg]", "Br"}};
  return groups[static_cast<std::size_t>(type - 1)];
}

Tokens linker(int type) {
  static const std::vector<Tokens> links = {{"N"}, {"C"}, {"O"}, {"N", "C"}, {"c"},
                                            {"C", "N"}, {"N", "O"}, {"S"}, {"C", "C"}, {"O", "C"}};
  return links[static_cast<std::size_t>(type - 1)];
}

ToyRecord coupling_record(Rng& rng, int type) {
  const Tokens a = random_molecule(rng, 2, 5);
  const Tokens b = random_molecule(rng, 1, 4);
  Tokens product = a;
  append(product, linker(type));
  append(product, b);
  Tokens reactants = a;
  append(reactants, {"("});
  append(reactants, leaving_group(type));
  append(reactants, {")", "."});
  append(reactants, linker(type));
  append(reactants, b);
  return {tag(type) + " " + join(product), join(reactants)};
}

}  // namespace

std::vector<ToyRecord> generate_smiles_toy(const ToyCorpusParams& params) {
  Rng rng(params.seed, Stream::Data);
  std::vector<ToyRecord> out;
  std::set<std::string> type1_targets;

  if (params.include_examples && params.type1 > 0) {
    out.push_back({"<RX_1> F c 1 c c 2 c ( N C 3 C C C C C C 3 ) n c n c 2 c n 1",
                   "F c 1 c c 2 c ( Cl ) n c n c 2 c n 1 . N C 1 C C C C C C 1"});
    type1_targets.insert(compress(split_tokens(out.back().output)));
  }
  auto fresh = [&](int type) {
    for (;;) {
      auto r = coupling_record(rng, type);
      const auto out_tokens = split_tokens(r.output);
      if (has_chain(out_tokens)) continue;
      if (type == 1 && !type1_targets.insert(compress(out_tokens)).second) continue;
      return r;
    }
  };
  while (type1_targets.size() < params.type1) out.push_back(fresh(1));
  for (int type = 2; type <= 10; ++type) {
    for (std::size_t k = 0; k < params.other_per_type; ++k) out.push_back(fresh(type));
  }

  std::vector<int> chains;
  chains.insert(chains.end(), params.acetic, 1);
  chains.insert(chains.end(), params.acetone, 0);
  rng.shuffle(chains.begin(), chains.end());
  if (params.include_examples && !chains.empty()) {
    out.push_back({"<RX_6> C C ( C ) ( C ) O C ( = O ) N C C ( = O ) C C C ( = O ) O C C C C ( = O ) O",
                   "C C ( C ) ( C ) O C ( = O ) N C C ( = O ) C C C ( = O ) O C C C C ( = O ) O C c 1 c c c c c 1"});
    // The worked example is acetic; it replaces one generated acetic record.
    const auto it = std::find(chains.begin(), chains.end(), 1);
    if (it != chains.end()) chains.erase(it);
  }
  for (int acetic : chains) {
    for (;;) {
      const int type = 1 + static_cast<int>(rng.below(10));
      const Tokens a = random_molecule(rng, 1, 4);
      const Tokens b = random_molecule(rng, 1, 3);
      Tokens reactants = a;
      Tokens product = a;
      if (acetic) {
        append(reactants, {"C", "C", "(", "=", "O", ")", "O"});
        append(product, {"C", "C", "(", "=", "O", ")", "N"});
      } else {
        append(reactants, {"C", "C", "(", "=", "O", ")", "C"});
        append(product, {"C", "C", "(", "C", ")", "=", "O"});
      }
      append(reactants, {"."});
      append(reactants, b);
      append(product, b);
      const auto label = label_chain(reactants);
      if (!label || (*label == ChainLabel::Acetic) != (acetic == 1)) continue;
      out.push_back({tag(type) + " " + join(product), join(reactants)});
      break;
    }
  }
  return out;
}

void write_corpus_tsv(const std::string& path, const std::vector<ToyRecord>& records) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::Io, "cannot write corpus '" + path + "'");
  for (const auto& r : records) f << r.input << '\t' << r.output << '\n';
  if (!f) fail(ErrorKind::Io, "write to '" + path + "' failed");
}

}  // namespace hqml::smiles
