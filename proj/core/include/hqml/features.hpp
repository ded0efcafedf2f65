#pragma once

// Trojan feature pipeline: replication balancing, exact t-SNE, row max-abs
// normalisation and stratified splits, plus the feature CSV formats.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hqml/model.hpp"

namespace hqml::features {

/// Row-major n x d matrix with binary labels (0 = Trojan-free, 1 = Trojan-infected)
/// and a provenance category per row.
struct FeatureMatrix {
  std::size_t cols = 0;
  std::vector<double> values;
  std::vector<int> labels;
  std::vector<std::string> categories;

  std::size_t rows() const noexcept { return labels.size(); }
  const double* row(std::size_t r) const { return values.data() + r * cols; }
  void append_row(const double* data, int label, const std::string& category);
  /// Throws Input when the shapes disagree or a value is NaN.
  void validate() const;
};

// ---- t-SNE ------------------------------------------------------------------

struct TSNEConfig {
  double perplexity = 30.0;
  double learning_rate = 200.0;
  int n_iter = 1000;
  double early_exaggeration = 12.0;
  int exaggeration_iters = 250;
  /// Momentum switches from 0.5 to 0.8 at this iteration.
  int momentum_switch_iter = 250;
  std::uint64_t seed = 0;
};

struct TSNEResult {
  std::vector<double> embedding;  // n x 2
  /// KL(P || Q) of the initial layout, at the end of early exaggeration and at the end.
  double kl_initial = 0.0;
  double kl_after_exaggeration = 0.0;
  double kl_final = 0.0;
};

/// Conditional affinities for one row of squared distances, bandwidth chosen by
/// bisection so the row entropy (nats) matches log(perplexity) within 1e-5.
/// `self` is excluded. Returns the probabilities (self entry 0).
std::vector<double> conditional_affinities(const std::vector<double>& sq_distances, std::size_t self,
                                           double perplexity);

/// Exact O(n^2) t-SNE to two dimensions. Size error for n < 10; Config error
/// when perplexity >= (n - 1) / 3 or n_iter < exaggeration_iters.
TSNEResult tsne_reduce(const FeatureMatrix& x, const TSNEConfig& config);

/// KL(P || Q) for a symmetric joint P (n x n) and a 2-D embedding.
double kl_divergence(const std::vector<double>& joint_p, const std::vector<double>& embedding);

/// Symmetrised joint affinities used by tsne_reduce.
std::vector<double> joint_affinities(const FeatureMatrix& x, double perplexity);

// ---- Normalisation, balancing, splits ----------------------------------------

/// Divides every row by its largest absolute entry. Normalization error naming
/// the row when a row is all zeros.
std::vector<double> max_normalize(const std::vector<double>& values, std::size_t cols);
FeatureMatrix max_normalize(const FeatureMatrix& x);

/// Within each category, repeats minority-class rows cyclically until the two
/// class counts match. Originals come first, then replicas grouped by category
/// (categories in first-seen order). Single-class categories pass through and
/// add a warning.
FeatureMatrix balance_by_replication(const FeatureMatrix& x, std::vector<std::string>* warnings = nullptr);

struct SplitRatios {
  double train = 0.81;
  double val = 0.09;
  double test = 0.10;
};

struct Split {
  FeatureMatrix train, val, test;
};

/// Seeded per-class shuffle; each class contributes round(n_c * test) test rows,
/// round(n_c * val) validation rows and the rest to train. Split error when a
/// non-zero ratio leaves a class absent from its split.
Split stratified_split(const FeatureMatrix& x, SplitRatios ratios, std::uint64_t seed);

/// Features -> Sample.features, label -> Sample.label.
Dataset to_dataset(const FeatureMatrix& x);

/// Replaces the feature columns with a 2-D embedding, keeping labels and categories.
FeatureMatrix with_embedding(const FeatureMatrix& x, const std::vector<double>& embedding);

// ---- CSV --------------------------------------------------------------------

/// Header f1..fd,label,category. Io / Parse errors on failure.
FeatureMatrix read_feature_csv(std::istream& in);
FeatureMatrix read_feature_csv(const std::string& path);
void write_feature_csv(std::ostream& out, const FeatureMatrix& x);
void write_feature_csv(const std::string& path, const FeatureMatrix& x);

/// Header f1,f2,label.
void write_embedding_csv(const std::string& path, const FeatureMatrix& x2d);

// ---- Synthetic corpus -----------------------------------------------------------

enum class Layout { TwoCluster, Xor };

struct SynthParams {
  Layout layout = Layout::TwoCluster;
  std::size_t dims = 50;
  std::size_t categories = 10;
  /// Trojan-infected rows across all categories.
  std::size_t ti_total = 1513;
  /// TF:TI = 1:ratio within each category (at least one TF row per category).
  double ratio = 40.0;
  /// Distance between class centres, in units of the per-feature noise.
  double separation = 8.0;
  /// Spread of per-category offsets around the class centres.
  double category_spread = 1.0;
  std::uint64_t seed = 0;
};

FeatureMatrix generate_trojan_synth(const SynthParams& params);

}  // namespace hqml::features
