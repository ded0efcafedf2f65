#pragma once

// The non-quantum classifiers compared against the QNN on 2-D Trojan features.

#include <cstdint>
#include <string_view>
#include <vector>

#include "hqml/model.hpp"

namespace hqml::nn {

enum class BaselineKind { Perceptron, LogisticRegression, GaussianNB, DenseNN };

std::string_view to_string(BaselineKind kind) noexcept;
/// Accepts "perceptron", "logreg"/"logistic_regression", "gnb"/"gaussian_nb", "dense_nn".
BaselineKind baseline_from_string(std::string_view name);

struct AccuracyPair {
  double train = 0.0;
  double test = 0.0;
};

struct DenseBaselineOptions {
  int epochs = 10;
  double lr = 0.01;
  std::size_t batch_size = 32;
};

/// Fits on `train` (binary labels, feature vectors) and scores both splits.
/// DegenerateData error when `train` holds a single class.
AccuracyPair baseline_fit_predict(BaselineKind kind, const Dataset& train, const Dataset& test,
                                  std::uint64_t seed, const DenseBaselineOptions& dense = {});

/// Fits once on `train` and returns the accuracy on each evaluation set.
std::vector<double> baseline_fit_score(BaselineKind kind, const Dataset& train,
                                       const std::vector<const Dataset*>& eval_sets,
                                       std::uint64_t seed, const DenseBaselineOptions& dense = {});

}  // namespace hqml::nn
