#include "hqml/baselines.hpp"

#include <algorithm>
#include <array>
#include <memory>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <string>

#include "hqml/error.hpp"
#include "hqml/nn.hpp"
#include "hqml/rng.hpp"
#include "hqml/train.hpp"

namespace hqml::nn {

namespace {

using Predictor = std::function<std::size_t(const std::vector<double>&)>;

std::size_t feature_count(const Dataset& data) {
  const std::size_t d = data.front().features.size();
  for (const auto& s : data) {
    if (s.features.size() != d) fail(ErrorKind::Shape, "baseline features have ragged rows");
    if (s.label > 1) fail(ErrorKind::Label, "baselines expect binary labels");
  }
  return d;
}

double accuracy(const Predictor& predict, const Dataset& data) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& s : data) correct += predict(s.features) == s.label ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

double dot(const std::vector<double>& w, const std::vector<double>& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * x[i];
  return s;
}

Predictor fit_perceptron(const Dataset& train, std::size_t d, std::uint64_t seed) {
  constexpr int kMaxEpochs = 100;
  std::vector<double> w(d, 0.0);
  double b = 0.0;
  Rng rng(seed, Stream::Baseline);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 0; epoch < kMaxEpochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    std::size_t mistakes = 0;
    for (auto idx : order) {
      const auto& s = train[idx];
      const double y = s.label == 1 ? 1.0 : -1.0;
      if (y * (dot(w, s.features) + b) <= 0.0) {
        for (std::size_t i = 0; i < d; ++i) w[i] += y * s.features[i];
        b += y;
        ++mistakes;
      }
    }
    if (mistakes == 0) break;
  }
  return [w, b](const std::vector<double>& x) -> std::size_t { return dot(w, x) + b > 0.0 ? 1 : 0; };
}

// Solves A x = rhs in place with partial pivoting; A is n x n row-major.
std::vector<double> solve(std::vector<double> a, std::vector<double> rhs) {
  const std::size_t n = rhs.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
    }
    if (std::abs(a[pivot * n + col]) < 1e-300) fail(ErrorKind::DegenerateData, "singular Hessian");
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
      std::swap(rhs[col], rhs[pivot]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / a[col * n + col];
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = rhs[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i * n + c] * x[c];
    x[i] = s / a[i * n + i];
  }
  return x;
}

// L2-regularised (strength 1, intercept unpenalised) logistic regression by Newton's method.
Predictor fit_logistic(const Dataset& train, std::size_t d) {
  const std::size_t p = d + 1;  // last coefficient is the intercept
  std::vector<double> w(p, 0.0);
  for (int iter = 0; iter < 100; ++iter) {
    std::vector<double> grad(p, 0.0);
    std::vector<double> hess(p * p, 0.0);
    for (std::size_t i = 0; i + 1 < p; ++i) {
      grad[i] = w[i];
      hess[i * p + i] = 1.0;
    }
    for (const auto& s : train) {
      double z = w[d];
      for (std::size_t i = 0; i < d; ++i) z += w[i] * s.features[i];
      const double mu = diff::sigmoid_value(z);
      const double r = mu - static_cast<double>(s.label);
      const double wt = mu * (1.0 - mu);
      for (std::size_t i = 0; i < p; ++i) {
        const double xi = i < d ? s.features[i] : 1.0;
        grad[i] += r * xi;
        for (std::size_t j = 0; j < p; ++j) {
          const double xj = j < d ? s.features[j] : 1.0;
          hess[i * p + j] += wt * xi * xj;
        }
      }
    }
    const auto step = solve(hess, grad);
    double step_norm = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      w[i] -= step[i];
      step_norm = std::max(step_norm, std::abs(step[i]));
    }
    if (step_norm < 1e-10) break;
  }
  return [w, d](const std::vector<double>& x) -> std::size_t {
    double z = w[d];
    for (std::size_t i = 0; i < d; ++i) z += w[i] * x[i];
    return z > 0.0 ? 1 : 0;
  };
}

Predictor fit_gaussian_nb(const Dataset& train, std::size_t d) {
  std::array<std::vector<double>, 2> mean{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  std::array<std::vector<double>, 2> var{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  std::array<double, 2> count{0.0, 0.0};
  for (const auto& s : train) {
    count[s.label] += 1.0;
    for (std::size_t i = 0; i < d; ++i) mean[s.label][i] += s.features[i];
  }
  for (int c = 0; c < 2; ++c) {
    for (auto& m : mean[c]) m /= count[c];
  }
  for (const auto& s : train) {
    for (std::size_t i = 0; i < d; ++i) {
      const double diff = s.features[i] - mean[s.label][i];
      var[s.label][i] += diff * diff;
    }
  }
  // Variance smoothing: a small fraction of the largest overall feature variance.
  double max_var = 0.0;
  {
    const double n = count[0] + count[1];
    for (std::size_t i = 0; i < d; ++i) {
      double mu = 0.0, sq = 0.0;
      for (const auto& s : train) mu += s.features[i];
      mu /= n;
      for (const auto& s : train) sq += (s.features[i] - mu) * (s.features[i] - mu);
      max_var = std::max(max_var, sq / n);
    }
  }
  const double eps = 1e-9 * max_var;
  for (int c = 0; c < 2; ++c) {
    for (auto& v : var[c]) v = v / count[c] + eps;
  }
  const double total = count[0] + count[1];
  std::array<double, 2> log_prior{std::log(count[0] / total), std::log(count[1] / total)};
  return [mean, var, log_prior, d](const std::vector<double>& x) -> std::size_t {
    std::array<double, 2> score = log_prior;
    for (int c = 0; c < 2; ++c) {
      for (std::size_t i = 0; i < d; ++i) {
        const double diff = x[i] - mean[c][i];
        score[c] -= 0.5 * std::log(2.0 * std::numbers::pi * var[c][i]) + diff * diff / (2.0 * var[c][i]);
      }
    }
    return score[1] > score[0] ? 1 : 0;
  };
}

}  // namespace

std::string_view to_string(BaselineKind kind) noexcept {
  switch (kind) {
    case BaselineKind::Perceptron: return "perceptron";
    case BaselineKind::LogisticRegression: return "logreg";
    case BaselineKind::GaussianNB: return "gnb";
    case BaselineKind::DenseNN: return "dense_nn";
  }
  return "?";
}

BaselineKind baseline_from_string(std::string_view name) {
  if (name == "perceptron") return BaselineKind::Perceptron;
  if (name == "logreg" || name == "logistic_regression") return BaselineKind::LogisticRegression;
  if (name == "gnb" || name == "gaussian_nb") return BaselineKind::GaussianNB;
  if (name == "dense_nn") return BaselineKind::DenseNN;
  fail(ErrorKind::Config, "unknown baseline '" + std::string(name) + "'");
}

AccuracyPair baseline_fit_predict(BaselineKind kind, const Dataset& train, const Dataset& test,
                                  std::uint64_t seed, const DenseBaselineOptions& dense) {
  const auto acc = baseline_fit_score(kind, train, {&train, &test}, seed, dense);
  return {acc[0], acc[1]};
}

std::vector<double> baseline_fit_score(BaselineKind kind, const Dataset& train,
                                       const std::vector<const Dataset*>& eval_sets,
                                       std::uint64_t seed, const DenseBaselineOptions& dense) {
  if (train.empty()) fail(ErrorKind::DegenerateData, "empty training set");
  const std::size_t d = feature_count(train);
  const bool has0 = std::any_of(train.begin(), train.end(), [](const Sample& s) { return s.label == 0; });
  const bool has1 = std::any_of(train.begin(), train.end(), [](const Sample& s) { return s.label == 1; });
  if (!has0 || !has1) fail(ErrorKind::DegenerateData, "training set holds a single class");

  Predictor predict;
  switch (kind) {
    case BaselineKind::Perceptron: predict = fit_perceptron(train, d, seed); break;
    case BaselineKind::LogisticRegression: predict = fit_logistic(train, d); break;
    case BaselineKind::GaussianNB: predict = fit_gaussian_nb(train, d); break;
    case BaselineKind::DenseNN: {
      auto model = std::make_shared<DenseNN>(std::vector<std::size_t>{d, 64, 256, 64, 2}, seed);
      TrainConfig cfg;
      cfg.epochs = dense.epochs;
      cfg.lr = dense.lr;
      cfg.batch_size = dense.batch_size;
      cfg.optimizer = OptimizerKind::Adam;
      cfg.seed = seed;
      const auto log = train_model(*model, train, nullptr, cfg);
      if (log.diverged) fail(ErrorKind::Divergence, log.failure);
      predict = [model](const std::vector<double>& x) {
        Sample s;
        s.features = x;
        return hqml::predict(*model, s);
      };
      break;
    }
  }
  std::vector<double> out;
  for (const auto* set : eval_sets) out.push_back(accuracy(predict, *set));
  return out;
}

}  // namespace hqml::nn
