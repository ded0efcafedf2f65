#include "hqml/features.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "hqml/error.hpp"
#include "hqml/rng.hpp"

namespace hqml::features {

void FeatureMatrix::append_row(const double* data, int label, const std::string& category) {
  values.insert(values.end(), data, data + cols);
  labels.push_back(label);
  categories.push_back(category);
}

void FeatureMatrix::validate() const {
  if (values.size() != rows() * cols || categories.size() != rows()) {
    fail(ErrorKind::Input, "feature matrix shape is inconsistent");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (std::isnan(values[i])) {
      fail(ErrorKind::Input, "NaN feature in row " + std::to_string(i / cols));
    }
  }
  for (int l : labels) {
    if (l != 0 && l != 1) fail(ErrorKind::Label, "labels must be 0 or 1");
  }
}

namespace {

FeatureMatrix empty_like(const FeatureMatrix& x) {
  FeatureMatrix out;
  out.cols = x.cols;
  return out;
}

}  // namespace

// ---- t-SNE ------------------------------------------------------------------

std::vector<double> conditional_affinities(const std::vector<double>& sq_distances, std::size_t self,
                                           double perplexity) {
  constexpr double kTolerance = 1e-5;
  constexpr int kMaxSteps = 50;
  const std::size_t n = sq_distances.size();
  double d_min = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    if (j != self) d_min = std::min(d_min, sq_distances[j]);
  }
  const double target = std::log(perplexity);
  double beta = 1.0;
  double beta_lo = -std::numeric_limits<double>::infinity();
  double beta_hi = std::numeric_limits<double>::infinity();
  std::vector<double> p(n, 0.0);
  for (int step = 0; step < kMaxSteps; ++step) {
    double sum_p = 0.0, weighted = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == self) {
        p[j] = 0.0;
        continue;
      }
      // Shifting by the nearest distance keeps the largest term at exp(0).
      const double shifted = sq_distances[j] - d_min;
      p[j] = std::exp(-shifted * beta);
      sum_p += p[j];
      weighted += shifted * p[j];
    }
    const double entropy = std::log(sum_p) + beta * weighted / sum_p;
    const double diff = entropy - target;
    if (std::abs(diff) < kTolerance) break;
    if (diff > 0.0) {
      beta_lo = beta;
      beta = std::isinf(beta_hi) ? beta * 2.0 : (beta + beta_hi) / 2.0;
    } else {
      beta_hi = beta;
      beta = std::isinf(beta_lo) ? beta / 2.0 : (beta + beta_lo) / 2.0;
    }
  }
  double sum_p = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == self) continue;
    p[j] = std::exp(-(sq_distances[j] - d_min) * beta);
    sum_p += p[j];
  }
  for (auto& v : p) v /= sum_p;
  return p;
}

std::vector<double> joint_affinities(const FeatureMatrix& x, double perplexity) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols;
  std::vector<double> p(n * n, 0.0);
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double* xj = x.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = xi[k] - xj[k];
        s += diff * diff;
      }
      dist[j] = s;
    }
    const auto row = conditional_affinities(dist, i, perplexity);
    std::copy(row.begin(), row.end(), p.begin() + static_cast<std::ptrdiff_t>(i * n));
  }
  const double denom = 2.0 * static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = std::max((p[i * n + j] + p[j * n + i]) / denom, 1e-12);
      p[i * n + j] = v;
      p[j * n + i] = v;
    }
    p[i * n + i] = 0.0;
  }
  return p;
}

double kl_divergence(const std::vector<double>& joint_p, const std::vector<double>& embedding) {
  const std::size_t n = embedding.size() / 2;
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = embedding[2 * i] - embedding[2 * j];
      const double dy = embedding[2 * i + 1] - embedding[2 * j + 1];
      z += 2.0 / (1.0 + dx * dx + dy * dy);
    }
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = embedding[2 * i] - embedding[2 * j];
      const double dy = embedding[2 * i + 1] - embedding[2 * j + 1];
      const double q = std::max(1.0 / (1.0 + dx * dx + dy * dy) / z, 1e-12);
      const double pij = joint_p[i * n + j];
      kl += 2.0 * pij * std::log(pij / q);
    }
  }
  return kl;
}

TSNEResult tsne_reduce(const FeatureMatrix& x, const TSNEConfig& config) {
  x.validate();
  const std::size_t n = x.rows();
  if (n < 10) fail(ErrorKind::Size, "t-SNE needs at least 10 rows, got " + std::to_string(n));
  if (!(config.perplexity > 0.0) || config.perplexity >= static_cast<double>(n - 1) / 3.0) {
    fail(ErrorKind::Config, "perplexity " + std::to_string(config.perplexity) +
                                " infeasible for " + std::to_string(n) + " rows");
  }
  if (config.n_iter < config.exaggeration_iters || config.exaggeration_iters < 0) {
    fail(ErrorKind::Config, "n_iter must be at least exaggeration_iters");
  }
  if (!(config.learning_rate > 0.0)) fail(ErrorKind::Config, "t-SNE learning rate must be positive");

  const auto p = joint_affinities(x, config.perplexity);

  Rng rng(config.seed, Stream::Tsne);
  std::vector<double> y(2 * n);
  for (auto& v : y) v = 1e-4 * rng.normal();
  std::vector<double> update(2 * n, 0.0);
  std::vector<double> gains(2 * n, 1.0);
  std::vector<double> grad(2 * n);

  TSNEResult result;
  result.kl_initial = kl_divergence(p, y);
  for (int iter = 0; iter < config.n_iter; ++iter) {
    if (iter == config.exaggeration_iters) result.kl_after_exaggeration = kl_divergence(p, y);
    const double exaggeration = iter < config.exaggeration_iters ? config.early_exaggeration : 1.0;

    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double yi0 = y[2 * i], yi1 = y[2 * i + 1];
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dx = yi0 - y[2 * j], dy = yi1 - y[2 * j + 1];
        z += 1.0 / (1.0 + dx * dx + dy * dy);
      }
    }
    const double inv_z = 1.0 / (2.0 * z);

    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double yi0 = y[2 * i], yi1 = y[2 * i + 1];
      const double* prow = p.data() + i * n;
      double gx = 0.0, gy = 0.0;
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dx = yi0 - y[2 * j], dy = yi1 - y[2 * j + 1];
        const double q = 1.0 / (1.0 + dx * dx + dy * dy);
        const double m = (exaggeration * prow[j] - q * inv_z) * q;
        gx += m * dx;
        gy += m * dy;
        grad[2 * j] -= m * dx;
        grad[2 * j + 1] -= m * dy;
      }
      grad[2 * i] += gx;
      grad[2 * i + 1] += gy;
    }

    const double momentum = iter < config.momentum_switch_iter ? 0.5 : 0.8;
    for (std::size_t k = 0; k < 2 * n; ++k) {
      const double g = 4.0 * grad[k];
      const bool same_sign = (g > 0.0) == (update[k] > 0.0);
      gains[k] = same_sign ? std::max(gains[k] * 0.8, 0.01) : gains[k] + 0.2;
      update[k] = momentum * update[k] - config.learning_rate * gains[k] * g;
      y[k] += update[k];
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += y[2 * i];
      my += y[2 * i + 1];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[2 * i] -= mx;
      y[2 * i + 1] -= my;
    }
  }
  if (config.n_iter == config.exaggeration_iters) result.kl_after_exaggeration = kl_divergence(p, y);
  result.kl_final = kl_divergence(p, y);
  result.embedding = std::move(y);
  return result;
}

// ---- Normalisation ------------------------------------------------------------

std::vector<double> max_normalize(const std::vector<double>& values, std::size_t cols) {
  if (cols == 0 || values.size() % cols != 0) fail(ErrorKind::Shape, "ragged feature matrix");
  std::vector<double> out(values.size());
  for (std::size_t r = 0; r < values.size() / cols; ++r) {
    double m = 0.0;
    for (std::size_t c = 0; c < cols; ++c) m = std::max(m, std::abs(values[r * cols + c]));
    if (m == 0.0) fail(ErrorKind::Normalization, "row " + std::to_string(r) + " is all zeros");
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = values[r * cols + c] / m;
  }
  return out;
}

FeatureMatrix max_normalize(const FeatureMatrix& x) {
  FeatureMatrix out = x;
  out.values = max_normalize(x.values, x.cols);
  return out;
}

// ---- Balancing ------------------------------------------------------------------

FeatureMatrix balance_by_replication(const FeatureMatrix& x, std::vector<std::string>* warnings) {
  x.validate();
  const bool has0 = std::find(x.labels.begin(), x.labels.end(), 0) != x.labels.end();
  const bool has1 = std::find(x.labels.begin(), x.labels.end(), 1) != x.labels.end();
  if (!has0 || !has1) fail(ErrorKind::DegenerateData, "balancing needs both classes present");

  std::vector<std::string> order;
  std::map<std::string, std::array<std::vector<std::size_t>, 2>> members;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto [it, inserted] = members.try_emplace(x.categories[r]);
    if (inserted) order.push_back(x.categories[r]);
    it->second[static_cast<std::size_t>(x.labels[r])].push_back(r);
  }

  FeatureMatrix out = x;
  for (const auto& cat : order) {
    const auto& groups = members.at(cat);
    if (groups[0].empty() || groups[1].empty()) {
      if (warnings) warnings->push_back("category '" + cat + "' has a single class; left unbalanced");
      continue;
    }
    const std::size_t minority = groups[0].size() < groups[1].size() ? 0 : 1;
    const auto& small = groups[minority];
    const std::size_t deficit = groups[1 - minority].size() - small.size();
    for (std::size_t k = 0; k < deficit; ++k) {
      const std::size_t r = small[k % small.size()];
      out.append_row(x.row(r), x.labels[r], x.categories[r]);
    }
  }
  return out;
}

// ---- Splits -----------------------------------------------------------------------

Split stratified_split(const FeatureMatrix& x, SplitRatios ratios, std::uint64_t seed) {
  x.validate();
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    fail(ErrorKind::Config, "split ratios must be non-negative and sum to 1");
  }
  std::array<std::size_t, 2> class_count{0, 0};
  for (int l : x.labels) ++class_count[static_cast<std::size_t>(l)];
  std::array<std::size_t, 2> n_test{}, n_val{};
  for (std::size_t c = 0; c < 2; ++c) {
    const auto n = static_cast<double>(class_count[c]);
    n_test[c] = static_cast<std::size_t>(std::llround(n * ratios.test));
    n_val[c] = static_cast<std::size_t>(std::llround(n * ratios.val));
    if (n_test[c] + n_val[c] > class_count[c]) {
      fail(ErrorKind::Split, "class " + std::to_string(c) + " too small for the requested ratios");
    }
    if (class_count[c] == 0) continue;
    const std::size_t n_train = class_count[c] - n_test[c] - n_val[c];
    if ((ratios.test > 0 && n_test[c] == 0) || (ratios.val > 0 && n_val[c] == 0) ||
        (ratios.train > 0 && n_train == 0)) {
      fail(ErrorKind::Split, "class " + std::to_string(c) + " would be absent from a split");
    }
  }

  std::vector<std::size_t> perm(x.rows());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed, Stream::Split);
  rng.shuffle(perm.begin(), perm.end());

  Split s{empty_like(x), empty_like(x), empty_like(x)};
  std::array<std::size_t, 2> seen{0, 0};
  for (auto r : perm) {
    const auto c = static_cast<std::size_t>(x.labels[r]);
    const std::size_t k = seen[c]++;
    FeatureMatrix& dst = k < n_test[c] ? s.test : (k < n_test[c] + n_val[c] ? s.val : s.train);
    dst.append_row(x.row(r), x.labels[r], x.categories[r]);
  }
  return s;
}

Dataset to_dataset(const FeatureMatrix& x) {
  Dataset data;
  data.reserve(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    Sample s;
    s.features.assign(x.row(r), x.row(r) + x.cols);
    s.label = static_cast<std::size_t>(x.labels[r]);
    data.push_back(std::move(s));
  }
  return data;
}

FeatureMatrix with_embedding(const FeatureMatrix& x, const std::vector<double>& embedding) {
  if (embedding.size() != 2 * x.rows()) fail(ErrorKind::Shape, "embedding row count mismatch");
  FeatureMatrix out;
  out.cols = 2;
  out.values = embedding;
  out.labels = x.labels;
  out.categories = x.categories;
  return out;
}

// ---- CSV --------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const auto* begin = s.data();
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) {
    fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  return v;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

FeatureMatrix read_feature_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::Parse, "feature CSV is empty");
  const auto header = split_csv(line);
  std::size_t label_col = header.size(), category_col = header.size();
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "label") label_col = c;
    else if (header[c] == "category") category_col = c;
    else feature_cols.push_back(c);
  }
  if (label_col == header.size()) fail(ErrorKind::Parse, "feature CSV lacks a 'label' column");
  if (feature_cols.empty()) fail(ErrorKind::Parse, "feature CSV has no feature columns");

  FeatureMatrix x;
  x.cols = feature_cols.size();
  std::size_t line_no = 1;
  std::vector<double> row(x.cols);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected " +
                                 std::to_string(header.size()) + " cells, got " +
                                 std::to_string(cells.size()));
    }
    for (std::size_t k = 0; k < feature_cols.size(); ++k) row[k] = parse_double(cells[feature_cols[k]], line_no);
    const double label = parse_double(cells[label_col], line_no);
    if (label != 0.0 && label != 1.0) {
      fail(ErrorKind::Label, "line " + std::to_string(line_no) + ": label must be 0 or 1");
    }
    const std::string category = category_col < cells.size() ? cells[category_col] : "all";
    x.append_row(row.data(), static_cast<int>(label), category);
  }
  x.validate();
  return x;
}

FeatureMatrix read_feature_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open feature CSV '" + path + "'");
  return read_feature_csv(in);
}

void write_feature_csv(std::ostream& out, const FeatureMatrix& x) {
  for (std::size_t c = 0; c < x.cols; ++c) out << 'f' << (c + 1) << ',';
  out << "label,category\n";
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols; ++c) out << format_double(x.row(r)[c]) << ',';
    out << x.labels[r] << ',' << x.categories[r] << '\n';
  }
}

void write_feature_csv(const std::string& path, const FeatureMatrix& x) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
  write_feature_csv(out, x);
  if (!out) fail(ErrorKind::Io, "write to '" + path + "' failed");
}

void write_embedding_csv(const std::string& path, const FeatureMatrix& x2d) {
  if (x2d.cols != 2) fail(ErrorKind::Shape, "embedding CSV needs exactly two feature columns");
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
  out << "f1,f2,label\n";
  for (std::size_t r = 0; r < x2d.rows(); ++r) {
    out << format_double(x2d.row(r)[0]) << ',' << format_double(x2d.row(r)[1]) << ','
        << x2d.labels[r] << '\n';
  }
  if (!out) fail(ErrorKind::Io, "write to '" + path + "' failed");
}

// ---- Synthetic corpus ---------------------------------------------------------

FeatureMatrix generate_trojan_synth(const SynthParams& params) {
  if (params.dims < 2) fail(ErrorKind::Config, "synthetic features need at least two dimensions");
  if (params.categories == 0 || params.ti_total < params.categories) {
    fail(ErrorKind::Config, "need at least one TI row per category");
  }
  if (!(params.ratio >= 1.0)) fail(ErrorKind::Config, "TF:TI ratio must be at least 1");
  Rng rng(params.seed, Stream::Data);
  const std::size_t d = params.dims;

  // Shared class axis for the two-cluster layout.
  std::vector<double> axis(d);
  double norm = 0.0;
  for (auto& v : axis) {
    v = rng.normal();
    norm += v * v;
  }
  for (auto& v : axis) v /= std::sqrt(norm);

  FeatureMatrix x;
  x.cols = d;
  std::vector<double> row(d);
  for (std::size_t cat = 0; cat < params.categories; ++cat) {
    const std::size_t n_ti = params.ti_total / params.categories +
                             (cat < params.ti_total % params.categories ? 1 : 0);
    const auto n_tf = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(static_cast<double>(n_ti) / params.ratio)));
    std::vector<double> offset(d);
    for (auto& v : offset) v = params.category_spread * rng.normal() / std::sqrt(static_cast<double>(d));
    char name[32];
    std::snprintf(name, sizeof name, "bench%02zu", cat);

    auto emit = [&](int label) {
      for (std::size_t k = 0; k < d; ++k) row[k] = offset[k] + rng.normal();
      if (params.layout == Layout::TwoCluster) {
        const double sign = label == 1 ? 0.5 : -0.5;
        for (std::size_t k = 0; k < d; ++k) row[k] += sign * params.separation * axis[k];
      } else {
        // XOR: class 1 sits in quadrants (+,+)/(-,-), class 0 in (+,-)/(-,+).
        const bool first_positive = rng.uniform() < 0.5;
        const bool second_positive = label == 1 ? first_positive : !first_positive;
        row[0] += (first_positive ? 0.5 : -0.5) * params.separation;
        row[1] += (second_positive ? 0.5 : -0.5) * params.separation;
      }
      x.append_row(row.data(), label, name);
    };
    for (std::size_t k = 0; k < n_tf; ++k) emit(0);
    for (std::size_t k = 0; k < n_ti; ++k) emit(1);
  }
  return x;
}

}  // namespace hqml::features
