#include <cmath>

#include "psychoforge/error.hpp"
#include "psychoforge/metrics.hpp"

namespace psychoforge::metrics {
namespace {

std::vector<double> proportions(const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) fail(ErrorCode::InvalidArgument, "category weight must be finite and >= 0");
    total += w;
  }
  if (total <= 0.0) fail(ErrorCode::AllZeroCounts, "all category counts are zero");
  std::vector<double> p;
  for (double w : weights) {
    if (w > 0.0) p.push_back(w / total);
  }
  return p;
}

std::vector<double> as_weights(const CategoricalCounts& counts) {
  std::vector<double> w;
  w.reserve(counts.counts.size());
  for (const auto& [_, c] : counts.counts) w.push_back(static_cast<double>(c));
  return w;
}

}  // namespace

void EmbeddingSet::check() const {
  const std::size_t d = dimension();
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != d) {
      fail(ErrorCode::DimensionMismatch, "embedding " + std::to_string(i) + " has dimension " +
                                             std::to_string(vectors[i].size()) + ", expected " + std::to_string(d));
    }
  }
  if (!vectors.empty() && d == 0) fail(ErrorCode::DimensionMismatch, "embeddings have dimension 0");
}

double avg_cosine_distance(const EmbeddingSet& embs) {
  if (embs.vectors.size() < 2) fail(ErrorCode::TooFewVectors, "avg_cosine_distance: need at least 2 vectors");
  embs.check();
  const std::size_t n = embs.vectors.size();
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (double x : embs.vectors[i]) s += x * x;
    norms[i] = std::sqrt(s);
    if (norms[i] == 0.0) fail(ErrorCode::ZeroVector, "avg_cosine_distance: vector " + std::to_string(i) + " is zero");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double dot = 0.0;
      const auto& a = embs.vectors[i];
      const auto& b = embs.vectors[j];
      for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
      double cos = dot / (norms[i] * norms[j]);
      cos = std::fmax(-1.0, std::fmin(1.0, cos));
      acc += 1.0 - cos;
    }
  }
  return acc / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

std::size_t CategoricalCounts::total() const {
  std::size_t t = 0;
  for (const auto& [_, c] : counts) t += c;
  return t;
}

CategoricalCounts CategoricalCounts::from_labels(const std::vector<std::string>& labels) {
  CategoricalCounts c;
  for (const auto& l : labels) ++c.counts[l];
  return c;
}

double shannon_from_proportions(const std::vector<double>& weights) {
  double h = 0.0;
  for (double p : proportions(weights)) h -= p * std::log(p);
  return h;
}

double simpson_sum_from_proportions(const std::vector<double>& weights) {
  double s = 0.0;
  for (double p : proportions(weights)) s += p * p;
  return s;
}

double shannon_index(const CategoricalCounts& counts) { return shannon_from_proportions(as_weights(counts)); }

SimpsonIndices simpson_indices(const CategoricalCounts& counts) {
  const double s = simpson_sum_from_proportions(as_weights(counts));
  return {1.0 - s, 1.0 / s};
}

}  // namespace psychoforge::metrics
