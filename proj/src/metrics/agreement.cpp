#include <map>
#include <set>

#include "psychoforge/error.hpp"
#include "psychoforge/metrics.hpp"

namespace psychoforge::metrics {
namespace {

std::map<std::string, std::string> index_labels(const RaterLabels& r, const char* who) {
  std::map<std::string, std::string> m;
  for (const auto& [id, label] : r.items) {
    if (!m.emplace(id, label).second) {
      fail(ErrorCode::MismatchedItems, std::string("rater ") + who + " lists item '" + id + "' twice");
    }
  }
  return m;
}

}  // namespace

RaterLabels RaterLabels::from_sequence(const std::vector<std::string>& labels) {
  RaterLabels r;
  r.items.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) r.items.emplace_back(std::to_string(i), labels[i]);
  return r;
}

KappaResult cohens_kappa_detail(const RaterLabels& a, const RaterLabels& b) {
  const auto ma = index_labels(a, "a");
  const auto mb = index_labels(b, "b");
  if (ma.empty()) fail(ErrorCode::MismatchedItems, "cohens_kappa: no items");
  if (ma.size() != mb.size()) fail(ErrorCode::MismatchedItems, "cohens_kappa: raters cover different item sets");

  std::map<std::string, double> pa;
  std::map<std::string, double> pb;
  std::size_t agree = 0;
  for (const auto& [id, la] : ma) {
    auto it = mb.find(id);
    if (it == mb.end()) fail(ErrorCode::MismatchedItems, "cohens_kappa: item '" + id + "' missing from rater b");
    if (la == it->second) ++agree;
    pa[la] += 1.0;
    pb[it->second] += 1.0;
  }

  const double n = static_cast<double>(ma.size());
  KappaResult r;
  r.items = ma.size();
  r.observed = static_cast<double>(agree) / n;
  for (const auto& [label, ca] : pa) {
    auto it = pb.find(label);
    if (it != pb.end()) r.chance += (ca / n) * (it->second / n);
  }
  if (r.chance >= 1.0) {
    if (r.observed == 1.0) {
      r.kappa = 1.0;
      return r;
    }
    fail(ErrorCode::DegenerateAgreement, "cohens_kappa: chance agreement is 1 but observed agreement < 1");
  }
  r.kappa = (r.observed - r.chance) / (1.0 - r.chance);
  return r;
}

double cohens_kappa(const RaterLabels& a, const RaterLabels& b) { return cohens_kappa_detail(a, b).kappa; }

}  // namespace psychoforge::metrics
