#include <set>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include <zlib.h>

#include "psychoforge/error.hpp"
#include "psychoforge/metrics.hpp"

namespace psychoforge::metrics {
namespace {

void require_nonempty(const TokenSequence& seq, const char* op) {
  if (seq.empty()) fail(ErrorCode::EmptySequence, std::string(op) + ": empty token sequence");
}

std::size_t distinct_count(const std::vector<std::string>& tokens, std::size_t begin, std::size_t end) {
  std::unordered_set<std::string_view> seen;
  for (std::size_t i = begin; i < end; ++i) seen.insert(tokens[i]);
  return seen.size();
}

// One directional pass of the running-TTR automaton.
double mtld_pass(const std::vector<std::string>& tokens, bool reverse, double threshold) {
  double factors = 0.0;
  std::unordered_set<std::string_view> types;
  std::size_t count = 0;
  double running = 1.0;
  const std::size_t n = tokens.size();
  for (std::size_t k = 0; k < n; ++k) {
    const std::string& tok = reverse ? tokens[n - 1 - k] : tokens[k];
    types.insert(tok);
    ++count;
    running = static_cast<double>(types.size()) / static_cast<double>(count);
    if (running < threshold) {
      factors += 1.0;
      types.clear();
      count = 0;
      running = 1.0;
    }
  }
  if (count > 0) factors += (1.0 - running) / (1.0 - threshold);
  return factors;
}

}  // namespace

FrequencySpectrum FrequencySpectrum::from_sequence(const TokenSequence& seq) {
  std::unordered_map<std::string_view, std::size_t> freq;
  for (const auto& t : seq.tokens) ++freq[t];
  FrequencySpectrum s;
  for (const auto& [_, m] : freq) ++s.counts_by_multiplicity[m];
  return s;
}

std::size_t FrequencySpectrum::token_count() const {
  std::size_t n = 0;
  for (const auto& [m, v] : counts_by_multiplicity) n += m * v;
  return n;
}

std::size_t FrequencySpectrum::type_count() const {
  std::size_t n = 0;
  for (const auto& [_, v] : counts_by_multiplicity) n += v;
  return n;
}

double ttr(const TokenSequence& seq) {
  require_nonempty(seq, "ttr");
  return static_cast<double>(distinct_count(seq.tokens, 0, seq.size())) / static_cast<double>(seq.size());
}

double msttr(const TokenSequence& seq, std::size_t segment_len) {
  if (segment_len == 0) fail(ErrorCode::InvalidArgument, "msttr: segment length must be positive");
  if (seq.size() < segment_len) {
    fail(ErrorCode::SequenceTooShort, "msttr: " + std::to_string(seq.size()) + " tokens < segment length " +
                                          std::to_string(segment_len));
  }
  const std::size_t segments = seq.size() / segment_len;
  double acc = 0.0;
  for (std::size_t s = 0; s < segments; ++s) {
    acc += static_cast<double>(distinct_count(seq.tokens, s * segment_len, (s + 1) * segment_len)) /
           static_cast<double>(segment_len);
  }
  return acc / static_cast<double>(segments);
}

double yules_k(const FrequencySpectrum& spectrum, std::size_t n) {
  if (n == 0) fail(ErrorCode::EmptySequence, "yules_k: token count is zero");
  if (spectrum.token_count() != n) {
    fail(ErrorCode::InvalidArgument, "yules_k: spectrum does not account for " + std::to_string(n) + " tokens");
  }
  double s2 = 0.0;
  for (const auto& [m, v] : spectrum.counts_by_multiplicity) {
    s2 += static_cast<double>(m) * static_cast<double>(m) * static_cast<double>(v);
  }
  const double nn = static_cast<double>(n);
  return 1e4 * (s2 - nn) / (nn * nn);
}

double yules_k(const TokenSequence& seq) { return yules_k(FrequencySpectrum::from_sequence(seq), seq.size()); }

MtldTrace mtld_trace(const TokenSequence& seq, double threshold) {
  require_nonempty(seq, "mtld");
  if (!(threshold > 0.0 && threshold < 1.0)) fail(ErrorCode::InvalidArgument, "mtld: threshold must be in (0,1)");
  MtldTrace tr;
  tr.forward_factors = mtld_pass(seq.tokens, false, threshold);
  tr.reverse_factors = mtld_pass(seq.tokens, true, threshold);
  const double mean = (tr.forward_factors + tr.reverse_factors) / 2.0;
  const double total = static_cast<double>(seq.size());
  if (mean == 0.0) {
    tr.fallback = true;
    tr.value = total;
  } else {
    tr.value = total / mean;
  }
  return tr;
}

double mtld(const TokenSequence& seq, double threshold) { return mtld_trace(seq, threshold).value; }

double distinct_n(const TokenSequence& seq, std::size_t n) {
  if (n == 0) fail(ErrorCode::InvalidArgument, "distinct_n: n must be positive");
  if (seq.size() < n) {
    fail(ErrorCode::SequenceTooShort,
         "distinct_n: " + std::to_string(seq.size()) + " tokens < n=" + std::to_string(n));
  }
  std::set<std::vector<std::string_view>> grams;
  const std::size_t total = seq.size() - n + 1;
  for (std::size_t i = 0; i < total; ++i) {
    grams.emplace(seq.tokens.begin() + static_cast<std::ptrdiff_t>(i),
                  seq.tokens.begin() + static_cast<std::ptrdiff_t>(i + n));
  }
  return static_cast<double>(grams.size()) / static_cast<double>(total);
}

double compression_rate(const std::vector<std::string>& texts) {
  std::string buf;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (i) buf.push_back('\n');
    buf += texts[i];
  }
  if (buf.empty()) fail(ErrorCode::EmptyCorpus, "compression_rate: corpus is empty");
  uLongf out_len = compressBound(static_cast<uLong>(buf.size()));
  std::vector<Bytef> out(out_len);
  const int rc = compress2(out.data(), &out_len, reinterpret_cast<const Bytef*>(buf.data()),
                           static_cast<uLong>(buf.size()), kCompressionLevel);
  if (rc != Z_OK) fail(ErrorCode::InvalidArgument, "compression_rate: zlib error " + std::to_string(rc));
  return static_cast<double>(out_len) / static_cast<double>(buf.size());
}

TokenSequence concatenate(const std::vector<TokenSequence>& docs) {
  TokenSequence all;
  all.source_id = "corpus";
  for (const auto& d : docs) all.tokens.insert(all.tokens.end(), d.tokens.begin(), d.tokens.end());
  return all;
}

double per_text_ttr(const std::vector<TokenSequence>& docs) {
  if (docs.empty()) fail(ErrorCode::EmptyCorpus, "per_text_ttr: no documents");
  double acc = 0.0;
  for (const auto& d : docs) acc += ttr(d);
  return acc / static_cast<double>(docs.size());
}

double cumulative_ttr(const std::vector<TokenSequence>& docs) {
  if (docs.empty()) fail(ErrorCode::EmptyCorpus, "cumulative_ttr: no documents");
  return ttr(concatenate(docs));
}

}  // namespace psychoforge::metrics
