#pragma once

// Lexical, semantic, categorical-diversity and agreement statistics.
// Every function here is pure and reentrant.

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace psychoforge::metrics {

// ---------------------------------------------------------------------------
// Tokenization

enum class SegmentationMode {
  UnicodeWords,  // UAX #29 word boundaries
  Whitespace,
};

struct TokenizerConfig {
  SegmentationMode mode = SegmentationMode::UnicodeWords;
  bool lowercase = true;
  /// Drop segments that contain no letter or digit.
  bool drop_punctuation = true;

  /// Stable identity string, recorded in run manifests.
  [[nodiscard]] std::string describe() const;
};

struct TokenSequence {
  std::vector<std::string> tokens;
  std::string source_id;

  [[nodiscard]] std::size_t size() const noexcept { return tokens.size(); }
  [[nodiscard]] bool empty() const noexcept { return tokens.empty(); }
};

[[nodiscard]] TokenSequence tokenize(std::string_view text, const TokenizerConfig& cfg = {},
                                     std::string source_id = {});

// ---------------------------------------------------------------------------
// Lexical diversity

/// counts_by_multiplicity[m] = V_m, the number of types occurring exactly m times.
struct FrequencySpectrum {
  std::map<std::size_t, std::size_t> counts_by_multiplicity;

  [[nodiscard]] static FrequencySpectrum from_sequence(const TokenSequence& seq);
  /// Sum of m * V_m.
  [[nodiscard]] std::size_t token_count() const;
  /// Sum of V_m.
  [[nodiscard]] std::size_t type_count() const;
};

[[nodiscard]] double ttr(const TokenSequence& seq);
/// Mean TTR over floor(N / segment_len) full segments; the remainder is discarded.
[[nodiscard]] double msttr(const TokenSequence& seq, std::size_t segment_len = 100);
/// Yule's K = 1e4 * (sum m^2 V_m - N) / N^2.
[[nodiscard]] double yules_k(const FrequencySpectrum& spectrum, std::size_t n);
[[nodiscard]] double yules_k(const TokenSequence& seq);

struct MtldTrace {
  double forward_factors = 0.0;
  double reverse_factors = 0.0;
  double value = 0.0;
  bool fallback = false;  // both passes produced zero factors; value == N
};

/// T / mean(F_fwd, F_rev). A factor closes when the running TTR drops strictly
/// below `threshold`; the trailing partial factor contributes
/// (1 - ttr) / (1 - threshold).
[[nodiscard]] MtldTrace mtld_trace(const TokenSequence& seq, double threshold = 0.72);
[[nodiscard]] double mtld(const TokenSequence& seq, double threshold = 0.72);

/// Unique overlapping n-grams / total n-grams.
[[nodiscard]] double distinct_n(const TokenSequence& seq, std::size_t n);

inline constexpr std::string_view kCompressionCodec = "zlib(deflate) level=6";
inline constexpr int kCompressionLevel = 6;

/// |C| / |B| where B is the texts joined by '\n' and C its zlib stream at level 6.
[[nodiscard]] double compression_rate(const std::vector<std::string>& texts);

/// Mean of per-document TTRs. Empty documents are rejected.
[[nodiscard]] double per_text_ttr(const std::vector<TokenSequence>& docs);
/// TTR of all documents concatenated.
[[nodiscard]] double cumulative_ttr(const std::vector<TokenSequence>& docs);
[[nodiscard]] TokenSequence concatenate(const std::vector<TokenSequence>& docs);

// ---------------------------------------------------------------------------
// Semantic diversity

struct EmbeddingSet {
  std::vector<std::vector<double>> vectors;

  [[nodiscard]] std::size_t dimension() const noexcept {
    return vectors.empty() ? 0 : vectors.front().size();
  }
  /// Throws DimensionMismatch when vectors disagree in length.
  void check() const;
};

/// Mean over unordered pairs of (1 - cosine similarity); result in [0, 2].
[[nodiscard]] double avg_cosine_distance(const EmbeddingSet& embs);

// ---------------------------------------------------------------------------
// Categorical diversity

struct CategoricalCounts {
  std::map<std::string, std::size_t> counts;

  [[nodiscard]] std::size_t total() const;
  [[nodiscard]] static CategoricalCounts from_labels(const std::vector<std::string>& labels);
};

/// Proportions over categories with positive weight. Exposed for callers that
/// only have reported percentages rather than counts.
[[nodiscard]] double shannon_from_proportions(const std::vector<double>& weights);
[[nodiscard]] double simpson_sum_from_proportions(const std::vector<double>& weights);

/// H = -sum p ln p (nats).
[[nodiscard]] double shannon_index(const CategoricalCounts& counts);

struct SimpsonIndices {
  double gini_simpson = 0.0;     // 1 - sum p^2
  double inverse_simpson = 0.0;  // 1 / sum p^2
};
[[nodiscard]] SimpsonIndices simpson_indices(const CategoricalCounts& counts);

// ---------------------------------------------------------------------------
// Agreement

struct RaterLabels {
  std::vector<std::pair<std::string, std::string>> items;  // (item_id, label)

  [[nodiscard]] static RaterLabels from_sequence(const std::vector<std::string>& labels);
};

struct KappaResult {
  double kappa = 0.0;
  double observed = 0.0;  // p_o
  double chance = 0.0;    // p_e
  std::size_t items = 0;
};

[[nodiscard]] KappaResult cohens_kappa_detail(const RaterLabels& a, const RaterLabels& b);
[[nodiscard]] double cohens_kappa(const RaterLabels& a, const RaterLabels& b);

}  // namespace psychoforge::metrics
