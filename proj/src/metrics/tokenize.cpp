#include <memory>

#include <unicode/brkiter.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "psychoforge/error.hpp"
#include "psychoforge/metrics.hpp"
#include "psychoforge/text.hpp"

namespace psychoforge::metrics {
namespace {

bool has_alnum(const icu::UnicodeString& s) {
  for (int32_t i = 0; i < s.length();) {
    UChar32 c = s.char32At(i);
    if (u_isalnum(c)) return true;
    i += U16_LENGTH(c);
  }
  return false;
}

void push_segment(icu::UnicodeString seg, const TokenizerConfig& cfg, std::vector<std::string>& out) {
  if (seg.isEmpty()) return;
  if (cfg.drop_punctuation && !has_alnum(seg)) return;
  if (cfg.lowercase) seg.toLower(icu::Locale::getRoot());
  std::string utf8;
  seg.toUTF8String(utf8);
  if (!utf8.empty()) out.push_back(std::move(utf8));
}

}  // namespace

std::string TokenizerConfig::describe() const {
  std::string s = mode == SegmentationMode::UnicodeWords ? "icu-word-boundary" : "whitespace";
  if (lowercase) s += "+lowercase";
  if (drop_punctuation) s += "+drop-punctuation";
  return s;
}

TokenSequence tokenize(std::string_view text, const TokenizerConfig& cfg, std::string source_id) {
  TokenSequence seq;
  seq.source_id = std::move(source_id);
  if (text.empty()) return seq;

  if (cfg.mode == SegmentationMode::Whitespace) {
    for (const auto& w : text::split_whitespace(text)) {
      push_segment(icu::UnicodeString::fromUTF8(w), cfg, seq.tokens);
    }
    return seq;
  }

  const icu::UnicodeString u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  UErrorCode status = U_ZERO_ERROR;
  std::unique_ptr<icu::BreakIterator> it(
      icu::BreakIterator::createWordInstance(icu::Locale::getRoot(), status));
  if (U_FAILURE(status)) fail(ErrorCode::InvalidArgument, "ICU word iterator unavailable");
  it->setText(u);
  int32_t start = it->first();
  for (int32_t end = it->next(); end != icu::BreakIterator::DONE; start = end, end = it->next()) {
    if (it->getRuleStatus() == UBRK_WORD_NONE) continue;
    push_segment(icu::UnicodeString(u, start, end - start), cfg, seq.tokens);
  }
  return seq;
}

}  // namespace psychoforge::metrics
