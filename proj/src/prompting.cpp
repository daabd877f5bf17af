#include "attribeval/prompting.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <numeric>

#include "text_util.hpp"

namespace attribeval::prompting {

namespace {

struct SlotName {
  std::string_view token;
  int slot;
};

bool is_ascii_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

std::size_t count_lines_equal(std::string_view text, std::string_view wanted) {
  std::size_t hits = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find('\n', start), text.size());
    if (text.substr(start, end - start) == wanted) ++hits;
    start = end + 1;
  }
  return hits;
}

}  // namespace

PromptTemplate::PromptTemplate(std::string text, std::string version)
    : text_(std::move(text)), version_(std::move(version)) {
  static constexpr std::array<std::pair<std::string_view, Slot>, 4> kSlots = {{
      {"{question}", Slot::Question},
      {"{response}", Slot::Response},
      {"{claim}", Slot::Claim},
      {"{reference}", Slot::Reference},
  }};
  std::array<int, 4> seen{};
  std::string literal;
  std::string_view rest = text_;
  while (!rest.empty()) {
    bool matched = false;
    for (std::size_t i = 0; i < kSlots.size(); ++i) {
      if (rest.starts_with(kSlots[i].first)) {
        if (!literal.empty()) pieces_.push_back({Slot::Literal, std::exchange(literal, {})});
        pieces_.push_back({kSlots[i].second, {}});
        ++seen[i];
        rest.remove_prefix(kSlots[i].first.size());
        matched = true;
        break;
      }
    }
    if (!matched) {
      literal.push_back(rest.front());
      rest.remove_prefix(1);
    }
  }
  if (!literal.empty()) pieces_.push_back({Slot::Literal, std::move(literal)});

  for (std::size_t i = 0; i < kSlots.size(); ++i) {
    if (seen[i] != 1)
      throw Error("prompt template " + version_ + ": slot " + std::string(kSlots[i].first) +
                  " must occur exactly once");
  }
  if (count_lines_equal(text_, kInstruction) != 1)
    throw Error("prompt template " + version_ + ": instruction line must occur exactly once");
}

const PromptTemplate& PromptTemplate::builtin() {
  static const PromptTemplate tpl{std::string(builtin_template_text()),
                                  std::string(kTemplateVersion)};
  return tpl;
}

PromptBundle PromptTemplate::render(const dataset::AttributionRecord& record,
                                    const PromptOptions& options) const {
  const std::string references = join_references(record.references, options.reference_budget);
  std::string out;
  for (const auto& piece : pieces_) {
    switch (piece.slot) {
      case Slot::Literal: out += piece.literal; break;
      case Slot::Question: out += record.question; break;
      case Slot::Response: out += record.response; break;
      case Slot::Claim: out += record.claim; break;
      case Slot::Reference: out += references; break;
    }
  }
  return {record.id, std::move(out), version_};
}

PromptBundle render_prompt(const dataset::AttributionRecord& record,
                           const PromptOptions& options) {
  return PromptTemplate::builtin().render(record, options);
}

std::string join_references(std::span<const std::string> references, std::size_t budget) {
  const std::size_t n = references.size();
  if (n == 0) return {};

  std::vector<std::size_t> lengths(n);
  std::transform(references.begin(), references.end(), lengths.begin(),
                 [](const std::string& r) { return text::utf8_length(r); });
  const std::size_t separators = (n - 1) * text::utf8_length(kReferenceSeparator);
  const std::size_t total = std::accumulate(lengths.begin(), lengths.end(), separators);

  std::vector<std::size_t> keep = lengths;
  if (total > budget) {
    // Water-fill: short references stay whole, the rest share what is left.
    std::size_t remaining = budget > separators ? budget - separators : 0;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return lengths[a] < lengths[b]; });
    std::size_t open = n;
    for (const auto idx : order) {
      const std::size_t share = remaining / open;
      keep[idx] = std::min(lengths[idx], share);
      remaining -= keep[idx];
      --open;
    }
  }

  std::string joined;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) joined += kReferenceSeparator;
    joined += text::utf8_prefix(references[i], keep[i]);
  }
  // Only reachable when the separators alone exceed the budget.
  if (text::utf8_length(joined) > budget) joined = std::string(text::utf8_prefix(joined, budget));
  return joined;
}

std::string_view to_string(VerdictValue value) {
  switch (value) {
    case VerdictValue::Yes: return "YES";
    case VerdictValue::No: return "NO";
    case VerdictValue::Unparseable: return "UNPARSEABLE";
  }
  return "UNPARSEABLE";
}

Verdict parse_verdict(std::string_view raw) {
  Verdict verdict{VerdictValue::Unparseable, std::string(raw)};

  std::string_view s = raw;
  auto strip = [](char c) {
    return text::is_space(c) || std::ispunct(static_cast<unsigned char>(c));
  };
  while (!s.empty() && strip(s.front())) s.remove_prefix(1);
  while (!s.empty() && strip(s.back())) s.remove_suffix(1);

  const auto begin = std::find_if(s.begin(), s.end(), is_ascii_alpha);
  if (begin == s.end()) return verdict;
  const auto end = std::find_if_not(begin, s.end(), is_ascii_alpha);
  // A token glued to a non-ASCII byte is part of some other word.
  auto non_ascii = [](char c) { return static_cast<unsigned char>(c) >= 0x80; };
  if ((begin != s.begin() && non_ascii(*(begin - 1))) || (end != s.end() && non_ascii(*end)))
    return verdict;

  std::string token(begin, end);
  std::transform(token.begin(), token.end(), token.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (token == "yes") verdict.value = VerdictValue::Yes;
  else if (token == "no") verdict.value = VerdictValue::No;
  return verdict;
}

UnparseableVerdictError::UnparseableVerdictError(std::string record_id, const std::string& raw)
    : Error("record '" + record_id + "': completion is neither YES nor NO: \"" + raw + "\""),
      record_id_(std::move(record_id)) {}

Label verdict_to_prediction(const Verdict& verdict, UnparsePolicy policy,
                            std::string_view record_id, std::size_t* unparse_count) {
  switch (verdict.value) {
    case VerdictValue::Yes: return Label::Attributable;
    case VerdictValue::No: return Label::NotAttributable;
    case VerdictValue::Unparseable: break;
  }
  if (policy == UnparsePolicy::AsError)
    throw UnparseableVerdictError(std::string(record_id), verdict.raw);
  if (unparse_count != nullptr) ++*unparse_count;
  return Label::NotAttributable;
}

}  // namespace attribeval::prompting
