#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attribeval/dataset.hpp"
#include "attribeval/types.hpp"

namespace attribeval::prompting {

inline constexpr std::string_view kTemplateVersion = "entailment-v1";

/// The closing instruction line, with straight ASCII quotes.
inline constexpr std::string_view kInstruction =
    "Answer the question with ONLY a 'YES' or 'NO.' Does the REFERENCE entail the CLAIM?";

/// Separator placed between consecutive references.
inline constexpr std::string_view kReferenceSeparator = "\n\n";

inline constexpr std::size_t kDefaultReferenceBudget = 12000;

struct PromptBundle {
  std::string record_id;
  std::string text;
  std::string template_version;

  bool operator==(const PromptBundle&) const = default;
};

struct PromptOptions {
  /// Maximum length of the REFERENCE section body, in code points.
  std::size_t reference_budget = kDefaultReferenceBudget;
};

/// Text of assets/entailment_prompt_v1.txt, compiled in.
std::string_view builtin_template_text();

/// A prompt template with {question}, {response}, {claim} and {reference}
/// slots, each occurring exactly once, plus exactly one instruction line.
/// Substitution is single-pass, so braces inside record fields are inert.
class PromptTemplate {
 public:
  PromptTemplate(std::string text, std::string version);

  static const PromptTemplate& builtin();

  PromptBundle render(const dataset::AttributionRecord& record,
                      const PromptOptions& options = {}) const;

  const std::string& version() const { return version_; }
  const std::string& text() const { return text_; }

 private:
  enum class Slot { Literal, Question, Response, Claim, Reference };
  struct Piece {
    Slot slot;
    std::string literal;
  };

  std::string text_;
  std::string version_;
  std::vector<Piece> pieces_;
};

/// Renders with the built-in template.
PromptBundle render_prompt(const dataset::AttributionRecord& record,
                           const PromptOptions& options = {});

/// Joins references with a blank line, keeping the result within `budget`
/// code points. Over-long references lose their tails first; references that
/// fit within an equal share of the budget are kept whole and their unused
/// share goes to the longer ones. Order is preserved.
std::string join_references(std::span<const std::string> references, std::size_t budget);

enum class VerdictValue { Yes, No, Unparseable };

std::string_view to_string(VerdictValue value);

struct Verdict {
  VerdictValue value = VerdictValue::Unparseable;
  std::string raw;  // verbatim completion

  bool operator==(const Verdict&) const = default;
};

/// Lowercases and strips surrounding whitespace and punctuation, then lets
/// the first alphabetic token decide: "yes" or "no", anything else is
/// Unparseable. Total and pure.
Verdict parse_verdict(std::string_view raw);

enum class UnparsePolicy { AsNegative, AsError };

class UnparseableVerdictError : public Error {
 public:
  UnparseableVerdictError(std::string record_id, const std::string& raw);

  const std::string& record_id() const { return record_id_; }

 private:
  std::string record_id_;
};

/// Yes maps to Attributable and No to NotAttributable. Unparseable becomes
/// NotAttributable under AsNegative (incrementing `unparse_count` when
/// given) or throws UnparseableVerdictError under AsError.
Label verdict_to_prediction(const Verdict& verdict, UnparsePolicy policy,
                            std::string_view record_id, std::size_t* unparse_count = nullptr);

}  // namespace attribeval::prompting
