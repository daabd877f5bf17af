#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "attribeval/types.hpp"

namespace attribeval::metrics {

/// 2x2 confusion table with Attributable as the positive class.
struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// Tallies one cell per (prediction, gold) pair. Throws Error on length
/// mismatch or empty input.
ConfusionCounts confusion(std::span<const Label> predictions, std::span<const Label> golds);

// All three return percentages in full precision. A 0/0 ratio yields 0; the
// matching RowFlag marks it on a MetricsRow.

/// 100 * 2tp / (2tp + fp + fn).
double f1_positive(const ConfusionCounts& c);
/// 100 * fp / (fp + tn): share of negatives predicted positive.
double fp_rate(const ConfusionCounts& c);
/// 100 * fn / (fn + tp): share of positives predicted negative.
double fn_rate(const ConfusionCounts& c);

enum RowFlag : std::uint32_t {
  kF1Undefined = 1u << 0,
  kFpRateUndefined = 1u << 1,
  kFnRateUndefined = 1u << 2,
  kDegenerate = 1u << 3,  // every prediction fell in one class
};

/// Flag names joined with ';' in bit order, e.g. "degenerate;fn_rate_undefined".
std::string flags_to_string(std::uint32_t flags);
std::uint32_t flags_from_string(std::string_view text);

struct MetricsRow {
  std::string subset;
  Split split = Split::ID;
  double f1 = 0;
  double fp_rate = 0;
  double fn_rate = 0;
  std::uint64_t support = 0;
  double unparse_rate = 0;
  std::uint32_t flags = 0;
  ConfusionCounts counts;
};

MetricsRow make_row(std::string subset, Split split, const ConfusionCounts& counts,
                    std::uint64_t unparsed = 0);

/// Unweighted mean of f1 over rows (macro over subsets). Throws on empty input.
double aggregate(std::span<const MetricsRow> rows);

/// Support-weighted mean of f1. Throws on empty input or zero total support.
double aggregate_weighted(std::span<const MetricsRow> rows);

}  // namespace attribeval::metrics
