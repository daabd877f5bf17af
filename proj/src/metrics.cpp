#include "attribeval/metrics.hpp"

#include <array>

namespace attribeval::metrics {

namespace {

double percent(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

constexpr std::array<std::pair<RowFlag, std::string_view>, 4> kFlagNames = {{
    {kF1Undefined, "f1_undefined"},
    {kFpRateUndefined, "fp_rate_undefined"},
    {kFnRateUndefined, "fn_rate_undefined"},
    {kDegenerate, "degenerate"},
}};

}  // namespace

ConfusionCounts confusion(std::span<const Label> predictions, std::span<const Label> golds) {
  if (predictions.size() != golds.size())
    throw Error("confusion: " + std::to_string(predictions.size()) + " predictions vs " +
                std::to_string(golds.size()) + " gold labels");
  if (predictions.empty()) throw Error("confusion: no examples to score");

  ConfusionCounts c;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool pred_pos = predictions[i] == Label::Attributable;
    const bool gold_pos = golds[i] == Label::Attributable;
    if (pred_pos && gold_pos) ++c.tp;
    else if (pred_pos) ++c.fp;
    else if (gold_pos) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double f1_positive(const ConfusionCounts& c) { return percent(2 * c.tp, 2 * c.tp + c.fp + c.fn); }

double fp_rate(const ConfusionCounts& c) { return percent(c.fp, c.fp + c.tn); }

double fn_rate(const ConfusionCounts& c) { return percent(c.fn, c.fn + c.tp); }

std::string flags_to_string(std::uint32_t flags) {
  std::string out;
  for (const auto& [bit, name] : kFlagNames) {
    if ((flags & bit) == 0) continue;
    if (!out.empty()) out += ';';
    out += name;
  }
  return out;
}

std::uint32_t flags_from_string(std::string_view text) {
  std::uint32_t flags = 0;
  while (!text.empty()) {
    const auto cut = text.find(';');
    const auto name = text.substr(0, cut);
    bool known = false;
    for (const auto& [bit, flag_name] : kFlagNames) {
      if (name == flag_name) {
        flags |= bit;
        known = true;
      }
    }
    if (!known) throw Error("unknown row flag '" + std::string(name) + "'");
    text = cut == std::string_view::npos ? std::string_view{} : text.substr(cut + 1);
  }
  return flags;
}

MetricsRow make_row(std::string subset, Split split, const ConfusionCounts& counts,
                    std::uint64_t unparsed) {
  MetricsRow row;
  row.subset = std::move(subset);
  row.split = split;
  row.counts = counts;
  row.support = counts.total();
  row.f1 = f1_positive(counts);
  row.fp_rate = fp_rate(counts);
  row.fn_rate = fn_rate(counts);
  row.unparse_rate = percent(unparsed, row.support);
  if (2 * counts.tp + counts.fp + counts.fn == 0) row.flags |= kF1Undefined;
  if (counts.fp + counts.tn == 0) row.flags |= kFpRateUndefined;
  if (counts.fn + counts.tp == 0) row.flags |= kFnRateUndefined;
  const auto predicted_pos = counts.tp + counts.fp;
  if (row.support > 0 && (predicted_pos == 0 || predicted_pos == row.support))
    row.flags |= kDegenerate;
  return row;
}

double aggregate(std::span<const MetricsRow> rows) {
  if (rows.empty()) throw Error("aggregate: no rows");
  double sum = 0;
  for (const auto& row : rows) sum += row.f1;
  return sum / static_cast<double>(rows.size());
}

double aggregate_weighted(std::span<const MetricsRow> rows) {
  if (rows.empty()) throw Error("aggregate_weighted: no rows");
  double sum = 0;
  std::uint64_t support = 0;
  for (const auto& row : rows) {
    sum += row.f1 * static_cast<double>(row.support);
    support += row.support;
  }
  if (support == 0) throw Error("aggregate_weighted: total support is zero");
  return sum / static_cast<double>(support);
}

}  // namespace attribeval::metrics
