#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sihft/campaign.hpp"
#include "sihft/hardener.hpp"

namespace sihft {

/// Execution time is the golden dynamic instruction count; code size counts
/// program instructions (not the detection handler) at 4 bytes each.
struct OverheadRow {
  std::string version;
  std::uint64_t exec_time = 0;
  std::uint64_t code_size = 0;
  std::uint64_t data_size = 0;
  double exec_ratio = 1.0;
  double code_ratio = 1.0;
  double data_ratio = 1.0;
};

/// rows[0] is the unhardened program.
struct OverheadReport {
  std::vector<OverheadRow> rows;
};

OverheadReport compute_overheads(const Program& original, std::span<const HardeningConfig> configs,
                                 SimOptions opts = {});

/// Everything the renderers need; round-trips through JSON so a saved
/// campaign can be re-rendered without rerunning it.
struct Report {
  std::string workload;
  std::uint64_t seed = 0;
  unsigned per_point = 0;
  std::uint64_t limit_mult = 0;
  std::uint64_t golden_dyn_count = 0;
  std::uint64_t fault_count = 0;
  std::vector<CampaignSummary> summaries;
  OverheadReport overheads;
};

Report make_report(const CampaignResult& result, OverheadReport overheads = {});

std::string to_json(const Report& r);
Report report_from_json(std::string_view text);

enum class Format { Text, Csv, Json };
Format parse_format(std::string_view name);

std::string render(const Report& r, Format f);
std::string render_text(const Report& r);
std::string render_csv(const Report& r);
std::string render_overheads_csv(const OverheadReport& o);

/// One line per fault and version.
std::string records_csv(const CampaignResult& result);
std::string_view records_csv_header();

/// Percentage with one decimal, "-" when the cell is empty.
std::string format_percent(std::uint64_t part, std::uint64_t whole);

/// Largest-remainder rounding of counts to tenths of a percent; the result
/// sums to exactly 1000 tenths unless every count is zero.
std::vector<std::uint32_t> distribution_tenths(std::span<const std::uint32_t> counts);

}  // namespace sihft
