#include "sihft/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

namespace sihft {

using nlohmann::json;

namespace {

constexpr std::array<FaultKind, 2> kKinds{FaultKind::Seu, FaultKind::Set};
constexpr std::array<FaultSource, 4> kSources{FaultSource::RegBank, FaultSource::Alu, FaultSource::Datapath,
                                              FaultSource::Controlpath};
constexpr std::array<Outcome, kNumOutcomes> kOutcomes{Outcome::Masked, Outcome::Detected, Outcome::SDC, Outcome::Hang,
                                                      Outcome::HardwareTrap};
constexpr std::array<Drawback, kNumDrawbackClasses> kDrawbacks{Drawback::IntraBlock, Drawback::BlockStart,
                                                               Drawback::UnusedMemory, Drawback::Other};
constexpr std::array<std::string_view, 2> kEffects{"Data", "Flow"};

double ratio(std::uint64_t v, std::uint64_t base) { return base == 0 ? 1.0 : static_cast<double>(v) / base; }

std::string tenths(std::uint32_t t) { return fmt::format("{}.{}", t / 10, t % 10); }

std::string opt(const std::optional<std::uint64_t>& v) { return v ? std::to_string(*v) : std::string(); }

json summary_to_json(const CampaignSummary& s) {
  json cells = json::array();
  for (const auto& kind : s.cells) {
    json k = json::array();
    for (const auto& src : kind) {
      json e = json::array();
      for (const auto& c : src) e.push_back({c.faults, c.detected});
      k.push_back(e);
    }
    cells.push_back(k);
  }
  return {{"version", s.version},     {"total_faults", s.total_faults}, {"error_faults", s.error_faults},
          {"replaced", s.replaced},   {"failed", s.failed},             {"cells", cells},
          {"points", s.points},       {"outcomes", s.outcomes},         {"drawbacks", s.drawbacks}};
}

CampaignSummary summary_from_json(const json& j) {
  CampaignSummary s;
  s.version = j.at("version").get<std::string>();
  s.total_faults = j.at("total_faults").get<std::uint32_t>();
  s.error_faults = j.at("error_faults").get<std::uint32_t>();
  s.replaced = j.at("replaced").get<std::uint32_t>();
  s.failed = j.at("failed").get<std::uint32_t>();
  const json& cells = j.at("cells");
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t src = 0; src < 4; ++src)
      for (std::size_t e = 0; e < 2; ++e) {
        const json& c = cells.at(k).at(src).at(e);
        s.cells[k][src][e] = {c.at(0).get<std::uint32_t>(), c.at(1).get<std::uint32_t>()};
      }
  s.points = j.at("points").get<decltype(s.points)>();
  s.outcomes = j.at("outcomes").get<decltype(s.outcomes)>();
  s.drawbacks = j.at("drawbacks").get<decltype(s.drawbacks)>();
  return s;
}

}  // namespace

OverheadReport compute_overheads(const Program& original, std::span<const HardeningConfig> configs,
                                 SimOptions opts) {
  auto row = [&](const Program& p, std::string name) {
    constexpr std::uint64_t kBudget = 100'000'000;
    OverheadRow r;
    r.version = std::move(name);
    r.exec_time = run_golden(p, kBudget, opts).dyn_count;
    r.code_size = 4 * p.code.size();
    r.data_size = p.data_bytes();
    return r;
  };
  OverheadReport rep;
  rep.rows.push_back(row(original, "original"));
  const OverheadRow base = rep.rows.front();
  for (const auto& cfg : configs) {
    OverheadRow r = row(apply_all(original, cfg).program, cfg.name());
    r.exec_ratio = ratio(r.exec_time, base.exec_time);
    r.code_ratio = ratio(r.code_size, base.code_size);
    r.data_ratio = ratio(r.data_size, base.data_size);
    rep.rows.push_back(std::move(r));
  }
  return rep;
}

Report make_report(const CampaignResult& result, OverheadReport overheads) {
  Report r;
  r.workload = result.workload;
  r.seed = result.options.seed;
  r.per_point = result.options.per_point;
  r.limit_mult = result.options.limit_mult;
  r.golden_dyn_count = result.golden_dyn_count;
  r.fault_count = result.faults.faults.size();
  for (const auto& v : result.versions) r.summaries.push_back(v.summary);
  r.overheads = std::move(overheads);
  return r;
}

std::string to_json(const Report& r) {
  json j;
  j["workload"] = r.workload;
  j["seed"] = r.seed;
  j["per_point"] = r.per_point;
  j["limit_mult"] = r.limit_mult;
  j["golden_dyn_count"] = r.golden_dyn_count;
  j["fault_count"] = r.fault_count;
  j["summaries"] = json::array();
  for (const auto& s : r.summaries) j["summaries"].push_back(summary_to_json(s));
  j["overheads"] = json::array();
  for (const auto& o : r.overheads.rows) {
    j["overheads"].push_back({{"version", o.version},
                              {"exec_time", o.exec_time},
                              {"code_size", o.code_size},
                              {"data_size", o.data_size},
                              {"exec_ratio", o.exec_ratio},
                              {"code_ratio", o.code_ratio},
                              {"data_ratio", o.data_ratio}});
  }
  return j.dump(2) + "\n";
}

Report report_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
    Report r;
    r.workload = j.at("workload").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.per_point = j.at("per_point").get<unsigned>();
    r.limit_mult = j.at("limit_mult").get<std::uint64_t>();
    r.golden_dyn_count = j.at("golden_dyn_count").get<std::uint64_t>();
    r.fault_count = j.at("fault_count").get<std::uint64_t>();
    for (const auto& s : j.at("summaries")) r.summaries.push_back(summary_from_json(s));
    for (const auto& o : j.at("overheads")) {
      r.overheads.rows.push_back({o.at("version").get<std::string>(), o.at("exec_time").get<std::uint64_t>(),
                                  o.at("code_size").get<std::uint64_t>(), o.at("data_size").get<std::uint64_t>(),
                                  o.at("exec_ratio").get<double>(), o.at("code_ratio").get<double>(),
                                  o.at("data_ratio").get<double>()});
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(fmt::format("malformed report: {}", e.what()));
  }
}

Format parse_format(std::string_view name) {
  if (name == "text") return Format::Text;
  if (name == "csv") return Format::Csv;
  if (name == "json") return Format::Json;
  throw Error(fmt::format("unknown format '{}'", name));
}

std::string render(const Report& r, Format f) {
  switch (f) {
    case Format::Text: return render_text(r);
    case Format::Csv: return render_csv(r);
    case Format::Json: return to_json(r);
  }
  return {};
}

std::string format_percent(std::uint64_t part, std::uint64_t whole) {
  if (whole == 0) return "-";
  // round half up at one decimal, in integers
  const std::uint64_t t = (2000 * part + whole) / (2 * whole);
  return tenths(static_cast<std::uint32_t>(t));
}

std::vector<std::uint32_t> distribution_tenths(std::span<const std::uint32_t> counts) {
  std::vector<std::uint32_t> out(counts.size(), 0);
  const std::uint64_t total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  if (total == 0) return out;
  std::vector<std::pair<std::uint64_t, std::size_t>> rem;
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const std::uint64_t scaled = 1000 * std::uint64_t{counts[i]};
    out[i] = static_cast<std::uint32_t>(scaled / total);
    assigned += out[i];
    rem.emplace_back(scaled % total, i);
  }
  // larger remainder first, lower index on ties
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < 1000; ++k, ++assigned) ++out[rem[k].second];
  return out;
}

std::string render_text(const Report& r) {
  std::string out;
  out += fmt::format("workload {}: {} faults, seed {}, up to {} per point, golden run {} instructions\n\n",
                     r.workload, r.fault_count, r.seed, r.per_point, r.golden_dyn_count);

  std::vector<std::size_t> width;
  for (const auto& s : r.summaries) width.push_back(std::max<std::size_t>(13, s.version.size()));

  out += "Detection of faults that caused an error in the original program (%)\n";
  std::string head1 = fmt::format("{:<4} {:<12} {:>6}", "Kind", "Source", "Points");
  std::string head2 = fmt::format("{:<4} {:<12} {:>6}", "", "", "");
  for (std::size_t v = 0; v < r.summaries.size(); ++v) {
    head1 += fmt::format(" | {:<{}}", r.summaries[v].version, width[v]);
    head2 += fmt::format(" | {:>6} {:>6}{:{}}", "Data", "Flow", "", width[v] - 13);
  }
  out += head1 + "\n" + head2 + "\n";
  auto cell_pair = [](const DetectionCell& d, const DetectionCell& f) {
    return fmt::format("{:>6} {:>6}", format_percent(d.detected, d.faults), format_percent(f.detected, f.faults));
  };
  for (std::size_t k = 0; k < kKinds.size(); ++k) {
    std::uint32_t kind_points = 0;
    for (std::size_t s = 0; s < kSources.size(); ++s) {
      const std::uint32_t points = r.summaries.empty() ? 0 : r.summaries.front().points[k][s];
      kind_points += points;
      std::string line = fmt::format("{:<4} {:<12} {:>6}", kind_name(kKinds[k]), source_name(kSources[s]), points);
      for (std::size_t v = 0; v < r.summaries.size(); ++v) {
        const auto& c = r.summaries[v].cells[k][s];
        line += fmt::format(" | {}{:{}}", cell_pair(c[0], c[1]), "", width[v] - 13);
      }
      if (!r.summaries.empty()) out += line + "\n";
    }
    if (r.summaries.empty()) continue;
    std::string line = fmt::format("{:<4} {:<12} {:>6}", kind_name(kKinds[k]), "Total", kind_points);
    for (std::size_t v = 0; v < r.summaries.size(); ++v) {
      const auto& s = r.summaries[v];
      line += fmt::format(" | {}{:{}}",
                          cell_pair(s.kind_total(kKinds[k], EffectClass::DataEffect),
                                    s.kind_total(kKinds[k], EffectClass::FlowEffect)),
                          "", width[v] - 13);
    }
    out += line + "\n";
  }
  if (!r.summaries.empty()) {
    std::string line = fmt::format("{:<24}", "Overall");
    for (std::size_t v = 0; v < r.summaries.size(); ++v) {
      const DetectionCell all = r.summaries[v].overall();
      line += fmt::format(" | {:>13}{:{}}", format_percent(all.detected, all.faults), "", width[v] - 13);
    }
    out += line + "\n";
  }

  out += "\nOutcomes (faults)\n";
  std::string oh = fmt::format("{:<28}", "Version");
  for (auto o : kOutcomes) oh += fmt::format(" {:>12}", outcome_name(o));
  oh += fmt::format(" {:>9} {:>7}\n", "Replaced", "Failed");
  out += oh;
  for (const auto& s : r.summaries) {
    std::string line = fmt::format("{:<28}", s.version);
    for (auto n : s.outcomes) line += fmt::format(" {:>12}", n);
    line += fmt::format(" {:>9} {:>7}\n", s.replaced, s.failed);
    out += line;
  }

  out += "\nUndetected flow faults by cause (%)\n";
  std::string dh = fmt::format("{:<28}", "Version");
  for (auto d : kDrawbacks) dh += fmt::format(" {:>12}", drawback_name(d));
  dh += fmt::format(" {:>7}\n", "Faults");
  out += dh;
  for (const auto& s : r.summaries) {
    std::string line = fmt::format("{:<28}", s.version);
    const auto pct = distribution_tenths(s.drawbacks);
    const bool empty = s.undetected_flow() == 0;
    for (auto t : pct) line += fmt::format(" {:>12}", empty ? std::string("-") : tenths(t));
    line += fmt::format(" {:>7}\n", s.undetected_flow());
    out += line;
  }

  if (!r.overheads.rows.empty()) {
    out += "\nOverheads (exec time in instructions, sizes in bytes)\n";
    out += fmt::format("{:<28} {:>10} {:>6} {:>10} {:>6} {:>10} {:>6}\n", "Version", "Exec", "x", "Code", "x", "Data",
                       "x");
    for (const auto& o : r.overheads.rows) {
      out += fmt::format("{:<28} {:>10} {:>6.2f} {:>10} {:>6.2f} {:>10} {:>6.2f}\n", o.version, o.exec_time,
                         o.exec_ratio, o.code_size, o.code_ratio, o.data_size, o.data_ratio);
    }
  }
  // drop the padding that trails the last column
  std::string trimmed;
  std::istringstream lines(out);
  for (std::string line; std::getline(lines, line);) {
    line.erase(line.find_last_not_of(' ') + 1);
    trimmed += line + "\n";
  }
  return trimmed;
}

std::string render_csv(const Report& r) {
  std::string out = "section,version,kind,source,class,count,total,percent\n";
  for (const auto& s : r.summaries) {
    for (std::size_t k = 0; k < kKinds.size(); ++k)
      for (std::size_t src = 0; src < kSources.size(); ++src)
        for (std::size_t e = 0; e < 2; ++e) {
          const auto& c = s.cells[k][src][e];
          out += fmt::format("detection,{},{},{},{},{},{},{}\n", s.version, kind_name(kKinds[k]),
                             source_name(kSources[src]), kEffects[e], c.detected, c.faults,
                             format_percent(c.detected, c.faults));
        }
    for (std::size_t i = 0; i < kOutcomes.size(); ++i) {
      out += fmt::format("outcome,{},,,{},{},{},{}\n", s.version, outcome_name(kOutcomes[i]), s.outcomes[i],
                         s.total_faults, format_percent(s.outcomes[i], s.total_faults));
    }
    const auto pct = distribution_tenths(s.drawbacks);
    const std::uint32_t flow = s.undetected_flow();
    for (std::size_t i = 0; i < kDrawbacks.size(); ++i) {
      out += fmt::format("drawback,{},,,{},{},{},{}\n", s.version, drawback_name(kDrawbacks[i]), s.drawbacks[i], flow,
                         flow == 0 ? std::string("-") : tenths(pct[i]));
    }
  }
  return out;
}

std::string render_overheads_csv(const OverheadReport& o) {
  std::string out = "version,exec_time,exec_ratio,code_size,code_ratio,data_size,data_ratio\n";
  for (const auto& r : o.rows) {
    out += fmt::format("{},{},{:.4f},{},{:.4f},{},{:.4f}\n", r.version, r.exec_time, r.exec_ratio, r.code_size,
                       r.code_ratio, r.data_size, r.data_ratio);
  }
  return out;
}

std::string_view records_csv_header() {
  return "index,version,kind,source,target,reg,bit,orig_time,time,replaced,baseline_outcome,baseline_effect,"
         "outcome,effect,drawback,divergence_index,expected_pc,actual_pc,dyn_count,error";
}

std::string records_csv(const CampaignResult& result) {
  std::string out(records_csv_header());
  out += '\n';
  for (const auto& v : result.versions) {
    for (const auto& rec : v.records) {
      const FaultSpec& f = rec.original;
      const bool ok = rec.error.empty();
      // errors come from exception text; keep the row parseable
      std::string err = rec.error;
      std::replace(err.begin(), err.end(), ',', ';');
      std::replace(err.begin(), err.end(), '\n', ' ');
      out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},", rec.index, v.name, kind_name(f.kind),
                         source_name(f.source()), target_name(f.target), f.reg, f.bit, f.time,
                         ok ? std::to_string(rec.hardened.fault.time) : std::string(), rec.replaced ? 1 : 0,
                         outcome_name(rec.baseline.outcome), effect_name(rec.baseline.effect));
      if (ok) {
        const auto& h = rec.hardened;
        out += fmt::format("{},{},{},{},{},{},{},", outcome_name(h.outcome), effect_name(h.effect),
                           drawback_name(h.drawback), opt(h.divergence), opt(h.expected_pc), opt(h.actual_pc),
                           h.dyn_count);
      } else {
        out += ",,,,,,,";
      }
      out += err + "\n";
    }
  }
  return out;
}

}  // namespace sihft
