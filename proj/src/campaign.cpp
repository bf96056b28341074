#include "sihft/campaign.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include "sihft/rng.hpp"

namespace sihft {

std::string_view outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Masked: return "Masked";
    case Outcome::Detected: return "Detected";
    case Outcome::SDC: return "SDC";
    case Outcome::Hang: return "Hang";
    case Outcome::HardwareTrap: return "HardwareTrap";
  }
  return "?";
}

std::string_view drawback_name(Drawback d) {
  switch (d) {
    case Drawback::IntraBlock: return "IntraBlock";
    case Drawback::BlockStart: return "BlockStart";
    case Drawback::UnusedMemory: return "UnusedMemory";
    case Drawback::Other: return "Other";
    case Drawback::NotApplicable: return "NotApplicable";
  }
  return "?";
}

namespace {

template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  if (jobs <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a combined key
  std::uint64_t z = a * 0x9E3779B97F4A7C15ull + b + 0x632BE59BD9B4E019ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

FaultSpec at_time(const FaultPoint& pt, std::uint64_t time) {
  return {pt.kind, pt.target, pt.reg, pt.bit, time};
}

std::size_t kind_index(FaultKind k) { return k == FaultKind::Seu ? 0 : 1; }
std::size_t source_index(FaultSource s) { return static_cast<std::size_t>(s); }

}  // namespace

std::vector<FaultPoint> enumerate_points(const Simulator& sim) {
  std::vector<FaultPoint> pts;
  auto bits = [&](FaultKind k, FaultTarget t, unsigned width, std::uint8_t reg = 0) {
    for (unsigned b = 0; b < width; ++b) pts.push_back({k, t, reg, static_cast<std::uint8_t>(b)});
  };
  for (unsigned r = 1; r < kNumRegisters; ++r) bits(FaultKind::Seu, FaultTarget::Register, 32, static_cast<std::uint8_t>(r));
  bits(FaultKind::Seu, FaultTarget::AluResult, 32);
  bits(FaultKind::Seu, FaultTarget::PcRegister, sim.pc_bits());
  bits(FaultKind::Seu, FaultTarget::MemAddr, 32);
  bits(FaultKind::Seu, FaultTarget::MemData, 32);
  for (unsigned r = 1; r < kNumRegisters; ++r) bits(FaultKind::Set, FaultTarget::RegReadPort, 32, static_cast<std::uint8_t>(r));
  bits(FaultKind::Set, FaultTarget::AluResult, 32);
  bits(FaultKind::Set, FaultTarget::InstrWord, 32);
  bits(FaultKind::Set, FaultTarget::MemAddr, 32);
  bits(FaultKind::Set, FaultTarget::MemData, 32);
  return pts;
}

FaultList generate_fault_list(const Program& p, const ExecTrace& golden, unsigned per_point, std::uint64_t seed,
                              SimOptions opts) {
  if (per_point < 3 || per_point > 5) throw Error(fmt::format("faults per point must be in [3, 5], got {}", per_point));
  if (golden.dyn_count == 0) throw Error("golden run executed no instructions");
  const Simulator sim(p, opts);
  FaultList list;
  list.seed = seed;
  list.per_point = per_point;
  std::mt19937_64 rng(seed);
  for (const FaultPoint& pt : enumerate_points(sim)) {
    const auto count = static_cast<unsigned>(uniform_between(rng, 3, per_point));
    for (unsigned k = 0; k < count; ++k) list.faults.push_back(at_time(pt, uniform_below(rng, golden.dyn_count)));
  }
  return list;
}

std::vector<FaultSpec> sample_faults(const Program& p, const ExecTrace& golden, std::size_t count, std::uint64_t seed,
                                     std::span<const FaultTarget> targets, SimOptions opts) {
  const Simulator sim(p, opts);
  std::vector<FaultPoint> pts;
  for (const auto& pt : enumerate_points(sim)) {
    if (std::find(targets.begin(), targets.end(), pt.target) != targets.end()) pts.push_back(pt);
  }
  if (pts.empty()) throw Error("no fault points match the requested targets");
  std::mt19937_64 rng(seed);
  std::vector<FaultSpec> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const FaultPoint& pt = pts[uniform_below(rng, pts.size())];
    out.push_back(at_time(pt, uniform_below(rng, golden.dyn_count)));
  }
  return out;
}

Remapper::Remapper(const HardenedProgram& hp, const ExecTrace& golden_original, const ExecTrace& golden_hardened)
    : hp_(&hp), original_(&golden_original) {
  std::vector<std::uint32_t> seen(hp.pc_map.size() + 1, 0);
  ordinal_.reserve(golden_original.pc_trace.size());
  for (auto pc : golden_original.pc_trace) {
    const std::size_t slot = std::min<std::size_t>(pc, hp.pc_map.size());
    ordinal_.push_back(seen[slot]++);
  }
  occurrences_.resize(hp.program.code.size() + 1);
  for (std::uint64_t t = 0; t < golden_hardened.pc_trace.size(); ++t) {
    const std::size_t pc = std::min<std::size_t>(golden_hardened.pc_trace[t], hp.program.code.size());
    occurrences_[pc].push_back(t);
  }
}

std::optional<FaultSpec> Remapper::remap(const FaultSpec& f) const {
  if (f.time >= original_->pc_trace.size()) return std::nullopt;
  const std::uint32_t pc = original_->pc_trace[f.time];
  if (pc >= hp_->pc_map.size()) return std::nullopt;
  const std::uint32_t image = f.target == FaultTarget::Register ? hp_->entry_map[pc] : hp_->primary(pc);
  const auto& times = occurrences_.at(image);
  const std::uint32_t k = ordinal_[f.time];
  if (k >= times.size()) return std::nullopt;
  FaultSpec out = f;
  out.time = times[k];
  return out;
}

std::optional<FaultSpec> remap_fault(const FaultSpec& f, const HardenedProgram& hp, const ExecTrace& golden_original,
                                     const ExecTrace& golden_hardened) {
  return Remapper(hp, golden_original, golden_hardened).remap(f);
}

Classification classify(const ExecTrace& golden, const ExecTrace& faulty, std::optional<std::size_t> data_words) {
  Classification c;
  c.comparison = compare_traces(golden, faulty, data_words);
  switch (faulty.status) {
    case Status::Detected: c.outcome = Outcome::Detected; break;
    case Status::TimedOut: c.outcome = Outcome::Hang; break;
    case Status::HardwareTrap: c.outcome = Outcome::HardwareTrap; break;
    default: {
      const std::size_t n =
          std::min({data_words.value_or(SIZE_MAX), golden.final_data.size(), faulty.final_data.size()});
      const bool same = std::equal(golden.final_data.begin(), golden.final_data.begin() + static_cast<std::ptrdiff_t>(n),
                                   faulty.final_data.begin());
      c.outcome = same ? Outcome::Masked : Outcome::SDC;
    }
  }
  return c;
}

Drawback classify_drawback(Outcome outcome, EffectClass effect, const ControlFlowGraph& cfg, std::uint32_t code_end,
                           std::optional<std::uint64_t> expected_pc, std::optional<std::uint64_t> actual_pc) {
  if (effect != EffectClass::FlowEffect || (outcome != Outcome::SDC && outcome != Outcome::Hang)) {
    return Drawback::NotApplicable;
  }
  if (!actual_pc) return Drawback::Other;
  const std::uint64_t actual = *actual_pc;
  if (actual >= code_end) return Drawback::UnusedMemory;
  if (actual >= cfg.block_of.size()) return Drawback::Other;  // the detection handler
  const auto pc = static_cast<std::uint32_t>(actual);
  if (cfg.is_block_start(pc)) return Drawback::BlockStart;
  if (expected_pc && *expected_pc < cfg.block_of.size() &&
      cfg.block_of[static_cast<std::size_t>(*expected_pc)] == cfg.block_of[pc]) {
    return Drawback::IntraBlock;
  }
  return Drawback::Other;
}

Injector::Injector(const Program& p, std::uint64_t limit_mult, std::optional<std::size_t> result_words,
                   SimOptions opts)
    : sim_(p, opts), cfg_(build_cfg(p)), result_words_(result_words) {
  if (limit_mult == 0) throw Error("limit multiplier must be positive");
  // The golden budget is only a guard against a non-terminating workload.
  constexpr std::uint64_t kGoldenBudget = 100'000'000;
  golden_ = sim_.run(kGoldenBudget);
  if (golden_.status != Status::Halted) {
    throw Error(fmt::format("golden run ended with status {}", status_name(golden_.status)));
  }
  limit_ = limit_mult * golden_.dyn_count;
}

CampaignRecord Injector::inject(const FaultSpec& f) const {
  const ExecTrace t = sim_.run(limit_, &f);
  const Classification c = classify(golden_, t, result_words_);
  CampaignRecord r;
  r.fault = f;
  r.outcome = c.outcome;
  r.effect = c.comparison.effect;
  r.divergence = c.comparison.divergence;
  r.expected_pc = c.comparison.expected_pc;
  r.actual_pc = c.comparison.actual_pc;
  r.dyn_count = t.dyn_count;
  r.drawback = classify_drawback(r.outcome, r.effect, cfg_, sim_.code_end(), r.expected_pc, r.actual_pc);
  return r;
}

std::vector<CampaignRecord> inject_all(const Injector& inj, std::span<const FaultSpec> faults, unsigned jobs) {
  std::vector<CampaignRecord> out(faults.size());
  parallel_for(faults.size(), jobs, [&](std::size_t i) { out[i] = inj.inject(faults[i]); });
  return out;
}

DetectionCell CampaignSummary::kind_total(FaultKind k, EffectClass effect) const {
  DetectionCell total;
  const std::size_t e = effect == EffectClass::FlowEffect ? 1 : 0;
  for (const auto& src : cells[kind_index(k)]) total.add(src[e]);
  return total;
}

DetectionCell CampaignSummary::overall() const {
  DetectionCell total;
  for (const auto& kind : cells)
    for (const auto& src : kind)
      for (const auto& cell : src) total.add(cell);
  return total;
}

std::uint32_t CampaignSummary::undetected_flow() const {
  std::uint32_t n = 0;
  for (auto d : drawbacks) n += d;
  return n;
}

void CampaignSummary::merge(const CampaignSummary& o) {
  total_faults += o.total_faults;
  error_faults += o.error_faults;
  replaced += o.replaced;
  failed += o.failed;
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t s = 0; s < 4; ++s)
      for (std::size_t e = 0; e < 2; ++e) cells[k][s][e].add(o.cells[k][s][e]);
  for (std::size_t i = 0; i < outcomes.size(); ++i) outcomes[i] += o.outcomes[i];
  for (std::size_t i = 0; i < drawbacks.size(); ++i) drawbacks[i] += o.drawbacks[i];
}

CampaignSummary summarize(std::string version, std::span<const VersionRecord> records,
                          std::span<const FaultPoint> points) {
  CampaignSummary s;
  s.version = std::move(version);
  for (const auto& pt : points) ++s.points[kind_index(pt.kind)][source_index(source_of(pt.target))];
  for (const auto& r : records) {
    if (!r.error.empty()) {
      ++s.failed;
      continue;
    }
    ++s.total_faults;
    if (r.replaced) ++s.replaced;
    ++s.outcomes[static_cast<std::size_t>(r.hardened.outcome)];
    if (r.hardened.drawback != Drawback::NotApplicable) ++s.drawbacks[static_cast<std::size_t>(r.hardened.drawback)];
    if (r.baseline.outcome == Outcome::Masked || r.baseline.effect == EffectClass::NoEffect) continue;
    ++s.error_faults;
    auto& cell = s.cells[kind_index(r.original.kind)][source_index(r.original.source())]
                        [r.baseline.effect == EffectClass::FlowEffect ? 1 : 0];
    ++cell.faults;
    if (r.hardened.outcome == Outcome::Detected) ++cell.detected;
  }
  return s;
}

CampaignResult run_campaign(const Program& original, std::span<const HardeningConfig> configs,
                            const CampaignOptions& opts, std::string workload) {
  CampaignResult result;
  result.workload = std::move(workload);
  result.options = opts;

  const Injector base(original, opts.limit_mult, std::nullopt, opts.sim);
  result.golden_dyn_count = base.golden().dyn_count;
  const std::vector<FaultPoint> points = enumerate_points(base.simulator());
  result.faults = generate_fault_list(original, base.golden(), opts.per_point, opts.seed, opts.sim);
  const auto& faults = result.faults.faults;

  std::vector<CampaignRecord> baseline(faults.size());
  std::vector<std::string> baseline_error(faults.size());
  parallel_for(faults.size(), opts.jobs, [&](std::size_t i) {
    try {
      baseline[i] = base.inject(faults[i]);
    } catch (const std::exception& e) {
      baseline_error[i] = e.what();
    }
  });

  for (std::size_t v = 0; v < configs.size(); ++v) {
    const HardeningConfig& cfg = configs[v];
    const HardenedProgram hp = apply_all(original, cfg);
    const Injector hard(hp.program, opts.limit_mult, original.data.size(), opts.sim);
    const Remapper remapper(hp, base.golden(), hard.golden());

    VersionResult vr;
    vr.config = cfg;
    vr.name = cfg.name();
    vr.golden_dyn_count = hard.golden().dyn_count;
    vr.records.resize(faults.size());

    // Remapping (and redrawing unmappable faults) is sequential so the
    // replacement stream does not depend on the worker count.
    std::vector<std::optional<FaultSpec>> remapped(faults.size());
    for (std::size_t i = 0; i < faults.size(); ++i) {
      VersionRecord& rec = vr.records[i];
      rec.index = i;
      rec.original = faults[i];
      rec.baseline = baseline[i];
      rec.error = baseline_error[i];
      remapped[i] = remapper.remap(faults[i]);
      if (remapped[i]) continue;
      rec.replaced = true;
      std::mt19937_64 rng(mix(opts.seed, mix(v, i)));
      const FaultPoint pt{faults[i].kind, faults[i].target, faults[i].reg, faults[i].bit};
      for (int attempt = 0; attempt < 64 && !remapped[i]; ++attempt) {
        rec.original = at_time(pt, uniform_below(rng, base.golden().dyn_count));
        remapped[i] = remapper.remap(rec.original);
      }
      if (!remapped[i]) {
        rec.error = "fault could not be mapped into the hardened program";
        continue;
      }
      try {
        rec.baseline = base.inject(rec.original);
        rec.error.clear();
      } catch (const std::exception& e) {
        rec.error = e.what();
      }
    }

    parallel_for(faults.size(), opts.jobs, [&](std::size_t i) {
      VersionRecord& rec = vr.records[i];
      if (!rec.error.empty() || !remapped[i]) return;
      try {
        rec.hardened = hard.inject(*remapped[i]);
      } catch (const std::exception& e) {
        rec.error = e.what();
      }
    });

    vr.summary = summarize(vr.name, vr.records, points);
    result.versions.push_back(std::move(vr));
  }
  return result;
}

}  // namespace sihft
