// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "sihft/campaign.hpp"
#include "sihft/cfg.hpp"
#include "sihft/hardener.hpp"
#include "sihft/report.hpp"
#include "sihft/sim.hpp"
#include "sihft/workloads.hpp"
#include "support.hpp"

using namespace sihft;

namespace {

constexpr std::uint64_t kBudget = 10'000'000;

struct Verdict {
  bool pass = true;
  std::string detail;
  void fail(const std::string& why) {
    if (pass) detail.clear();
    if (!detail.empty()) detail += "; ";
    detail += why;
    pass = false;
  }
};

const HardeningConfig& config_named(const std::vector<HardeningConfig>& v, bool var, bool inv, bool sig) {
  for (const auto& c : v)
    if (c.variables == var && c.inverted_branches == inv && c.signatures == sig) return c;
  throw Error("missing configuration");
}

// 1. Fault-free hardened runs reproduce the original results and never
// reach the error handler.
Verdict transparency() {
  Verdict v;
  int runs = 0;
  for (const char* name : {"matmul-2", "matmul-6", "bubblesort", "checksum"}) {
    const Program p = parse(find_workload(name)->source);
    const ExecTrace g = run_golden(p, kBudget);
    for (const auto& cfg : standard_versions()) {
      const HardenedProgram hp = apply_all(p, cfg);
      const ExecTrace t = Simulator(hp.program).run(kBudget);
      ++runs;
      const bool same = t.final_data.size() >= g.final_data.size() &&
                        std::equal(g.final_data.begin(), g.final_data.end(), t.final_data.begin());
      const bool handler = std::count(t.pc_trace.begin(), t.pc_trace.end(), hp.program.error_index()) > 0;
      if (t.status != Status::Halted || !same || handler)
        v.fail(fmt::format("{} under {}: {}", name, cfg.name(), status_name(t.status)));
    }
  }
  if (v.pass) v.detail = fmt::format("{} hardened runs match", runs);
  return v;
}

// 2. The three worked examples, instruction by instruction.
Verdict examples() {
  Verdict v;
  auto check = [](const Program& h, std::uint32_t i, unsigned a, unsigned b) {
    const Instruction& in = h.code[i];
    return in.op == Opcode::Bne && h.branch_target(i) == h.error_index() &&
           ((in.rs == a && in.rt == b) || (in.rs == b && in.rt == a));
  };

  const HardenedProgram f1 =
      apply_variables(parse(oracle::kExampleVariables), HardeningConfig::only_variables());
  const std::uint32_t b1 = f1.entry_map[0];
  const std::size_t n1 = f1.pc_map[2].back() - b1 + 1;
  const auto& c1 = f1.program.code;
  const bool ok1 = n1 == 10 && check(f1.program, b1, 4, 20) && c1[b1 + 1] == ins::ld(1, 4, 0) &&
                   c1[b1 + 2] == ins::ld(17, 20, 16) && check(f1.program, b1 + 3, 2, 18) &&
                   c1[b1 + 4] == ins::addi(1, 2, 1) && c1[b1 + 5] == ins::addi(17, 18, 1) &&
                   check(f1.program, b1 + 6, 1, 17) && check(f1.program, b1 + 7, 2, 18) &&
                   c1[b1 + 8] == ins::st(1, 0, 2) && c1[b1 + 9] == ins::st(17, 16, 18);
  if (!ok1) v.fail(fmt::format("variables example: {} instructions", n1));

  const HardenedProgram f2 =
      apply_inverted_branches(parse(oracle::kExampleInverted), HardeningConfig::only_inverted_branches());
  const std::uint32_t b2 = f2.primary(0);
  const std::size_t n2 = f2.primary(3) - b2 + 1;
  const Program& h2 = f2.program;
  const bool ok2 = n2 == 7 && h2.code[b2].op == Opcode::Beq && h2.branch_target(b2) == b2 + 4 &&
                   h2.code[b2 + 1].op == Opcode::Beq && h2.branch_target(b2 + 1) == h2.error_index() &&
                   h2.code[b2 + 2] == ins::addi(2, 3, 1) && h2.code[b2 + 3] == ins::jump(b2 + 5) &&
                   h2.code[b2 + 4].op == Opcode::Bne && h2.branch_target(b2 + 4) == h2.error_index() &&
                   h2.code[b2 + 5] == ins::addi(2, 3, 9) && h2.code[b2 + 6].op == Opcode::Jump;
  if (!ok2) v.fail(fmt::format("inverted-branch example: {} instructions", n2));

  const HardeningConfig sc = HardeningConfig::only_signatures();
  const HardenedProgram f3 = apply_signatures(parse(oracle::kExampleSignatures), sc);
  const std::uint32_t b3 = f3.primary(1);
  const std::size_t n3 = f3.primary(5) - b3 + 1;
  const auto& c3 = f3.program.code;
  const unsigned s = sc.signature_reg;
  const bool ok3 = n3 == 9 && c3[b3].op == Opcode::Beq && c3[b3 + 1] == ins::addi(s, 0, 2) &&
                   c3[b3 + 2] == ins::addi(2, 3, 1) && c3[b3 + 3] == ins::bnei(s, 2) &&
                   c3[b3 + 4] == ins::addi(s, 0, 3) && c3[b3 + 5] == ins::addi(2, 3, 9) &&
                   c3[b3 + 6] == ins::st(1, 0, 2) && c3[b3 + 7] == ins::bnei(s, 3) &&
                   c3[b3 + 8].op == Opcode::Jump;
  if (!ok3) v.fail(fmt::format("signature example: {} instructions", n3));

  if (v.pass) v.detail = fmt::format("windows of {}, {}, {} instructions match", n1, n2, n3);
  return v;
}

// 3. Register-bank SEUs r1-r13, every bit, 25 sampled times, matmul-3 under
// duplicated variables.
Verdict variables_coverage() {
  Verdict v;
  const Program p = parse(matmul(3).source);
  const HardenedProgram hp = apply_all(p, HardeningConfig::only_variables());
  const Injector base(p, 10);
  const Injector hard(hp.program, 10, p.data.size());
  const Remapper remap(hp, base.golden(), hard.golden());

  std::mt19937_64 rng(2010);
  std::vector<std::uint64_t> times;
  while (times.size() < 25) {
    const std::uint64_t t = rng() % base.golden().dyn_count;
    if (std::find(times.begin(), times.end(), t) == times.end()) times.push_back(t);
  }
  std::size_t injected = 0, data_errors = 0, detected = 0, escapes = 0, unmapped = 0;
  for (std::uint64_t t : times) {
    for (unsigned r = 1; r <= 13; ++r) {
      for (unsigned bit = 0; bit < 32; ++bit) {
        const FaultSpec f{FaultKind::Seu, FaultTarget::Register, static_cast<std::uint8_t>(r),
                          static_cast<std::uint8_t>(bit), t};
        ++injected;
        const CampaignRecord b = base.inject(f);
        if (b.outcome == Outcome::Masked || b.effect != EffectClass::DataEffect) continue;
        ++data_errors;
        const auto g = remap.remap(f);
        if (!g) {
          ++unmapped;
          continue;
        }
        const CampaignRecord h = hard.inject(*g);
        if (h.outcome == Outcome::Detected) ++detected;
        if (h.outcome == Outcome::SDC) ++escapes;
      }
    }
  }
  if (data_errors == 0) v.fail("no data errors produced");
  if (detected != data_errors) v.fail(fmt::format("{} of {} data errors detected", detected, data_errors));
  if (escapes != 0) v.fail(fmt::format("{} silent corruptions", escapes));
  if (unmapped != 0) v.fail(fmt::format("{} unmappable", unmapped));
  if (v.pass) v.detail = fmt::format("{} faults, {} data errors, all detected, 0 SDC", injected, data_errors);
  return v;
}

// 4. Flip the comparison result of every dynamic conditional branch in
// matmul-3 hardened with inverted branches.
Verdict inverted_coverage() {
  Verdict v;
  const Program p = parse(matmul(3).source);
  const HardenedProgram hp = apply_all(p, HardeningConfig::only_inverted_branches());
  const Injector hard(hp.program, 10, p.data.size());
  std::vector<std::uint32_t> branch_pcs;
  for (std::uint32_t i = 0; i < p.code.size(); ++i)
    if (p.code[i].op == Opcode::Beq || p.code[i].op == Opcode::Bne) branch_pcs.push_back(hp.primary(i));
  std::size_t total = 0, detected = 0;
  const auto& trace = hard.golden().pc_trace;
  for (std::uint64_t t = 0; t < trace.size(); ++t) {
    if (std::find(branch_pcs.begin(), branch_pcs.end(), trace[t]) == branch_pcs.end()) continue;
    const FaultSpec f{FaultKind::Set, FaultTarget::AluResult, 0, 0, t};
    ++total;
    if (hard.inject(f).outcome == Outcome::Detected) ++detected;
  }
  if (total == 0 || detected != total)
    v.fail(fmt::format("{} of {} inverted decisions detected", detected, total));
  else
    v.detail = fmt::format("{} branch executions over {} branches, 100.0% detected", total, branch_pcs.size());
  return v;
}

// 5. PC SEUs and instruction-word SETs on matmul-6 under signatures.
Verdict signature_drawbacks() {
  Verdict v;
  const Program p = parse(matmul(6).source);
  const HardenedProgram hp = apply_all(p, HardeningConfig::only_signatures());
  const Injector base(p, 10);
  const Injector hard(hp.program, 10, p.data.size());
  const Remapper remap(hp, base.golden(), hard.golden());
  const std::vector<FaultTarget> targets{FaultTarget::PcRegister, FaultTarget::InstrWord};
  const auto faults = sample_faults(p, base.golden(), 500, 2010, targets);
  std::vector<std::uint32_t> counts(kNumDrawbackClasses, 0);
  std::size_t unmapped = 0;
  for (const auto& f : faults) {
    const auto g = remap.remap(f);
    if (!g) {
      ++unmapped;
      continue;
    }
    const CampaignRecord r = hard.inject(*g);
    if (r.drawback != Drawback::NotApplicable) ++counts[static_cast<std::size_t>(r.drawback)];
  }
  const auto tenths = distribution_tenths(counts);
  std::uint32_t sum = 0;
  for (auto t : tenths) sum += t;
  std::string dist;
  for (std::size_t i = 0; i < counts.size(); ++i)
    dist += fmt::format("{}{} {} ({}.{}%)", i ? ", " : "", drawback_name(static_cast<Drawback>(i)), counts[i],
                        tenths[i] / 10, tenths[i] % 10);
  for (Drawback d : {Drawback::IntraBlock, Drawback::BlockStart, Drawback::UnusedMemory})
    if (counts[static_cast<std::size_t>(d)] == 0) v.fail(fmt::format("no {} faults", drawback_name(d)));
  if (sum != 1000) v.fail(fmt::format("percentages sum to {}.{}", sum / 10, sum % 10));
  v.detail += (v.pass ? "" : "; ") + dist + fmt::format(", unmapped {}", unmapped);
  return v;
}

// 6. Hand-built PC upsets on matmul-2 under signatures, enumerated over the
// whole golden run: skips inside a block once its signature is set, jumps
// onto block starts, and jumps into the NOP fill. Upsets taken at a block's
// first instruction skip the signature update itself; those are counted
// apart since the end-of-block check is expected to catch them.
Verdict drawback_mechanisms() {
  Verdict v;
  const Program p = parse(matmul(2).source);
  const HardenedProgram hp = apply_all(p, HardeningConfig::only_signatures());
  const Injector hard(hp.program, 10, p.data.size());
  const ControlFlowGraph& cfg = hard.cfg();
  const Simulator& sim = hard.simulator();
  const auto& trace = hard.golden().pc_trace;
  std::vector<bool> is_start(hp.program.code.size(), false);
  for (const auto& b : cfg.blocks) is_start[b.start] = true;

  struct Tally {
    std::size_t faults = 0, errors = 0, classified = 0, detected = 0, timed_out = 0;
  } intra, start, fill;
  std::size_t over_update = 0, over_update_detected = 0;
  for (std::uint64_t t = 0; t < trace.size(); ++t) {
    const std::uint32_t pc = trace[t];
    for (unsigned bit = 0; bit < sim.pc_bits(); ++bit) {
      const std::uint32_t to = pc ^ (1u << bit);
      Tally* tally = nullptr;
      Drawback want = Drawback::Other;
      if (to >= sim.code_end()) {
        tally = &fill;
        want = Drawback::UnusedMemory;
      } else if (to < hp.program.code.size() && is_start[to]) {
        tally = &start;
        want = Drawback::BlockStart;
      } else if (to < hp.program.code.size() && cfg.block_of[to] == cfg.block_of[pc] && is_start[pc]) {
        ++over_update;
        const auto r = hard.inject({FaultKind::Seu, FaultTarget::PcRegister, 0, static_cast<std::uint8_t>(bit), t});
        if (r.outcome == Outcome::Detected) ++over_update_detected;
        continue;
      } else if (to < hp.program.code.size() && cfg.block_of[to] == cfg.block_of[pc]) {
        tally = &intra;
        want = Drawback::IntraBlock;
      }
      if (!tally) continue;
      const CampaignRecord r =
          hard.inject({FaultKind::Seu, FaultTarget::PcRegister, 0, static_cast<std::uint8_t>(bit), t});
      ++tally->faults;
      if (r.outcome == Outcome::Detected) ++tally->detected;
      if (r.outcome == Outcome::Hang) ++tally->timed_out;
      if (r.outcome == Outcome::SDC || r.outcome == Outcome::Hang) {
        ++tally->errors;
        if (r.drawback == want) ++tally->classified;
      }
    }
  }
  auto judge = [&](const char* what, const Tally& x) {
    if (x.errors == 0) v.fail(fmt::format("no erroneous {} fault", what));
    if (x.classified != x.errors) v.fail(fmt::format("{}: {} of {} classified", what, x.classified, x.errors));
    if (x.detected != 0) v.fail(fmt::format("{}: {} detected", what, x.detected));
  };
  judge("intra-block", intra);
  judge("block-start", start);
  judge("nop-fill", fill);
  if (fill.timed_out != fill.faults) v.fail(fmt::format("nop-fill: {} of {} timed out", fill.timed_out, fill.faults));
  if (v.pass)
    v.detail = fmt::format(
        "intra-block {}/{}, block-start {}/{}, nop-fill {}/{} timed out; none detected "
        "({} of {} skips over a signature update detected)",
        intra.classified, intra.faults, start.classified, start.faults, fill.timed_out, fill.faults,
        over_update_detected, over_update);
  return v;
}

struct Campaigns {
  CampaignResult matmul3;
  CampaignResult bubblesort;
};

const Campaigns& campaigns() {
  static const Campaigns c = [] {
    CampaignOptions opts;
    opts.seed = 2010;
    const auto configs = standard_versions();
    return Campaigns{run_campaign(parse(matmul(3).source), configs, opts, "matmul-3"),
                     run_campaign(parse(bubble_sort().source), configs, opts, "bubblesort")};
  }();
  return c;
}

const CampaignSummary& summary_of(const CampaignResult& r, bool var, bool inv, bool sig) {
  for (const auto& vr : r.versions)
    if (vr.config.variables == var && vr.config.inverted_branches == inv && vr.config.signatures == sig)
      return vr.summary;
  throw Error("missing version");
}

// 7. all >= variables >= signatures on the same seeded fault list.
Verdict monotonicity() {
  Verdict v;
  for (const CampaignResult* r : {&campaigns().matmul3, &campaigns().bubblesort}) {
    const DetectionCell s = summary_of(*r, false, false, true).overall();
    const DetectionCell d = summary_of(*r, true, false, false).overall();
    const DetectionCell a = summary_of(*r, true, true, true).overall();
    // compare detected/faults exactly by cross-multiplying
    auto ge = [](const DetectionCell& x, const DetectionCell& y) {
      return std::uint64_t{x.detected} * y.faults >= std::uint64_t{y.detected} * x.faults;
    };
    const std::string line = fmt::format("{}: all {}% >= variables {}% >= signatures {}%", r->workload,
                                         format_percent(a.detected, a.faults), format_percent(d.detected, d.faults),
                                         format_percent(s.detected, s.faults));
    if (!ge(a, d) || !ge(d, s)) v.fail(line);
    else v.detail += (v.detail.empty() ? "" : "; ") + line;
  }
  return v;
}

// 8. Code and data growth on matmul-6.
Verdict overheads() {
  Verdict v;
  const auto configs = standard_versions();
  const OverheadReport o = compute_overheads(parse(matmul(6).source), configs);
  auto row = [&](const HardeningConfig& c) -> const OverheadRow& {
    for (const auto& r : o.rows)
      if (r.version == c.name()) return r;
    throw Error("missing overhead row");
  };
  const double all_code = row(config_named(configs, true, true, true)).code_ratio;
  const double var_data = row(config_named(configs, true, false, false)).data_ratio;
  const double inv_data = row(config_named(configs, false, true, false)).data_ratio;
  v.detail = fmt::format("all code x{:.2f}, variables data x{:.2f}, inverted-branches data x{:.2f}", all_code,
                         var_data, inv_data);
  if (all_code < 1.5 || all_code > 4.0 || var_data < 1.9 || var_data > 2.1 || inv_data != 1.0) v.pass = false;
  return v;
}

// 9. Same seed, byte-identical CSVs; unmappable faults stay rare.
Verdict determinism() {
  Verdict v;
  CampaignOptions opts;
  opts.seed = 2010;
  opts.jobs = 3;
  const auto configs = standard_versions();
  const CampaignResult again = run_campaign(parse(matmul(3).source), configs, opts, "matmul-3");
  const CampaignResult& first = campaigns().matmul3;
  const auto overhead = compute_overheads(parse(matmul(3).source), configs);
  if (records_csv(again) != records_csv(first)) v.fail("records differ");
  if (render_csv(make_report(again, overhead)) != render_csv(make_report(first, overhead))) v.fail("summary differs");
  std::uint32_t worst = 0;
  std::uint32_t total = 0;
  for (const CampaignResult* r : {&first, &campaigns().bubblesort}) {
    for (const auto& vr : r->versions) {
      worst = std::max(worst, vr.summary.replaced * 1000 / std::max(vr.summary.total_faults, 1u));
      total = std::max(total, vr.summary.total_faults);
    }
  }
  if (worst > 50) v.fail(fmt::format("replaced up to {}.{}%", worst / 10, worst % 10));
  if (v.pass) v.detail = fmt::format("records and summary identical across 1 and 3 workers; replaced at most {}.{}%",
                                     worst / 10, worst % 10);
  return v;
}

// 10. Independent oracles: codec, block leaders, matrix product.
Verdict oracles() {
  Verdict v;
  std::mt19937_64 rng(7);
  for (int n = 0; n < 10000; ++n) {
    const Instruction i = oracle::random_instruction(rng);
    if (!(decode(encode(i)) == i)) {
      v.fail(fmt::format("codec mismatch on {}", mnemonic(i.op)));
      break;
    }
  }
  std::mt19937_64 prng(42);
  for (int n = 0; n < 1000; ++n) {
    const Program p = oracle::random_program(prng);
    const auto g = build_cfg(p);
    std::set<std::uint32_t> starts;
    std::size_t covered = 0;
    for (const auto& b : g.blocks) {
      starts.insert(b.start);
      covered += b.end - b.start + 1;
    }
    if (starts != oracle::oracle_leaders(p) || covered != p.code.size()) {
      v.fail(fmt::format("leader mismatch on random program {}", n));
      break;
    }
  }
  for (unsigned n = 2; n <= 8; ++n) {
    const auto [a, b] = matmul_inputs(n);
    const auto want = oracle::host_product(a, b);
    const ExecTrace t = run_golden(parse(matmul(n).source), kBudget);
    for (std::size_t i = 0; i < n * n; ++i) {
      if (static_cast<std::int32_t>(t.final_data[2 * n * n + i]) != want[i]) {
        v.fail(fmt::format("matmul-{} element {}", n, i));
        break;
      }
    }
  }
  if (v.pass) v.detail = "10000 codec round trips, 1000 random CFGs, matmul-2..8 products agree";
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"semantic transparency", transparency},
      {"worked examples", examples},
      {"variables coverage", variables_coverage},
      {"inverted-branch coverage", inverted_coverage},
      {"signature drawback classes", signature_drawbacks},
      {"drawback mechanisms", drawback_mechanisms},
      {"coverage monotonicity", monotonicity},
      {"overhead ratios", overheads},
      {"determinism and remapping", determinism},
      {"oracle equivalence", oracles},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.fail(fmt::format("exception: {}", e.what()));
    }
    if (!v.pass) ++failed;
    fmt::print("{} {:>2} {}: {}\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
