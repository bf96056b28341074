#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sihft/cfg.hpp"
#include "sihft/hardener.hpp"
#include "sihft/sim.hpp"

namespace sihft {

enum class Outcome : std::uint8_t { Masked, Detected, SDC, Hang, HardwareTrap };
enum class Drawback : std::uint8_t { IntraBlock, BlockStart, UnusedMemory, Other, NotApplicable };

inline constexpr std::size_t kNumOutcomes = 5;
inline constexpr std::size_t kNumDrawbackClasses = 4;  // excluding NotApplicable

std::string_view outcome_name(Outcome o);
std::string_view drawback_name(Drawback d);

struct FaultPoint {
  FaultKind kind;
  FaultTarget target;
  std::uint8_t reg = 0;
  std::uint8_t bit = 0;

  friend bool operator==(const FaultPoint&, const FaultPoint&) = default;
};

/// Every injectable (kind, target, register, bit) for a program on `sim`.
/// Registers r1-r31 for register points; PC bits up to the simulator's PC width.
std::vector<FaultPoint> enumerate_points(const Simulator& sim);

struct FaultList {
  std::vector<FaultSpec> faults;
  std::uint64_t seed = 0;
  unsigned per_point = 3;
};

/// Between 3 and `per_point` faults per fault point (exactly 3 when
/// per_point == 3), injection times uniform over [0, golden.dyn_count).
FaultList generate_fault_list(const Program& p, const ExecTrace& golden, unsigned per_point, std::uint64_t seed,
                              SimOptions opts = {});

/// `count` faults drawn uniformly over the points whose target is in
/// `targets`, times uniform over the golden run.
std::vector<FaultSpec> sample_faults(const Program& p, const ExecTrace& golden, std::size_t count,
                                     std::uint64_t seed, std::span<const FaultTarget> targets, SimOptions opts = {});

/// Moves a fault timed against the original program's golden run onto the
/// hardened program's golden run: same dynamic occurrence of the image of
/// the instruction executing at that time. Register SEUs land ahead of the
/// image's consistency checks; every other fault hits the primary image.
class Remapper {
 public:
  Remapper(const HardenedProgram& hp, const ExecTrace& golden_original, const ExecTrace& golden_hardened);
  std::optional<FaultSpec> remap(const FaultSpec& f) const;

 private:
  const HardenedProgram* hp_;
  const ExecTrace* original_;
  std::vector<std::uint32_t> ordinal_;                   // per original dynamic index
  std::vector<std::vector<std::uint64_t>> occurrences_;  // hardened pc -> dynamic indices
};

std::optional<FaultSpec> remap_fault(const FaultSpec& f, const HardenedProgram& hp, const ExecTrace& golden_original,
                                     const ExecTrace& golden_hardened);

struct Classification {
  Outcome outcome = Outcome::Masked;
  Comparison comparison;
};

Classification classify(const ExecTrace& golden, const ExecTrace& faulty,
                        std::optional<std::size_t> data_words = std::nullopt);

/// Only undetected (SDC / Hang) flow faults get a class; NotApplicable
/// otherwise. `code_end` is the first NOP-fill index (one past the handler).
Drawback classify_drawback(Outcome outcome, EffectClass effect, const ControlFlowGraph& cfg, std::uint32_t code_end,
                           std::optional<std::uint64_t> expected_pc, std::optional<std::uint64_t> actual_pc);

struct CampaignRecord {
  FaultSpec fault;
  Outcome outcome = Outcome::Masked;
  EffectClass effect = EffectClass::NoEffect;
  Drawback drawback = Drawback::NotApplicable;
  std::optional<std::uint64_t> divergence;
  std::optional<std::uint64_t> expected_pc;
  std::optional<std::uint64_t> actual_pc;
  std::uint64_t dyn_count = 0;
};

/// Golden run plus everything needed to classify faults on one program.
class Injector {
 public:
  /// `result_words`: prefix of the data segment holding the program's
  /// results (the original range for hardened programs).
  Injector(const Program& p, std::uint64_t limit_mult, std::optional<std::size_t> result_words = std::nullopt,
           SimOptions opts = {});

  CampaignRecord inject(const FaultSpec& f) const;

  const ExecTrace& golden() const { return golden_; }
  const Simulator& simulator() const { return sim_; }
  const ControlFlowGraph& cfg() const { return cfg_; }
  std::uint64_t limit() const { return limit_; }

 private:
  Simulator sim_;
  ExecTrace golden_;
  ControlFlowGraph cfg_;
  std::uint64_t limit_ = 0;
  std::optional<std::size_t> result_words_;
};

struct DetectionCell {
  std::uint32_t faults = 0;
  std::uint32_t detected = 0;

  void add(const DetectionCell& o) {
    faults += o.faults;
    detected += o.detected;
  }
};

/// Aggregates for one hardened version. Detection cells are keyed by the
/// effect each fault had on the unhardened program and only count faults
/// that produced an error there (not Masked).
struct CampaignSummary {
  std::string version;
  std::uint32_t total_faults = 0;
  std::uint32_t error_faults = 0;
  std::uint32_t replaced = 0;
  std::uint32_t failed = 0;
  // [kind][source][0 = data, 1 = flow]
  std::array<std::array<std::array<DetectionCell, 2>, 4>, 2> cells{};
  std::array<std::array<std::uint32_t, 4>, 2> points{};  // fault points per kind x source
  std::array<std::uint32_t, kNumOutcomes> outcomes{};
  std::array<std::uint32_t, kNumDrawbackClasses> drawbacks{};

  DetectionCell overall() const;
  DetectionCell kind_total(FaultKind k, EffectClass effect) const;
  std::uint32_t undetected_flow() const;

  void merge(const CampaignSummary& o);
};

struct VersionRecord {
  std::size_t index = 0;   // position in the fault list
  FaultSpec original;      // fault as timed on the original program
  bool replaced = false;   // original fault was unmappable and redrawn
  CampaignRecord baseline; // effect on the original program
  CampaignRecord hardened; // effect on the hardened program (remapped)
  std::string error;       // non-empty if the injection itself failed
};

struct VersionResult {
  HardeningConfig config;
  std::string name;
  std::uint64_t golden_dyn_count = 0;
  std::vector<VersionRecord> records;
  CampaignSummary summary;
};

struct CampaignOptions {
  unsigned per_point = 3;
  std::uint64_t seed = 1;
  std::uint64_t limit_mult = 10;
  unsigned jobs = 1;
  SimOptions sim;
};

struct CampaignResult {
  std::string workload;
  CampaignOptions options;
  FaultList faults;
  std::uint64_t golden_dyn_count = 0;
  std::vector<VersionResult> versions;
};

CampaignSummary summarize(std::string version, std::span<const VersionRecord> records,
                          std::span<const FaultPoint> points);

/// Runs the same seeded fault list against each configuration. Faults are
/// independent; `jobs` workers share them and results keep list order.
CampaignResult run_campaign(const Program& original, std::span<const HardeningConfig> configs,
                            const CampaignOptions& opts, std::string workload = "program");

/// Runs `faults` directly on `p` (no remapping).
std::vector<CampaignRecord> inject_all(const Injector& inj, std::span<const FaultSpec> faults, unsigned jobs = 1);

}  // namespace sihft
