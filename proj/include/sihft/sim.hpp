#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sihft/program.hpp"

namespace sihft {

enum class FaultKind : std::uint8_t { Seu, Set };
enum class FaultSource : std::uint8_t { RegBank, Alu, Datapath, Controlpath };

/// Architectural point a fault hits. Register and PcRegister SEUs persist
/// in state; everything else corrupts one value of the instruction
/// executing at the fault time.
enum class FaultTarget : std::uint8_t {
  Register,     // RegBank SEU: stored register bit
  RegReadPort,  // RegBank SET: value read from a register
  AluResult,    // ALU: arithmetic result, or bit 0 = branch comparison outcome
  PcRegister,   // Controlpath SEU
  InstrWord,    // Controlpath SET: fetched instruction word
  MemAddr,      // Datapath: effective address of a load/store
  MemData,      // Datapath: loaded or stored value
};

std::string_view kind_name(FaultKind k);
std::string_view source_name(FaultSource s);
std::string_view target_name(FaultTarget t);
FaultSource source_of(FaultTarget t);

struct FaultSpec {
  FaultKind kind = FaultKind::Seu;
  FaultTarget target = FaultTarget::Register;
  std::uint8_t reg = 0;   // Register / RegReadPort only
  std::uint8_t bit = 0;
  std::uint64_t time = 0;  // dynamic instruction index the fault takes effect at

  FaultSource source() const { return source_of(target); }
  friend bool operator==(const FaultSpec&, const FaultSpec&) = default;
};

std::string describe(const FaultSpec& f);

class InvalidFault : public Error {
 public:
  using Error::Error;
};

enum class Status : std::uint8_t { Running, Halted, Detected, HardwareTrap, TimedOut };
std::string_view status_name(Status s);

struct ExecTrace {
  std::vector<std::uint32_t> pc_trace;  // pc of every executed instruction
  std::vector<Word> final_data;
  Status status = Status::Running;
  std::uint64_t dyn_count = 0;
  std::uint64_t next_pc = 0;  // pc the machine would fetch next when it stopped
};

struct SimOptions {
  std::uint32_t region_factor = 4;  // code region = factor x (code + handler), NOP filled
};

/// Instruction-level machine for one program. Immutable after construction,
/// so one instance can serve concurrent runs.
class Simulator {
 public:
  explicit Simulator(const Program& p, SimOptions opts = {});

  ExecTrace run(std::uint64_t limit, const FaultSpec* fault = nullptr) const;

  std::uint32_t code_end() const { return code_end_; }  // one past the handler
  std::uint32_t handler_pc() const { return code_end_ - 1; }
  std::uint32_t region_size() const { return static_cast<std::uint32_t>(words_.size()); }
  unsigned pc_bits() const { return pc_bits_; }
  const Program& program() const { return program_; }

  void validate(const FaultSpec& f) const;

 private:
  Program program_;
  std::vector<Word> words_;
  std::vector<Instruction> decoded_;
  std::uint32_t code_end_ = 0;
  unsigned pc_bits_ = 1;
};

/// Fault-free run; throws Error(TimedOut) if the program does not halt in `limit`.
ExecTrace run_golden(const Program& p, std::uint64_t limit, SimOptions opts = {});

/// Single-fault run. Throws InvalidFault if the run ends before the fault time.
ExecTrace run_faulty(const Program& p, const FaultSpec& f, std::uint64_t limit, SimOptions opts = {});

enum class EffectClass : std::uint8_t { NoEffect, DataEffect, FlowEffect };
std::string_view effect_name(EffectClass e);

struct Comparison {
  EffectClass effect = EffectClass::NoEffect;
  std::optional<std::uint64_t> divergence;  // first dynamic index where the pcs differ
  std::optional<std::uint64_t> expected_pc;
  std::optional<std::uint64_t> actual_pc;
};

/// Flow effect iff the pc traces differ (including length); else data effect
/// iff the first `data_words` words of the data segment differ (all words if
/// unset).
Comparison compare_traces(const ExecTrace& golden, const ExecTrace& faulty,
                          std::optional<std::size_t> data_words = std::nullopt);

std::string format_trace(const ExecTrace& t);
std::string format_memory(const std::vector<Word>& data);

}  // namespace sihft
