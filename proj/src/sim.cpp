#include "sihft/sim.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>

namespace sihft {

std::string_view kind_name(FaultKind k) { return k == FaultKind::Seu ? "SEU" : "SET"; }

std::string_view source_name(FaultSource s) {
  switch (s) {
    case FaultSource::RegBank: return "RegBank";
    case FaultSource::Alu: return "ALU";
    case FaultSource::Datapath: return "Datapath";
    case FaultSource::Controlpath: return "Controlpath";
  }
  return "?";
}

std::string_view target_name(FaultTarget t) {
  switch (t) {
    case FaultTarget::Register: return "Register";
    case FaultTarget::RegReadPort: return "RegReadPort";
    case FaultTarget::AluResult: return "AluResult";
    case FaultTarget::PcRegister: return "PcRegister";
    case FaultTarget::InstrWord: return "InstrWord";
    case FaultTarget::MemAddr: return "MemAddr";
    case FaultTarget::MemData: return "MemData";
  }
  return "?";
}

FaultSource source_of(FaultTarget t) {
  switch (t) {
    case FaultTarget::Register:
    case FaultTarget::RegReadPort: return FaultSource::RegBank;
    case FaultTarget::AluResult: return FaultSource::Alu;
    case FaultTarget::PcRegister:
    case FaultTarget::InstrWord: return FaultSource::Controlpath;
    case FaultTarget::MemAddr:
    case FaultTarget::MemData: return FaultSource::Datapath;
  }
  return FaultSource::RegBank;
}

std::string describe(const FaultSpec& f) {
  const bool has_reg = f.target == FaultTarget::Register || f.target == FaultTarget::RegReadPort;
  if (has_reg) {
    return fmt::format("{} {}(r{}, bit {}) @{}", kind_name(f.kind), target_name(f.target), f.reg, f.bit, f.time);
  }
  return fmt::format("{} {}(bit {}) @{}", kind_name(f.kind), target_name(f.target), f.bit, f.time);
}

std::string_view status_name(Status s) {
  switch (s) {
    case Status::Running: return "Running";
    case Status::Halted: return "Halted";
    case Status::Detected: return "Detected";
    case Status::HardwareTrap: return "HardwareTrap";
    case Status::TimedOut: return "TimedOut";
  }
  return "?";
}

std::string_view effect_name(EffectClass e) {
  switch (e) {
    case EffectClass::NoEffect: return "NoEffect";
    case EffectClass::DataEffect: return "DataEffect";
    case EffectClass::FlowEffect: return "FlowEffect";
  }
  return "?";
}

Simulator::Simulator(const Program& p, SimOptions opts) : program_(p) {
  sihft::validate(program_);
  if (opts.region_factor == 0) throw Error("region factor must be positive");
  code_end_ = static_cast<std::uint32_t>(p.code.size()) + 1;
  const std::uint32_t region = code_end_ * opts.region_factor;
  words_.assign(region, encode(ins::nop()));
  decoded_.assign(region, ins::nop());
  for (std::size_t i = 0; i < p.code.size(); ++i) {
    words_[i] = encode(p.code[i]);
    decoded_[i] = p.code[i];
  }
  words_[handler_pc()] = encode(ins::detect());
  decoded_[handler_pc()] = ins::detect();
  pc_bits_ = std::max(1u, static_cast<unsigned>(std::bit_width(region - 1)));
}

void Simulator::validate(const FaultSpec& f) const {
  const unsigned width = f.target == FaultTarget::PcRegister ? pc_bits_ : 32;
  if (f.bit >= width) throw InvalidFault(fmt::format("bit {} outside {}-bit target", f.bit, width));
  if (f.reg >= kNumRegisters) throw InvalidFault("register index out of range");
  const bool seu_only = f.target == FaultTarget::Register || f.target == FaultTarget::PcRegister;
  const bool set_only = f.target == FaultTarget::RegReadPort || f.target == FaultTarget::InstrWord;
  if ((seu_only && f.kind != FaultKind::Seu) || (set_only && f.kind != FaultKind::Set)) {
    throw InvalidFault(fmt::format("{} cannot target {}", kind_name(f.kind), target_name(f.target)));
  }
}

ExecTrace Simulator::run(std::uint64_t limit, const FaultSpec* fault) const {
  if (fault) validate(*fault);
  RegisterFile regs;
  std::vector<Word> mem = program_.data;
  std::uint64_t pc = program_.entry;
  ExecTrace t;
  bool activated = fault == nullptr;

  auto stop = [&](Status s, std::uint64_t next) {
    t.status = s;
    t.next_pc = next;
  };

  while (t.status == Status::Running) {
    if (t.dyn_count >= limit) {
      stop(Status::TimedOut, pc);
      break;
    }
    const bool here = fault && t.dyn_count == fault->time;
    const FaultTarget ft = here ? fault->target : FaultTarget::Register;
    const Word mask = here ? (Word{1} << fault->bit) : 0;
    if (here) {
      activated = true;
      if (ft == FaultTarget::Register) regs.flip(fault->reg, fault->bit);
      if (ft == FaultTarget::PcRegister) pc ^= mask;
    }
    if (pc >= words_.size()) {
      stop(Status::TimedOut, pc);  // ran off the end of the code region
      break;
    }

    Instruction in = decoded_[pc];
    if (here && ft == FaultTarget::InstrWord) {
      auto d = try_decode(words_[pc] ^ mask);
      if (!d) {
        stop(Status::HardwareTrap, pc);
        break;
      }
      in = *d;
    }
    t.pc_trace.push_back(static_cast<std::uint32_t>(pc));
    ++t.dyn_count;

    auto read = [&](unsigned r) {
      Word v = regs.get(r);
      if (here && ft == FaultTarget::RegReadPort && fault->reg == r) v ^= mask;
      return v;
    };
    auto alu_out = [&](Word v) { return (here && ft == FaultTarget::AluResult) ? v ^ mask : v; };
    auto branch_flip = [&](bool taken) {
      return (here && ft == FaultTarget::AluResult && fault->bit == 0) ? !taken : taken;
    };
    // Returns the word index or nullopt for an unaligned / out-of-range access.
    auto address = [&](unsigned base, std::int32_t imm) -> std::optional<std::size_t> {
      Word a = read(base) + static_cast<Word>(imm);
      if (here && ft == FaultTarget::MemAddr) a ^= mask;
      if (a % 4 != 0 || a / 4 >= mem.size()) return std::nullopt;
      return a / 4;
    };
    auto mem_data = [&](Word v) { return (here && ft == FaultTarget::MemData) ? v ^ mask : v; };

    std::uint64_t next = pc + 1;
    switch (in.op) {
      case Opcode::Nop: break;
      case Opcode::Add: regs.set(in.rd, alu_out(read(in.rs) + read(in.rt))); break;
      case Opcode::Sub: regs.set(in.rd, alu_out(read(in.rs) - read(in.rt))); break;
      case Opcode::And: regs.set(in.rd, alu_out(read(in.rs) & read(in.rt))); break;
      case Opcode::Or: regs.set(in.rd, alu_out(read(in.rs) | read(in.rt))); break;
      case Opcode::Slt:
        regs.set(in.rd, alu_out(static_cast<std::int32_t>(read(in.rs)) < static_cast<std::int32_t>(read(in.rt))));
        break;
      case Opcode::Addi: regs.set(in.rd, alu_out(read(in.rs) + static_cast<Word>(in.imm))); break;
      case Opcode::Load: {
        auto a = address(in.rs, in.imm);
        if (!a) {
          stop(Status::HardwareTrap, pc);
          break;
        }
        regs.set(in.rd, mem_data(mem[*a]));
        break;
      }
      case Opcode::Store: {
        auto a = address(in.rs, in.imm);
        if (!a) {
          stop(Status::HardwareTrap, pc);
          break;
        }
        mem[*a] = mem_data(read(in.rt));
        break;
      }
      case Opcode::Beq:
      case Opcode::Bne: {
        const bool eq = read(in.rs) == read(in.rt);
        if (branch_flip(in.op == Opcode::Beq ? eq : !eq)) {
          next = static_cast<std::uint64_t>(static_cast<std::int64_t>(pc) + 1 + in.imm);
        }
        break;
      }
      case Opcode::Bnei:
        if (branch_flip(read(in.rs) != static_cast<Word>(in.imm))) next = handler_pc();
        break;
      case Opcode::Jump: next = in.target; break;
      case Opcode::Halt: stop(Status::Halted, pc + 1); break;
      case Opcode::Detect: stop(Status::Detected, pc + 1); break;
    }
    if (t.status == Status::Running) pc = next;
  }

  if (!activated) {
    throw InvalidFault(fmt::format("fault at time {} not activated: run ended after {} instructions",
                                   fault->time, t.dyn_count));
  }
  t.final_data = std::move(mem);
  return t;
}

ExecTrace run_golden(const Program& p, std::uint64_t limit, SimOptions opts) {
  ExecTrace t = Simulator(p, opts).run(limit);
  if (t.status == Status::TimedOut) {
    throw Error(fmt::format("golden run did not halt within {} instructions", limit));
  }
  return t;
}

ExecTrace run_faulty(const Program& p, const FaultSpec& f, std::uint64_t limit, SimOptions opts) {
  return Simulator(p, opts).run(limit, &f);
}

Comparison compare_traces(const ExecTrace& golden, const ExecTrace& faulty, std::optional<std::size_t> data_words) {
  Comparison c;
  const auto& g = golden.pc_trace;
  const auto& f = faulty.pc_trace;
  const std::size_t common = std::min(g.size(), f.size());
  const auto mismatch = std::mismatch(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(common), f.begin());
  const auto d = static_cast<std::size_t>(mismatch.first - g.begin());
  if (d < common || g.size() != f.size()) {
    c.effect = EffectClass::FlowEffect;
    c.divergence = d;
    c.expected_pc = d < g.size() ? std::uint64_t{g[d]} : golden.next_pc;
    if (d < f.size()) {
      c.actual_pc = f[d];
    } else if (faulty.status == Status::TimedOut) {
      c.actual_pc = faulty.next_pc;
    }
    return c;
  }
  const std::size_t n = std::min({data_words.value_or(SIZE_MAX), golden.final_data.size(), faulty.final_data.size()});
  if (!std::equal(golden.final_data.begin(), golden.final_data.begin() + static_cast<std::ptrdiff_t>(n),
                  faulty.final_data.begin())) {
    c.effect = EffectClass::DataEffect;
  }
  return c;
}

std::string format_trace(const ExecTrace& t) {
  std::string out;
  out.reserve(t.pc_trace.size() * 12);
  for (std::size_t i = 0; i < t.pc_trace.size(); ++i) out += fmt::format("{} {}\n", i, t.pc_trace[i]);
  return out;
}

std::string format_memory(const std::vector<Word>& data) {
  std::string out;
  for (std::size_t i = 0; i < data.size(); i += 4) {
    out += fmt::format("{:08x}:", i * 4);
    for (std::size_t j = i; j < std::min(data.size(), i + 4); ++j) out += fmt::format(" {:08x}", data[j]);
    out += "\n";
  }
  return out;
}

}  // namespace sihft
