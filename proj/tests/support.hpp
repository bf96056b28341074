#pragma once
// Oracles and generators shared by the unit tests and the acceptance runner.
// Nothing here calls into the code under test beyond the instruction builders.

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "sihft/program.hpp"
#include "sihft/workloads.hpp"

namespace sihft::oracle {

inline Instruction random_instruction(std::mt19937_64& rng) {
  auto reg = [&] { return static_cast<unsigned>(rng() % 32); };
  auto imm = [&] { return static_cast<std::int32_t>(rng() % 65536) - 32768; };
  const Opcode op = kAllOpcodes[rng() % kAllOpcodes.size()];
  switch (op) {
    case Opcode::Nop: return ins::nop();
    case Opcode::Halt: return ins::halt();
    case Opcode::Detect: return ins::detect();
    case Opcode::Add:
    case Opcode::Sub:
    case Opcode::And:
    case Opcode::Or:
    case Opcode::Slt: return ins::alu(op, reg(), reg(), reg());
    case Opcode::Addi: return ins::addi(reg(), reg(), imm());
    case Opcode::Load: return ins::ld(reg(), reg(), imm());
    case Opcode::Store: return ins::st(reg(), imm(), reg());
    case Opcode::Beq: return ins::beq(reg(), reg(), imm());
    case Opcode::Bne: return ins::bne(reg(), reg(), imm());
    case Opcode::Bnei: return ins::bnei(reg(), imm());
    case Opcode::Jump: return ins::jump(static_cast<std::uint32_t>(rng() & kTargetMask));
  }
  return ins::nop();
}

// Random control-heavy program: branches anywhere in range, error checks,
// jumps, halts and detects mixed with plain work.
inline Program random_program(std::mt19937_64& rng) {
  Program p;
  const auto n = static_cast<std::uint32_t>(1 + rng() % 60);
  auto reg = [&] { return static_cast<unsigned>(1 + rng() % 13); };
  for (std::uint32_t i = 0; i < n; ++i) {
    auto offset_to = [&](std::uint32_t t) { return static_cast<std::int32_t>(t) - static_cast<std::int32_t>(i) - 1; };
    const auto any_target = static_cast<std::uint32_t>(rng() % n);
    switch (rng() % 10) {
      case 0: p.code.push_back(ins::beq(reg(), reg(), offset_to(any_target))); break;
      case 1: p.code.push_back(ins::bne(reg(), reg(), offset_to(any_target))); break;
      case 2: p.code.push_back(ins::bne(reg(), reg(), offset_to(n))); break;  // consistency check
      case 3: p.code.push_back(ins::bnei(30, 4)); break;
      case 4: p.code.push_back(ins::jump(any_target)); break;
      case 5: p.code.push_back(rng() % 3 == 0 ? ins::halt() : ins::detect()); break;
      case 6: p.code.push_back(ins::ld(reg(), reg(), 4)); break;
      default: p.code.push_back(ins::add(reg(), reg(), reg())); break;
    }
    p.provenance.push_back({Origin::Original, i});
  }
  p.entry = static_cast<std::uint32_t>(rng() % n);
  return p;
}

// Brute-force block oracle, written from the instruction semantics directly.
inline std::optional<std::uint32_t> in_program_target(const Program& p, std::uint32_t i) {
  const Instruction& in = p.code[i];
  const auto n = static_cast<std::int64_t>(p.code.size());
  if (in.op == Opcode::Jump) return in.target;
  if (in.op == Opcode::Beq || in.op == Opcode::Bne) {
    const std::int64_t t = static_cast<std::int64_t>(i) + 1 + in.imm;
    if (t >= 0 && t < n) return static_cast<std::uint32_t>(t);
  }
  return std::nullopt;
}

inline bool transfers(const Program& p, std::uint32_t i) {
  const Opcode op = p.code[i].op;
  return op == Opcode::Jump || op == Opcode::Halt || op == Opcode::Detect || in_program_target(p, i).has_value();
}

inline std::set<std::uint32_t> oracle_leaders(const Program& p) {
  const auto n = static_cast<std::uint32_t>(p.code.size());
  std::set<std::uint32_t> l{0, p.entry};
  for (std::uint32_t i = 0; i < n; ++i) {
    if (auto t = in_program_target(p, i)) l.insert(*t);
    if (transfers(p, i) && i + 1 < n) l.insert(i + 1);
  }
  return l;
}

inline std::vector<std::int64_t> host_product(const Matrix& a, const Matrix& b) {
  const std::size_t n = a.size();
  std::vector<std::int64_t> c(n * n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) c[i * n + j] += std::int64_t{a[i][k]} * b[k][j];
  return c;
}

// Left columns of the three worked transformation examples.
inline constexpr const char* kExampleVariables = R"(
        .space 16
        ld   r1, [r4]
        add  r1, r2, 1
        st   [r1], r2
        halt
)";

inline constexpr const char* kExampleInverted = R"(
        beq  r1, r2, L
        add  r2, r3, 1
L:      add  r2, r3, 9
        jmp  end
end:    halt
)";

// The leading instruction gives the branch a block of its own to end.
inline constexpr const char* kExampleSignatures = R"(
        add  r3, r3, r0
        beq  r1, r2, L
        add  r2, r3, 1
L:      add  r2, r3, 9
        st   [r1], r2
        jmp  end
end:    halt
)";

}  // namespace sihft::oracle
