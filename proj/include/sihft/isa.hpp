#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sihft {

using Word = std::uint32_t;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a word matches no defined encoding (an "inexistent
/// instruction"); the simulator turns it into a hardware trap.
class DecodeError : public Error {
 public:
  explicit DecodeError(Word w);
  Word word() const { return word_; }

 private:
  Word word_;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

inline constexpr unsigned kNumRegisters = 32;
inline constexpr std::int32_t kImmMin = -32768;
inline constexpr std::int32_t kImmMax = 32767;
inline constexpr std::uint32_t kTargetMask = (1u << 26) - 1;

enum class Opcode : std::uint8_t {
  Nop,
  Load,
  Store,
  Add,
  Addi,
  Sub,
  And,
  Or,
  Slt,
  Beq,
  Bne,
  Bnei,  // compare register with immediate, branch to the error handler
  Jump,
  Halt,
  Detect,
};

inline constexpr std::array kAllOpcodes = {
    Opcode::Nop,  Opcode::Load, Opcode::Store, Opcode::Add,  Opcode::Addi,
    Opcode::Sub,  Opcode::And,  Opcode::Or,    Opcode::Slt,  Opcode::Beq,
    Opcode::Bne,  Opcode::Bnei, Opcode::Jump,  Opcode::Halt, Opcode::Detect,
};

std::string_view mnemonic(Opcode op);

// Field usage per opcode (unused fields must be zero):
//   Add/Sub/And/Or/Slt  rd <- rs op rt
//   Addi                rd <- rs + imm
//   Load                rd <- mem[rs + imm]
//   Store               mem[rs + imm] <- rt
//   Beq/Bne             compare rs, rt; taken target = pc + 1 + imm
//   Bnei                if rs != imm, go to the error handler
//   Jump                pc <- target (absolute instruction index)
struct Instruction {
  Opcode op = Opcode::Nop;
  std::uint8_t rd = 0;
  std::uint8_t rs = 0;
  std::uint8_t rt = 0;
  std::int32_t imm = 0;
  std::uint32_t target = 0;

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

namespace ins {
Instruction nop();
Instruction halt();
Instruction detect();
Instruction alu(Opcode op, unsigned rd, unsigned rs, unsigned rt);
Instruction add(unsigned rd, unsigned rs, unsigned rt);
Instruction sub(unsigned rd, unsigned rs, unsigned rt);
Instruction addi(unsigned rd, unsigned rs, std::int32_t imm);
Instruction ld(unsigned rd, unsigned base, std::int32_t offset = 0);
Instruction st(unsigned base, std::int32_t offset, unsigned value);
Instruction beq(unsigned rs, unsigned rt, std::int32_t offset);
Instruction bne(unsigned rs, unsigned rt, std::int32_t offset);
Instruction bnei(unsigned rs, std::int32_t value);
Instruction jump(std::uint32_t target);
}  // namespace ins

Word encode(const Instruction& i);
Instruction decode(Word w);
std::optional<Instruction> try_decode(Word w);

bool is_alu_rr(Opcode op);
bool is_cond_branch(Opcode op);  // Beq, Bne
bool is_branch(Opcode op);       // Beq, Bne, Bnei
bool ends_execution(Opcode op);  // Halt, Detect

/// Source registers read by `i` (zero entries mean "none").
std::array<std::uint8_t, 2> sources(const Instruction& i);
/// Destination register, if `i` writes one.
std::optional<std::uint8_t> destination(const Instruction& i);

/// 32 general registers; r0 reads as zero.
class RegisterFile {
 public:
  std::uint32_t get(unsigned r) const { return r == 0 ? 0 : regs_[r]; }
  void set(unsigned r, std::uint32_t v) {
    if (r != 0) regs_[r] = v;
  }
  void flip(unsigned r, unsigned bit) {
    if (r != 0) regs_[r] ^= (1u << bit);
  }
  const std::array<std::uint32_t, kNumRegisters>& raw() const { return regs_; }

 private:
  std::array<std::uint32_t, kNumRegisters> regs_{};
};

}  // namespace sihft
