#include "sihft/isa.hpp"

#include <fmt/format.h>

namespace sihft {

namespace {

// Primary opcode field (bits 31..26).
constexpr Word kOpSpecial = 0x00;
constexpr Word kOpJump = 0x02;
constexpr Word kOpBeq = 0x04;
constexpr Word kOpBne = 0x05;
constexpr Word kOpAddi = 0x08;
constexpr Word kOpBnei = 0x15;
constexpr Word kOpLoad = 0x23;
constexpr Word kOpStore = 0x2B;

// Function field (bits 5..0) of SPECIAL words.
constexpr Word kFnNop = 0x00;
constexpr Word kFnDetect = 0x0C;
constexpr Word kFnHalt = 0x0D;
constexpr Word kFnAdd = 0x20;
constexpr Word kFnSub = 0x22;
constexpr Word kFnAnd = 0x24;
constexpr Word kFnOr = 0x25;
constexpr Word kFnSlt = 0x2A;

Word r_type(Word rs, Word rt, Word rd, Word funct) {
  return (kOpSpecial << 26) | (rs << 21) | (rt << 16) | (rd << 11) | funct;
}

Word i_type(Word op, Word rs, Word rt, std::int32_t imm) {
  return (op << 26) | (rs << 21) | (rt << 16) |
         (static_cast<Word>(imm) & 0xFFFFu);
}

std::int32_t sext16(Word w) {
  return static_cast<std::int16_t>(static_cast<std::uint16_t>(w & 0xFFFFu));
}

void check_reg(unsigned r, const char* field) {
  if (r >= kNumRegisters) {
    throw RangeError(fmt::format("register field {} out of range: {}", field, r));
  }
}

void check_imm(std::int32_t imm) {
  if (imm < kImmMin || imm > kImmMax) {
    throw RangeError(fmt::format("immediate out of 16-bit range: {}", imm));
  }
}

void require_zero(bool ok, const Instruction& i) {
  if (!ok) {
    throw RangeError(fmt::format("{}: field not used by this opcode is nonzero",
                                 mnemonic(i.op)));
  }
}

}  // namespace

DecodeError::DecodeError(Word w)
    : Error(fmt::format("undefined instruction word 0x{:08x}", w)), word_(w) {}

std::string_view mnemonic(Opcode op) {
  switch (op) {
    case Opcode::Nop: return "nop";
    case Opcode::Load: return "ld";
    case Opcode::Store: return "st";
    case Opcode::Add: return "add";
    case Opcode::Addi: return "addi";
    case Opcode::Sub: return "sub";
    case Opcode::And: return "and";
    case Opcode::Or: return "or";
    case Opcode::Slt: return "slt";
    case Opcode::Beq: return "beq";
    case Opcode::Bne: return "bne";
    case Opcode::Bnei: return "bnei";
    case Opcode::Jump: return "jmp";
    case Opcode::Halt: return "halt";
    case Opcode::Detect: return "detect";
  }
  return "?";
}

namespace ins {
namespace {
std::uint8_t reg(unsigned r) { return static_cast<std::uint8_t>(r); }
}  // namespace

Instruction nop() { return {}; }
Instruction halt() { return {.op = Opcode::Halt}; }
Instruction detect() { return {.op = Opcode::Detect}; }
Instruction alu(Opcode op, unsigned rd, unsigned rs, unsigned rt) {
  return {.op = op, .rd = reg(rd), .rs = reg(rs), .rt = reg(rt)};
}
Instruction add(unsigned rd, unsigned rs, unsigned rt) { return alu(Opcode::Add, rd, rs, rt); }
Instruction sub(unsigned rd, unsigned rs, unsigned rt) { return alu(Opcode::Sub, rd, rs, rt); }
Instruction addi(unsigned rd, unsigned rs, std::int32_t imm) {
  return {.op = Opcode::Addi, .rd = reg(rd), .rs = reg(rs), .imm = imm};
}
Instruction ld(unsigned rd, unsigned base, std::int32_t offset) {
  return {.op = Opcode::Load, .rd = reg(rd), .rs = reg(base), .imm = offset};
}
Instruction st(unsigned base, std::int32_t offset, unsigned value) {
  return {.op = Opcode::Store, .rs = reg(base), .rt = reg(value), .imm = offset};
}
Instruction beq(unsigned rs, unsigned rt, std::int32_t offset) {
  return {.op = Opcode::Beq, .rs = reg(rs), .rt = reg(rt), .imm = offset};
}
Instruction bne(unsigned rs, unsigned rt, std::int32_t offset) {
  return {.op = Opcode::Bne, .rs = reg(rs), .rt = reg(rt), .imm = offset};
}
Instruction bnei(unsigned rs, std::int32_t value) {
  return {.op = Opcode::Bnei, .rs = reg(rs), .imm = value};
}
Instruction jump(std::uint32_t target) { return {.op = Opcode::Jump, .target = target}; }
}  // namespace ins

Word encode(const Instruction& i) {
  check_reg(i.rd, "rd");
  check_reg(i.rs, "rs");
  check_reg(i.rt, "rt");
  check_imm(i.imm);
  const bool no_regs = i.rd == 0 && i.rs == 0 && i.rt == 0;

  switch (i.op) {
    case Opcode::Nop:
    case Opcode::Halt:
    case Opcode::Detect: {
      require_zero(no_regs && i.imm == 0 && i.target == 0, i);
      const Word fn = i.op == Opcode::Nop ? kFnNop : i.op == Opcode::Halt ? kFnHalt : kFnDetect;
      return r_type(0, 0, 0, fn);
    }
    case Opcode::Add:
    case Opcode::Sub:
    case Opcode::And:
    case Opcode::Or:
    case Opcode::Slt: {
      require_zero(i.imm == 0 && i.target == 0, i);
      Word fn = kFnAdd;
      if (i.op == Opcode::Sub) fn = kFnSub;
      if (i.op == Opcode::And) fn = kFnAnd;
      if (i.op == Opcode::Or) fn = kFnOr;
      if (i.op == Opcode::Slt) fn = kFnSlt;
      return r_type(i.rs, i.rt, i.rd, fn);
    }
    case Opcode::Addi:
    case Opcode::Load:
      require_zero(i.rt == 0 && i.target == 0, i);
      return i_type(i.op == Opcode::Addi ? kOpAddi : kOpLoad, i.rs, i.rd, i.imm);
    case Opcode::Store:
      require_zero(i.rd == 0 && i.target == 0, i);
      return i_type(kOpStore, i.rs, i.rt, i.imm);
    case Opcode::Beq:
    case Opcode::Bne:
      require_zero(i.rd == 0 && i.target == 0, i);
      return i_type(i.op == Opcode::Beq ? kOpBeq : kOpBne, i.rs, i.rt, i.imm);
    case Opcode::Bnei:
      require_zero(i.rd == 0 && i.rt == 0 && i.target == 0, i);
      return i_type(kOpBnei, i.rs, 0, i.imm);
    case Opcode::Jump:
      require_zero(no_regs && i.imm == 0, i);
      if (i.target > kTargetMask) {
        throw RangeError(fmt::format("jump target exceeds 26 bits: {}", i.target));
      }
      return (kOpJump << 26) | i.target;
  }
  throw RangeError("unknown opcode");
}

std::optional<Instruction> try_decode(Word w) {
  const Word op = w >> 26;
  const auto rs = static_cast<std::uint8_t>((w >> 21) & 31);
  const auto rt = static_cast<std::uint8_t>((w >> 16) & 31);
  const auto rd = static_cast<std::uint8_t>((w >> 11) & 31);
  const Word shamt = (w >> 6) & 31;
  const Word fn = w & 63;
  const std::int32_t imm = sext16(w);

  switch (op) {
    case kOpSpecial: {
      if (shamt != 0) return std::nullopt;
      switch (fn) {
        case kFnNop:
        case kFnHalt:
        case kFnDetect:
          if ((w & ~Word{63}) != 0) return std::nullopt;
          return fn == kFnNop ? ins::nop() : fn == kFnHalt ? ins::halt() : ins::detect();
        case kFnAdd: return ins::alu(Opcode::Add, rd, rs, rt);
        case kFnSub: return ins::alu(Opcode::Sub, rd, rs, rt);
        case kFnAnd: return ins::alu(Opcode::And, rd, rs, rt);
        case kFnOr: return ins::alu(Opcode::Or, rd, rs, rt);
        case kFnSlt: return ins::alu(Opcode::Slt, rd, rs, rt);
        default: return std::nullopt;
      }
    }
    case kOpJump: return ins::jump(w & kTargetMask);
    case kOpBeq: return ins::beq(rs, rt, imm);
    case kOpBne: return ins::bne(rs, rt, imm);
    case kOpAddi: return ins::addi(rt, rs, imm);
    case kOpLoad: return ins::ld(rt, rs, imm);
    case kOpStore: return ins::st(rs, imm, rt);
    case kOpBnei:
      if (rt != 0) return std::nullopt;
      return ins::bnei(rs, imm);
    default: return std::nullopt;
  }
}

Instruction decode(Word w) {
  if (auto i = try_decode(w)) return *i;
  throw DecodeError(w);
}

bool is_alu_rr(Opcode op) {
  return op == Opcode::Add || op == Opcode::Sub || op == Opcode::And ||
         op == Opcode::Or || op == Opcode::Slt;
}

bool is_cond_branch(Opcode op) { return op == Opcode::Beq || op == Opcode::Bne; }

bool is_branch(Opcode op) { return is_cond_branch(op) || op == Opcode::Bnei; }

bool ends_execution(Opcode op) { return op == Opcode::Halt || op == Opcode::Detect; }

std::array<std::uint8_t, 2> sources(const Instruction& i) {
  if (is_alu_rr(i.op) || is_cond_branch(i.op) || i.op == Opcode::Store) {
    return {i.rs, i.rt};
  }
  if (i.op == Opcode::Addi || i.op == Opcode::Load || i.op == Opcode::Bnei) {
    return {i.rs, 0};
  }
  return {0, 0};
}

std::optional<std::uint8_t> destination(const Instruction& i) {
  if (is_alu_rr(i.op) || i.op == Opcode::Addi || i.op == Opcode::Load) return i.rd;
  return std::nullopt;
}

}  // namespace sihft
