#include <gtest/gtest.h>

#include <random>
#include <set>

#include "sihft/isa.hpp"
#include "support.hpp"

using namespace sihft;
using sihft::oracle::random_instruction;

namespace {

// Independent table of the encodings: (primary opcode field, funct field)
// with funct = -1 for I/J-type formats.
struct Enc {
  Opcode op;
  unsigned primary;
  int funct;
};
const Enc kTable[] = {
    {Opcode::Nop, 0x00, 0x00},   {Opcode::Detect, 0x00, 0x0C}, {Opcode::Halt, 0x00, 0x0D},
    {Opcode::Add, 0x00, 0x20},   {Opcode::Sub, 0x00, 0x22},    {Opcode::And, 0x00, 0x24},
    {Opcode::Or, 0x00, 0x25},    {Opcode::Slt, 0x00, 0x2A},    {Opcode::Jump, 0x02, -1},
    {Opcode::Beq, 0x04, -1},     {Opcode::Bne, 0x05, -1},      {Opcode::Addi, 0x08, -1},
    {Opcode::Bnei, 0x15, -1},    {Opcode::Load, 0x23, -1},     {Opcode::Store, 0x2B, -1},
};

}  // namespace

TEST(Isa, NopIsAllZeros) {
  EXPECT_EQ(encode(ins::nop()), 0u);
  EXPECT_EQ(decode(0).op, Opcode::Nop);
}

TEST(Isa, AddiRoundTrip) {
  const Instruction i = ins::addi(1, 0, 5);
  const Instruction d = decode(encode(i));
  EXPECT_EQ(d, i);
  EXPECT_EQ(d.op, Opcode::Addi);
  EXPECT_EQ(d.rd, 1);
  EXPECT_EQ(d.imm, 5);
}

TEST(Isa, JumpTargetInLowBits) {
  for (std::uint32_t t : {0u, 1u, 12345u, kTargetMask}) {
    EXPECT_EQ(encode(ins::jump(t)) & kTargetMask, t);
  }
}

TEST(Isa, TableMatchesEncoder) {
  for (const Enc& e : kTable) {
    Instruction i;
    i.op = e.op;
    const Word w = encode(i);
    EXPECT_EQ(w >> 26, e.primary) << mnemonic(e.op);
    if (e.funct >= 0) EXPECT_EQ(static_cast<int>(w & 0x3F), e.funct) << mnemonic(e.op);
  }
}

// Exactly the defined primary opcodes and R-type functs decode.
TEST(Isa, OnlyDefinedOpcodeFieldsDecode) {
  std::set<unsigned> primaries;
  std::set<int> functs;
  for (const Enc& e : kTable) {
    if (e.funct >= 0) {
      functs.insert(e.funct);
    } else {
      primaries.insert(e.primary);
    }
  }
  for (unsigned op = 1; op < 64; ++op) {
    const bool ok = try_decode(Word{op} << 26).has_value();
    EXPECT_EQ(ok, primaries.count(op) == 1) << "primary " << op;
  }
  for (int f = 0; f < 64; ++f) {
    const bool ok = try_decode(static_cast<Word>(f)).has_value();
    EXPECT_EQ(ok, functs.count(f) == 1) << "funct " << f;
  }
}

TEST(Isa, FuzzRoundTrip10k) {
  std::mt19937_64 rng(7);
  for (int n = 0; n < 10000; ++n) {
    const Instruction i = random_instruction(rng);
    ASSERT_EQ(decode(encode(i)), i) << mnemonic(i.op);
  }
}

// Every word either decodes (and re-encodes to itself) or raises DecodeError.
TEST(Isa, DecodeTotality) {
  std::mt19937_64 rng(11);
  int decoded = 0;
  for (int n = 0; n < 200000; ++n) {
    const Word w = static_cast<Word>(rng());
    try {
      const Instruction i = decode(w);
      ++decoded;
      ASSERT_EQ(encode(i), w);
    } catch (const DecodeError& e) {
      EXPECT_EQ(e.word(), w);
    }
  }
  EXPECT_GT(decoded, 0);
}

TEST(Isa, EncodeRejectsOutOfRangeFields) {
  EXPECT_THROW(encode(ins::addi(1, 0, 40000)), RangeError);
  EXPECT_THROW(encode(ins::addi(1, 0, -40000)), RangeError);
  Instruction bad = ins::add(1, 2, 3);
  bad.rd = 32;
  EXPECT_THROW(encode(bad), RangeError);
  EXPECT_THROW(encode(ins::jump(kTargetMask + 1)), RangeError);
  Instruction stray = ins::halt();
  stray.imm = 4;
  EXPECT_THROW(encode(stray), RangeError);
}

TEST(Isa, RegisterZeroIsImmutable) {
  RegisterFile rf;
  rf.set(0, 0xDEADBEEF);
  EXPECT_EQ(rf.get(0), 0u);
  rf.flip(0, 3);
  EXPECT_EQ(rf.get(0), 0u);
  rf.set(5, 7);
  rf.flip(5, 1);
  EXPECT_EQ(rf.get(5), 5u);
}

TEST(Isa, SourcesAndDestination) {
  EXPECT_EQ(sources(ins::st(4, 8, 2)), (std::array<std::uint8_t, 2>{4, 2}));
  EXPECT_EQ(destination(ins::st(4, 8, 2)), std::nullopt);
  EXPECT_EQ(destination(ins::ld(1, 4)), std::optional<std::uint8_t>(1));
  EXPECT_EQ(destination(ins::beq(1, 2, 3)), std::nullopt);
}
