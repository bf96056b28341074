#include <gtest/gtest.h>

#include <random>

#include "sihft/program.hpp"

using namespace sihft;

namespace {

const char* kSignatureExample = R"(
        beq  r1, r2, L
        add  r2, r3, 1
L:      add  r2, r3, 9
        st   [r1], r2
        jmp  end
end:    halt
)";

const char* kInvertedHardened = R"(
        beq  r1, r2, taken
        beq  r1, r2, __error
        add  r2, r3, 1
        jmp  L
taken:  bne  r1, r2, __error
L:      add  r2, r3, 9
        jmp  end
end:    halt
)";

Program random_program(std::mt19937_64& rng) {
  Program p;
  const auto n = static_cast<std::uint32_t>(1 + rng() % 40);
  auto reg = [&] { return static_cast<unsigned>(rng() % 32); };
  auto imm = [&] { return static_cast<std::int32_t>(rng() % 2001) - 1000; };
  for (std::uint32_t i = 0; i < n; ++i) {
    // branch offsets are relative to i + 1; targets range over [0, n]
    auto offset = [&] { return static_cast<std::int32_t>(rng() % (n + 1)) - static_cast<std::int32_t>(i) - 1; };
    switch (rng() % 12) {
      case 0: p.code.push_back(ins::nop()); break;
      case 1: p.code.push_back(ins::halt()); break;
      case 2: p.code.push_back(ins::alu(Opcode::Add, reg(), reg(), reg())); break;
      case 3: p.code.push_back(ins::alu(Opcode::Slt, reg(), reg(), reg())); break;
      case 4: p.code.push_back(ins::addi(reg(), reg(), imm())); break;
      case 5: p.code.push_back(ins::ld(reg(), reg(), imm())); break;
      case 6: p.code.push_back(ins::st(reg(), imm(), reg())); break;
      case 7: p.code.push_back(ins::beq(reg(), reg(), offset())); break;
      case 8: p.code.push_back(ins::bne(reg(), reg(), offset())); break;
      case 9: p.code.push_back(ins::bnei(reg(), imm())); break;
      case 10: p.code.push_back(ins::jump(static_cast<std::uint32_t>(rng() % n))); break;
      default: p.code.push_back(ins::alu(Opcode::Or, reg(), reg(), reg())); break;
    }
    p.provenance.push_back({Origin::Original, i});
  }
  const auto words = rng() % 20;
  for (std::uint64_t w = 0; w < words; ++w) p.data.push_back(static_cast<Word>(rng()));
  p.entry = static_cast<std::uint32_t>(rng() % n);
  return p;
}

}  // namespace

TEST(Asm, NopHalt) {
  const Program p = parse("nop\nhalt");
  ASSERT_EQ(p.code.size(), 2u);
  EXPECT_EQ(p.code[0], ins::nop());
  EXPECT_EQ(p.code[1], ins::halt());
  EXPECT_TRUE(p.labels.empty());
  for (std::uint32_t i = 0; i < 2; ++i) EXPECT_EQ(p.provenance[i], (Provenance{Origin::Original, i}));
}

TEST(Asm, SignatureExampleSource) {
  const Program p = parse(kSignatureExample);
  ASSERT_EQ(p.code.size(), 6u);  // five listed instructions plus the halt they jump to
  EXPECT_EQ(p.branch_target(0), std::optional<std::uint32_t>(2));
  EXPECT_EQ(p.code[1], ins::addi(2, 3, 1));
  EXPECT_EQ(p.code[3], ins::st(1, 0, 2));
  EXPECT_EQ(p.branch_target(4), std::optional<std::uint32_t>(5));
}

TEST(Asm, UnresolvedLabelReportsLine) {
  try {
    parse("nop\nbeq r1, r2, nowhere\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Asm, RejectsBadInput) {
  EXPECT_THROW(parse("frob r1"), ParseError);
  EXPECT_THROW(parse("add r1, r2, r40"), ParseError);
  EXPECT_THROW(parse("addi r1, r0, 70000"), ParseError);
  EXPECT_THROW(parse("x: nop\nx: nop"), ParseError);
  EXPECT_THROW(parse("error: nop"), ParseError);
  EXPECT_THROW(parse(".space 3"), ParseError);
}

TEST(Asm, ShorthandNotation) {
  const Program p = parse(R"(
        ld   r1, [r4]
        mv   r5, r1
        mv   r6, 7
        st   [r1 + 8], r2
        ld   r3, [r4 - 4]
        bne  r30, 2, error
        halt
)");
  EXPECT_EQ(p.code[0], ins::ld(1, 4, 0));
  EXPECT_EQ(p.code[1], ins::add(5, 1, 0));
  EXPECT_EQ(p.code[2], ins::addi(6, 0, 7));
  EXPECT_EQ(p.code[3], ins::st(1, 8, 2));
  EXPECT_EQ(p.code[4], ins::ld(3, 4, -4));
  EXPECT_EQ(p.code[5], ins::bnei(30, 2));
  EXPECT_TRUE(p.uses_error_handler());
}

TEST(Asm, DisassembleNop) {
  Program p;
  p.code.push_back(ins::nop());
  p.provenance.push_back({});
  const std::string text = disassemble(p);
  EXPECT_NE(text.find("nop"), std::string::npos);
  EXPECT_EQ(parse(text).code, p.code);
}

TEST(Asm, HardenedExampleRoundTrip) {
  const Program p = parse(kInvertedHardened);
  ASSERT_EQ(p.code.size(), 8u);
  EXPECT_EQ(p.branch_target(1), std::optional<std::uint32_t>(p.error_index()));
  const Program q = parse(disassemble(p));
  EXPECT_EQ(q.code, p.code);
}

TEST(Asm, DataDirectives) {
  const Program p = parse(".word 1, -2, 0x10\n.space 8\nhalt\n");
  EXPECT_EQ(p.data, (std::vector<Word>{1, 0xFFFFFFFEu, 16, 0, 0}));
  EXPECT_EQ(p.data_bytes(), 20u);
}

TEST(Asm, FuzzRoundTrip) {
  std::mt19937_64 rng(3);
  for (int n = 0; n < 1000; ++n) {
    const Program p = random_program(rng);
    const std::string text = disassemble(p, {.annotate_provenance = (n % 2) == 0});
    const Program q = parse(text);
    ASSERT_EQ(q.code, p.code) << text;
    ASSERT_EQ(q.data, p.data);
    ASSERT_EQ(q.entry, p.entry);
  }
}

TEST(Asm, ImageRoundTrip) {
  std::mt19937_64 rng(5);
  for (int n = 0; n < 200; ++n) {
    const Program p = random_program(rng);
    const auto bytes = to_image(p);
    ASSERT_EQ(bytes.size(), 16 + 4 * (p.code.size() + p.data.size()));
    EXPECT_EQ(bytes[0], 'S');
    EXPECT_EQ(bytes[3], 'T');
    const Program q = from_image(bytes);
    ASSERT_EQ(q.code, p.code);
    ASSERT_EQ(q.data, p.data);
    ASSERT_EQ(q.entry, p.entry);
  }
}

TEST(Asm, ImageRejectsGarbage) {
  std::vector<std::uint8_t> junk{1, 2, 3};
  EXPECT_THROW(from_image(junk), Error);
  auto bytes = to_image(parse("halt"));
  bytes[16] = 0xFF;  // corrupt the only code word into an undefined opcode
  bytes[17] = 0xFF;
  bytes[18] = 0xFF;
  bytes[19] = 0xFF;
  EXPECT_THROW(from_image(bytes), Error);
}
