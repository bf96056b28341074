#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sihft/isa.hpp"

namespace sihft {

/// Which transformation rule inserted an instruction, or Original.
enum class Origin : std::uint8_t {
  Original,
  R1R2,  // replicated write
  R3,    // consistency check before a read
  R4,    // replicated / inverted branch
  R5R6,  // block signature set / check
};

std::string_view origin_name(Origin o);

struct Provenance {
  Origin origin = Origin::Original;
  std::uint32_t address = 0;  // original instruction index; meaningful for Original only

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// An assembled program. Branch offsets and jump targets in `code` are
/// resolved. Index `code.size()` is the detection handler (`__error`), which
/// the loader places right after the code.
struct Program {
  std::vector<Instruction> code;
  std::vector<Word> data;  // initial data segment, one entry per 32-bit word
  std::map<std::string, std::uint32_t, std::less<>> labels;
  std::vector<Provenance> provenance;
  std::uint32_t entry = 0;

  std::uint32_t error_index() const { return static_cast<std::uint32_t>(code.size()); }
  std::uint32_t data_bytes() const { return static_cast<std::uint32_t>(data.size() * 4); }
  bool uses_error_handler() const;

  /// Control-flow target of instruction `i`, if it transfers control.
  std::optional<std::uint32_t> branch_target(std::uint32_t i) const;
};

inline constexpr std::string_view kErrorLabel = "__error";

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

Program parse(std::string_view text);

struct DisassemblyOptions {
  bool annotate_provenance = false;
};
std::string disassemble(const Program& p, DisassemblyOptions opts = {});

/// Checks resolved targets, provenance coverage and encodability.
void validate(const Program& p);

// Binary image: 16-byte little-endian header
//   u32 magic ("SHFT"), u32 code words, u32 data bytes, u32 entry offset
// followed by the code words and then the initial data words, all
// little-endian. Labels and provenance are not stored.
inline constexpr std::uint32_t kImageMagic = 0x54464853;  // "SHFT"

std::vector<std::uint8_t> to_image(const Program& p);
Program from_image(std::span<const std::uint8_t> bytes);

}  // namespace sihft
