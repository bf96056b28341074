#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sihft/program.hpp"

namespace sihft {

class RegisterPressureError : public Error {
 public:
  using Error::Error;
};

struct HardeningConfig {
  bool variables = false;          // rules #1-#3
  bool inverted_branches = false;  // rule #4
  bool signatures = false;         // rules #5-#6
  unsigned replica_reg_offset = 16;
  std::optional<std::uint32_t> data_replica_offset;  // bytes; default = original data size
  unsigned signature_reg = 30;

  static HardeningConfig none() { return {}; }
  static HardeningConfig with(bool v, bool inv, bool sig) {
    HardeningConfig c;
    c.variables = v;
    c.inverted_branches = inv;
    c.signatures = sig;
    return c;
  }
  static HardeningConfig only_variables() { return with(true, false, false); }
  static HardeningConfig only_inverted_branches() { return with(false, true, false); }
  static HardeningConfig only_signatures() { return with(false, false, true); }
  static HardeningConfig all() { return with(true, true, true); }

  bool any() const { return variables || inverted_branches || signatures; }

  /// "original", "signatures", "variables", "inverted-branches", "all", or
  /// a "+"-joined combination.
  std::string name() const;
};

/// Parses a comma-separated technique list ("variables,signatures", "all",
/// or empty for none).
HardeningConfig parse_techniques(std::string_view list);

/// The four hardened versions, in the order (1) signatures, (2) variables,
/// (3) inverted branches, (4) combined.
std::vector<HardeningConfig> standard_versions();

struct HardenedProgram {
  Program program;
  // Original instruction index -> hardened indices carrying its semantics
  // (the instruction itself first, then any replica).
  std::vector<std::vector<std::uint32_t>> pc_map;
  // Original instruction index -> first hardened index executed on every
  // path into it, ahead of its consistency checks.
  std::vector<std::uint32_t> entry_map;
  HardeningConfig config;

  std::uint32_t primary(std::uint32_t original) const { return pc_map.at(original).front(); }
};

HardenedProgram identity(const Program& p, const HardeningConfig& cfg = {});

HardenedProgram apply_variables(const Program& p, const HardeningConfig& cfg);
HardenedProgram apply_inverted_branches(const Program& p, const HardeningConfig& cfg);
HardenedProgram apply_signatures(const Program& p, const HardeningConfig& cfg);

/// Runs the enabled passes in the order variables -> inverted branches ->
/// signatures and composes their maps.
HardenedProgram apply_all(const Program& p, const HardeningConfig& cfg);

/// Maps of `second` are relative to `first.program`; result is relative to
/// the program `first` was built from.
HardenedProgram compose(const HardenedProgram& first, const HardenedProgram& second);

/// "orig: h0 h1 ..." one line per original instruction.
std::string format_pc_map(const HardenedProgram& hp);

}  // namespace sihft
