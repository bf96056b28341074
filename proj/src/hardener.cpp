#include "sihft/hardener.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <set>
#include <variant>

#include "sihft/cfg.hpp"

namespace sihft {

std::string HardeningConfig::name() const {
  if (!any()) return "original";
  if (variables && inverted_branches && signatures) return "all";
  std::vector<std::string> parts;
  if (variables) parts.emplace_back("variables");
  if (inverted_branches) parts.emplace_back("inverted-branches");
  if (signatures) parts.emplace_back("signatures");
  return fmt::format("{}", fmt::join(parts, "+"));
}

HardeningConfig parse_techniques(std::string_view list) {
  HardeningConfig cfg;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    std::size_t comma = list.find_first_of(",+", pos);
    if (comma == std::string_view::npos) comma = list.size();
    std::string_view item = list.substr(pos, comma - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    pos = comma + 1;
    if (item.empty() || item == "none" || item == "original") continue;
    if (item == "variables") {
      cfg.variables = true;
    } else if (item == "inverted-branches") {
      cfg.inverted_branches = true;
    } else if (item == "signatures") {
      cfg.signatures = true;
    } else if (item == "all") {
      cfg.variables = cfg.inverted_branches = cfg.signatures = true;
    } else {
      throw Error(fmt::format("unknown technique '{}'", item));
    }
  }
  return cfg;
}

std::vector<HardeningConfig> standard_versions() {
  return {HardeningConfig::only_signatures(), HardeningConfig::only_variables(),
          HardeningConfig::only_inverted_branches(), HardeningConfig::all()};
}

namespace {

// Passes rewrite each input instruction into a group of output lines. Branch
// targets stay symbolic (group + slot) until the groups are laid out.
constexpr std::uint32_t kLanding = UINT32_MAX;

struct Ref {
  std::uint32_t group;
  std::uint32_t slot;
};
struct ToError {};
using Target = std::variant<std::monostate, Ref, ToError>;

struct Line {
  Instruction inst;
  Target target;
  Provenance prov;
};

struct Group {
  std::vector<Line> lines;
  std::uint32_t core = 0;
  std::uint32_t landing = 0;
  std::uint32_t entry = 0;
  std::vector<std::uint32_t> semantic;
};

Line input_line(const Program& p, std::uint32_t i) {
  Line l{p.code[i], {}, p.provenance[i]};
  if (auto t = p.branch_target(i)) {
    if (*t == p.error_index()) {
      l.target = ToError{};
    } else {
      l.target = Ref{*t, kLanding};
    }
  }
  return l;
}

Line inserted(Instruction inst, Origin origin, Target target = {}) {
  return {inst, target, {origin, 0}};
}

HardenedProgram link(const Program& in, std::vector<Group> groups, std::vector<Word> data,
                     const HardeningConfig& cfg) {
  std::vector<std::uint32_t> offset(groups.size());
  std::uint32_t total = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    offset[g] = total;
    total += static_cast<std::uint32_t>(groups[g].lines.size());
  }
  auto resolve = [&](const Target& t) -> std::uint32_t {
    if (std::holds_alternative<ToError>(t)) return total;
    const Ref& r = std::get<Ref>(t);
    const Group& g = groups.at(r.group);
    return offset[r.group] + (r.slot == kLanding ? g.landing : r.slot);
  };

  HardenedProgram hp;
  hp.config = cfg;
  Program& out = hp.program;
  out.data = std::move(data);
  out.code.reserve(total);
  out.provenance.reserve(total);
  for (const Group& g : groups) {
    for (const Line& l : g.lines) {
      Instruction inst = l.inst;
      const auto pos = static_cast<std::int64_t>(out.code.size());
      if (!std::holds_alternative<std::monostate>(l.target)) {
        const std::uint32_t t = resolve(l.target);
        if (is_cond_branch(inst.op)) {
          const std::int64_t off = static_cast<std::int64_t>(t) - pos - 1;
          if (off < kImmMin || off > kImmMax) throw RangeError("branch offset out of range after rewriting");
          inst.imm = static_cast<std::int32_t>(off);
        } else if (inst.op == Opcode::Jump) {
          inst.target = t;
        }
      }
      out.code.push_back(inst);
      out.provenance.push_back(l.prov);
    }
  }
  for (const auto& [name, idx] : in.labels) out.labels.emplace(name, resolve(Ref{idx, kLanding}));
  out.entry = in.code.empty() ? 0 : resolve(Ref{in.entry, kLanding});

  hp.pc_map.resize(groups.size());
  hp.entry_map.resize(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (auto s : groups[g].semantic) hp.pc_map[g].push_back(offset[g] + s);
    hp.entry_map[g] = offset[g] + groups[g].entry;
  }
  return hp;
}

std::set<unsigned> used_registers(const Program& p) {
  std::set<unsigned> used;
  for (const auto& in : p.code) {
    for (auto r : sources(in)) {
      if (r) used.insert(r);
    }
    if (auto d = destination(in); d && *d) used.insert(*d);
  }
  return used;
}

}  // namespace

HardenedProgram identity(const Program& p, const HardeningConfig& cfg) {
  HardenedProgram hp;
  hp.program = p;
  hp.config = cfg;
  hp.pc_map.resize(p.code.size());
  hp.entry_map.resize(p.code.size());
  for (std::uint32_t i = 0; i < p.code.size(); ++i) {
    hp.pc_map[i] = {i};
    hp.entry_map[i] = i;
  }
  return hp;
}

HardenedProgram apply_variables(const Program& p, const HardeningConfig& cfg) {
  const std::set<unsigned> used = used_registers(p);
  for (unsigned r : used) {
    const unsigned rep = r + cfg.replica_reg_offset;
    if (rep >= kNumRegisters || used.count(rep) || rep == cfg.signature_reg) {
      throw RegisterPressureError(fmt::format("no free replica register for r{}", r));
    }
  }
  auto rep = [&](unsigned r) { return r == 0 ? 0u : r + cfg.replica_reg_offset; };

  const std::uint32_t replica_off = cfg.data_replica_offset.value_or(p.data_bytes());
  if (replica_off < p.data_bytes() || replica_off % 4 != 0) {
    throw RangeError(fmt::format("data replica offset {} overlaps or misaligns the data segment", replica_off));
  }
  auto shifted = [&](std::int32_t imm) {
    const std::int64_t v = std::int64_t{imm} + replica_off;
    if (v > kImmMax) throw RangeError("replica address offset exceeds the 16-bit immediate");
    return static_cast<std::int32_t>(v);
  };

  std::vector<Group> groups(p.code.size());
  for (std::uint32_t i = 0; i < p.code.size(); ++i) {
    Group& g = groups[i];
    const Line core = input_line(p, i);
    const Instruction& in = core.inst;
    if (core.prov.origin != Origin::Original) {
      g.lines = {core};
      g.semantic = {0};
      continue;
    }

    const auto src = sources(in);
    for (std::size_t k = 0; k < src.size(); ++k) {
      const unsigned r = src[k];
      if (r == 0 || (k == 1 && src[0] == r)) continue;
      g.lines.push_back(inserted(ins::bne(r, rep(r), 0), Origin::R3, ToError{}));
    }
    g.core = static_cast<std::uint32_t>(g.lines.size());
    g.lines.push_back(core);
    g.semantic = {g.core};

    std::optional<Instruction> replica;
    if (is_alu_rr(in.op)) {
      replica = ins::alu(in.op, rep(in.rd), rep(in.rs), rep(in.rt));
    } else if (in.op == Opcode::Addi) {
      replica = ins::addi(rep(in.rd), rep(in.rs), in.imm);
    } else if (in.op == Opcode::Load) {
      replica = ins::ld(rep(in.rd), rep(in.rs), shifted(in.imm));
    } else if (in.op == Opcode::Store) {
      replica = ins::st(rep(in.rs), shifted(in.imm), rep(in.rt));
    }
    if (replica && !(destination(in) == std::uint8_t{0})) {
      g.lines.push_back(inserted(*replica, Origin::R1R2));
      g.semantic.push_back(g.core + 1);
    }
  }

  std::vector<Word> data = p.data;
  data.resize(replica_off / 4, 0);
  data.insert(data.end(), p.data.begin(), p.data.end());

  HardeningConfig done = cfg;
  done.variables = true;
  return link(p, std::move(groups), std::move(data), done);
}

HardenedProgram apply_inverted_branches(const Program& p, const HardeningConfig& cfg) {
  const auto n = static_cast<std::uint32_t>(p.code.size());
  auto is_protected = [&](std::uint32_t i) {
    return is_cond_branch(p.code[i].op) && p.provenance[i].origin == Origin::Original &&
           p.branch_target(i) != p.error_index();
  };

  std::map<std::uint32_t, std::vector<std::uint32_t>> branches_to;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (is_protected(i)) branches_to[*p.branch_target(i)].push_back(i);
  }

  std::vector<Group> groups(n);
  std::map<std::uint32_t, std::uint32_t> inverted_slot;  // branch index -> slot in its target's group
  for (std::uint32_t t = 0; t < n; ++t) {
    Group& g = groups[t];
    auto it = branches_to.find(t);
    if (it != branches_to.end()) {
      const bool falls_in = t > 0 && p.code[t - 1].op != Opcode::Jump && !ends_execution(p.code[t - 1].op);
      const std::size_t core_slot = (falls_in ? 1 : 0) + 2 * it->second.size() - 1;
      const Ref to_core{t, static_cast<std::uint32_t>(core_slot)};
      if (falls_in) g.lines.push_back(inserted(ins::jump(0), Origin::R4, to_core));
      for (std::size_t k = 0; k < it->second.size(); ++k) {
        const Instruction& b = p.code[it->second[k]];
        Instruction inv = b;
        inv.op = b.op == Opcode::Beq ? Opcode::Bne : Opcode::Beq;
        inverted_slot[it->second[k]] = static_cast<std::uint32_t>(g.lines.size());
        g.lines.push_back(inserted(inv, Origin::R4, ToError{}));
        if (k + 1 < it->second.size()) g.lines.push_back(inserted(ins::jump(0), Origin::R4, to_core));
      }
    }
    g.core = static_cast<std::uint32_t>(g.lines.size());
    g.landing = g.core;
    g.entry = g.core;
    g.semantic = {g.core};
    g.lines.push_back(input_line(p, t));
  }

  for (std::uint32_t i = 0; i < n; ++i) {
    if (!is_protected(i)) continue;
    Group& g = groups[i];
    const std::uint32_t t = *p.branch_target(i);
    g.lines[g.core].target = Ref{t, inverted_slot.at(i)};
    g.lines.insert(g.lines.begin() + g.core + 1, inserted(p.code[i], Origin::R4, ToError{}));
  }

  HardeningConfig done = cfg;
  done.inverted_branches = true;
  return link(p, std::move(groups), p.data, done);
}

HardenedProgram apply_signatures(const Program& p, const HardeningConfig& cfg) {
  if (used_registers(p).count(cfg.signature_reg)) {
    throw RegisterPressureError(fmt::format("signature register r{} is used by the program", cfg.signature_reg));
  }
  const ControlFlowGraph g = build_cfg(p);
  if (g.blocks.size() > static_cast<std::size_t>(kImmMax)) {
    throw RangeError("too many basic blocks for immediate signatures");
  }

  std::vector<Group> groups(p.code.size());
  for (const BasicBlock& b : g.blocks) {
    const std::int32_t sig = b.signature;
    // Blocks holding nothing but inverted-branch checks and their jumps
    // carry no program work; they are left unsigned.
    bool check_only = true;
    for (std::uint32_t i = b.start; i <= b.end; ++i) check_only = check_only && p.provenance[i].origin == Origin::R4;
    for (std::uint32_t i = b.start; i <= b.end; ++i) {
      Group& grp = groups[i];
      if (check_only) {
        grp.core = 0;
        grp.semantic = {0};
        grp.lines.push_back(input_line(p, i));
        continue;
      }
      if (i == b.start) grp.lines.push_back(inserted(ins::addi(cfg.signature_reg, 0, sig), Origin::R5R6));
      const bool terminator = i == b.end && ends_block(p, i);
      if (terminator) grp.lines.push_back(inserted(ins::bnei(cfg.signature_reg, sig), Origin::R5R6, ToError{}));
      grp.core = static_cast<std::uint32_t>(grp.lines.size());
      grp.semantic = {grp.core};
      grp.lines.push_back(input_line(p, i));
      if (i == b.end && !terminator) {
        grp.lines.push_back(inserted(ins::bnei(cfg.signature_reg, sig), Origin::R5R6, ToError{}));
      }
    }
  }

  HardeningConfig done = cfg;
  done.signatures = true;
  return link(p, std::move(groups), p.data, done);
}

HardenedProgram compose(const HardenedProgram& first, const HardenedProgram& second) {
  HardenedProgram hp;
  hp.program = second.program;
  hp.config = second.config;
  hp.config.variables |= first.config.variables;
  hp.config.inverted_branches |= first.config.inverted_branches;
  hp.config.signatures |= first.config.signatures;
  hp.pc_map.resize(first.pc_map.size());
  hp.entry_map.resize(first.entry_map.size());
  for (std::size_t i = 0; i < first.pc_map.size(); ++i) {
    for (auto j : first.pc_map[i]) {
      const auto& img = second.pc_map.at(j);
      hp.pc_map[i].insert(hp.pc_map[i].end(), img.begin(), img.end());
    }
    std::sort(hp.pc_map[i].begin(), hp.pc_map[i].end());
    hp.entry_map[i] = second.entry_map.at(first.entry_map[i]);
  }
  return hp;
}

HardenedProgram apply_all(const Program& p, const HardeningConfig& cfg) {
  HardenedProgram hp = identity(p, cfg);
  if (cfg.variables) hp = compose(hp, apply_variables(hp.program, cfg));
  if (cfg.inverted_branches) hp = compose(hp, apply_inverted_branches(hp.program, cfg));
  if (cfg.signatures) hp = compose(hp, apply_signatures(hp.program, cfg));
  hp.config = cfg;
  return hp;
}

std::string format_pc_map(const HardenedProgram& hp) {
  std::string out;
  for (std::size_t i = 0; i < hp.pc_map.size(); ++i) {
    out += fmt::format("{}: {}\n", i, fmt::join(hp.pc_map[i], " "));
  }
  return out;
}

}  // namespace sihft
