#include "sihft/cfg.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <limits>

namespace sihft {

bool ends_block(const Program& p, std::uint32_t i) {
  const Opcode op = p.code[i].op;
  if (op == Opcode::Jump || ends_execution(op)) return true;
  if (is_cond_branch(op)) return p.branch_target(i) != p.error_index();
  return false;
}

ControlFlowGraph build_cfg(const Program& p) {
  ControlFlowGraph g;
  const auto n = static_cast<std::uint32_t>(p.code.size());
  if (n == 0) return g;

  std::vector<bool> leader(n, false);
  leader[0] = true;
  if (p.entry < n) leader[p.entry] = true;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!ends_block(p, i)) continue;
    if (i + 1 < n) leader[i + 1] = true;
    if (auto t = p.branch_target(i); t && *t < n) leader[*t] = true;
  }

  g.block_of.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (leader[i]) {
      if (g.blocks.size() >= std::numeric_limits<std::uint16_t>::max()) {
        throw RangeError("too many basic blocks for 16-bit signatures");
      }
      BasicBlock b;
      b.id = static_cast<std::uint32_t>(g.blocks.size());
      b.start = i;
      b.signature = static_cast<std::uint16_t>(b.id + 1);
      g.blocks.push_back(std::move(b));
    }
    g.blocks.back().end = i;
    g.block_of[i] = g.blocks.back().id;
  }

  for (auto& b : g.blocks) {
    const Instruction& last = p.code[b.end];
    auto add = [&](std::uint32_t pc) {
      if (pc >= n) return;
      const std::uint32_t s = g.block_of[pc];
      if (std::find(b.successors.begin(), b.successors.end(), s) == b.successors.end()) {
        b.successors.push_back(s);
      }
    };
    if (last.op == Opcode::Jump) {
      add(last.target);
    } else if (ends_execution(last.op)) {
      // no successors
    } else {
      if (is_cond_branch(last.op)) add(*p.branch_target(b.end));
      add(b.end + 1);
    }
  }
  g.entry = p.entry < n ? g.block_of[p.entry] : 0;
  return g;
}

std::string dump_cfg(const ControlFlowGraph& g) {
  std::string out;
  for (const auto& b : g.blocks) {
    out += fmt::format("B{} [{},{}] sig={} ->", b.id, b.start, b.end, b.signature);
    for (auto s : b.successors) out += fmt::format(" B{}", s);
    out += "\n";
  }
  return out;
}

}  // namespace sihft
