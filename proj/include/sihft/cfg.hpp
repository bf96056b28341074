#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sihft/program.hpp"

namespace sihft {

struct BasicBlock {
  std::uint32_t id = 0;
  std::uint32_t start = 0;  // inclusive instruction index range
  std::uint32_t end = 0;
  std::uint16_t signature = 0;  // 1..N; 0 is reserved for "no signature"
  std::vector<std::uint32_t> successors;
};

struct ControlFlowGraph {
  std::vector<BasicBlock> blocks;
  std::uint32_t entry = 0;
  std::vector<std::uint32_t> block_of;  // instruction index -> block id

  bool is_block_start(std::uint32_t pc) const {
    return pc < block_of.size() && blocks[block_of[pc]].start == pc;
  }
};

/// True for instructions that end a basic block: jumps, halt/detect, and
/// conditional branches whose target is inside the program. Branches to the
/// detection handler are consistency checks and stay inside their block.
bool ends_block(const Program& p, std::uint32_t i);

ControlFlowGraph build_cfg(const Program& p);

/// One block per line: "B<id> [start,end] sig=<s> -> B<a> B<b>".
std::string dump_cfg(const ControlFlowGraph& g);

}  // namespace sihft
