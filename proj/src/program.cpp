#include "sihft/program.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

namespace sihft {

std::string_view origin_name(Origin o) {
  switch (o) {
    case Origin::Original: return "original";
    case Origin::R1R2: return "R1R2";
    case Origin::R3: return "R3";
    case Origin::R4: return "R4";
    case Origin::R5R6: return "R5R6";
  }
  return "?";
}

bool Program::uses_error_handler() const {
  for (std::uint32_t i = 0; i < code.size(); ++i) {
    if (branch_target(i) == error_index()) return true;
  }
  return false;
}

std::optional<std::uint32_t> Program::branch_target(std::uint32_t i) const {
  const Instruction& in = code.at(i);
  switch (in.op) {
    case Opcode::Beq:
    case Opcode::Bne:
      return static_cast<std::uint32_t>(static_cast<std::int64_t>(i) + 1 + in.imm);
    case Opcode::Bnei: return error_index();
    case Opcode::Jump: return in.target;
    default: return std::nullopt;
  }
}

ParseError::ParseError(std::size_t line, const std::string& what)
    : Error(fmt::format("line {}: {}", line, what)), line_(line) {}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}
bool is_identifier(std::string_view s) {
  return !s.empty() && is_ident_start(s.front()) && std::all_of(s.begin(), s.end(), is_ident_char);
}
bool is_error_name(std::string_view s) { return s == kErrorLabel || s == "error"; }

std::vector<std::string_view> split_operands(std::string_view s) {
  std::vector<std::string_view> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '[') ++depth;
    if (s[i] == ']') --depth;
    if (s[i] == ',' && depth == 0) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  if (!trim(s).empty()) out.push_back(trim(s.substr(start)));
  return out;
}

struct SourceLine {
  std::size_t number;
  std::string_view mnemonic;
  std::vector<std::string_view> operands;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Program run() {
    scan();
    for (const auto& [name, line] : pending_labels_) {
      throw ParseError(line, fmt::format("label '{}' does not precede an instruction", name));
    }
    for (const auto& line : lines_) prog_.code.push_back(build(line));
    if (entry_label_) {
      auto it = prog_.labels.find(entry_label_->first);
      if (it == prog_.labels.end()) {
        throw ParseError(entry_label_->second,
                         fmt::format("unresolved label '{}'", entry_label_->first));
      }
      prog_.entry = it->second;
    }
    prog_.provenance.resize(prog_.code.size());
    for (std::uint32_t i = 0; i < prog_.code.size(); ++i) prog_.provenance[i] = {Origin::Original, i};
    return std::move(prog_);
  }

 private:
  void scan() {
    std::size_t number = 0;
    std::size_t pos = 0;
    while (pos <= text_.size()) {
      std::size_t nl = text_.find('\n', pos);
      if (nl == std::string_view::npos) nl = text_.size();
      ++number;
      std::string_view line = text_.substr(pos, nl - pos);
      pos = nl + 1;
      if (auto c = line.find_first_of("#;"); c != std::string_view::npos) line = line.substr(0, c);
      line = trim(line);

      // Leading labels.
      while (true) {
        auto colon = line.find(':');
        if (colon == std::string_view::npos) break;
        std::string_view name = trim(line.substr(0, colon));
        if (!is_identifier(name)) break;
        if (is_error_name(name)) {
          throw ParseError(number, fmt::format("'{}' is reserved for the detection handler", name));
        }
        if (prog_.labels.count(name) || pending_labels_.count(std::string(name))) {
          throw ParseError(number, fmt::format("duplicate label '{}'", name));
        }
        pending_labels_.emplace(std::string(name), number);
        line = trim(line.substr(colon + 1));
      }
      if (line.empty()) continue;

      auto space = line.find_first_of(" \t");
      std::string_view head = line.substr(0, space);
      std::string_view rest = space == std::string_view::npos ? std::string_view{} : trim(line.substr(space));
      std::string mnem(head);
      std::transform(mnem.begin(), mnem.end(), mnem.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });

      if (mnem.front() == '.') {
        directive(number, mnem, split_operands(rest));
        continue;
      }
      for (auto& [name, _] : pending_labels_) {
        prog_.labels.emplace(name, static_cast<std::uint32_t>(lines_.size()));
      }
      pending_labels_.clear();
      mnemonics_.push_back(std::move(mnem));
      lines_.push_back({number, {}, split_operands(rest)});
    }
    for (std::size_t i = 0; i < lines_.size(); ++i) lines_[i].mnemonic = mnemonics_[i];
  }

  void directive(std::size_t number, const std::string& name, const std::vector<std::string_view>& ops) {
    if (name == ".word") {
      if (ops.empty()) throw ParseError(number, ".word needs at least one value");
      for (auto op : ops) {
        const std::int64_t v = integer(number, op);
        if (v < INT32_MIN || v > UINT32_MAX) throw ParseError(number, fmt::format("value out of range: {}", op));
        prog_.data.push_back(static_cast<Word>(v));
      }
    } else if (name == ".space") {
      if (ops.size() != 1) throw ParseError(number, ".space takes one byte count");
      const std::int64_t n = integer(number, ops[0]);
      if (n < 0 || n % 4 != 0) throw ParseError(number, ".space byte count must be a non-negative multiple of 4");
      prog_.data.insert(prog_.data.end(), static_cast<std::size_t>(n / 4), 0);
    } else if (name == ".entry") {
      if (ops.size() != 1 || !is_identifier(ops[0])) throw ParseError(number, ".entry takes one label");
      entry_label_ = {std::string(ops[0]), number};
    } else {
      throw ParseError(number, fmt::format("unknown directive '{}'", name));
    }
  }

  static std::int64_t integer(std::size_t number, std::string_view s) {
    s = trim(s);
    bool neg = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
      neg = s.front() == '-';
      s.remove_prefix(1);
      s = trim(s);
    }
    int base = 10;
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
      base = 16;
      s.remove_prefix(2);
    }
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
      throw ParseError(number, fmt::format("bad integer '{}'", s));
    }
    return neg ? -v : v;
  }

  static bool is_register(std::string_view s) {
    return s.size() >= 2 && (s[0] == 'r' || s[0] == 'R') &&
           std::all_of(s.begin() + 1, s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
  }

  static unsigned reg(std::size_t number, std::string_view s) {
    s = trim(s);
    if (!is_register(s)) throw ParseError(number, fmt::format("bad register '{}'", s));
    unsigned v = 0;
    std::from_chars(s.data() + 1, s.data() + s.size(), v);
    if (v >= kNumRegisters) throw ParseError(number, fmt::format("bad register '{}'", s));
    return v;
  }

  static std::int32_t imm16(std::size_t number, std::string_view s) {
    const std::int64_t v = integer(number, s);
    if (v < kImmMin || v > kImmMax) throw ParseError(number, fmt::format("immediate out of range: {}", s));
    return static_cast<std::int32_t>(v);
  }

  // "[rB]", "[rB + imm]", "[rB - imm]"
  static std::pair<unsigned, std::int32_t> memory(std::size_t number, std::string_view s) {
    s = trim(s);
    if (s.size() < 3 || s.front() != '[' || s.back() != ']') {
      throw ParseError(number, fmt::format("bad memory operand '{}'", s));
    }
    s = trim(s.substr(1, s.size() - 2));
    auto op = s.find_first_of("+-");
    if (op == std::string_view::npos) return {reg(number, s), 0};
    const unsigned base = reg(number, s.substr(0, op));
    std::string value(s.substr(op));
    value.erase(std::remove_if(value.begin(), value.end(), [](unsigned char c) { return std::isspace(c); }),
                value.end());
    return {base, imm16(number, value)};
  }

  std::uint32_t label(std::size_t number, std::string_view s) const {
    s = trim(s);
    if (is_error_name(s)) return kErrorTarget;
    auto it = prog_.labels.find(s);
    if (it == prog_.labels.end()) throw ParseError(number, fmt::format("unresolved label '{}'", s));
    return it->second;
  }

  std::int32_t branch_offset(std::size_t number, std::string_view s) const {
    std::uint32_t t = label(number, s);
    if (t == kErrorTarget) t = static_cast<std::uint32_t>(lines_.size());
    const std::int64_t off = static_cast<std::int64_t>(t) - static_cast<std::int64_t>(prog_.code.size()) - 1;
    if (off < kImmMin || off > kImmMax) throw ParseError(number, "branch offset out of range");
    return static_cast<std::int32_t>(off);
  }

  Instruction build(const SourceLine& l) {
    const auto n = l.number;
    const auto& ops = l.operands;
    const auto m = l.mnemonic;
    auto arity = [&](std::size_t k) {
      if (ops.size() != k) {
        throw ParseError(n, fmt::format("'{}' expects {} operand(s), got {}", m, k, ops.size()));
      }
    };

    if (m == "nop") { arity(0); return ins::nop(); }
    if (m == "halt") { arity(0); return ins::halt(); }
    if (m == "detect") { arity(0); return ins::detect(); }
    if (m == "add" || m == "sub" || m == "and" || m == "or" || m == "slt") {
      arity(3);
      const unsigned rd = reg(n, ops[0]);
      const unsigned rs = reg(n, ops[1]);
      if (!is_register(ops[2])) {
        if (m != "add") throw ParseError(n, fmt::format("'{}' takes register operands only", m));
        return ins::addi(rd, rs, imm16(n, ops[2]));
      }
      Opcode op = Opcode::Add;
      if (m == "sub") op = Opcode::Sub;
      if (m == "and") op = Opcode::And;
      if (m == "or") op = Opcode::Or;
      if (m == "slt") op = Opcode::Slt;
      return ins::alu(op, rd, rs, reg(n, ops[2]));
    }
    if (m == "addi") {
      arity(3);
      return ins::addi(reg(n, ops[0]), reg(n, ops[1]), imm16(n, ops[2]));
    }
    if (m == "mv") {
      arity(2);
      if (is_register(ops[1])) return ins::add(reg(n, ops[0]), reg(n, ops[1]), 0);
      return ins::addi(reg(n, ops[0]), 0, imm16(n, ops[1]));
    }
    if (m == "ld") {
      arity(2);
      auto [base, off] = memory(n, ops[1]);
      return ins::ld(reg(n, ops[0]), base, off);
    }
    if (m == "st") {
      arity(2);
      auto [base, off] = memory(n, ops[0]);
      return ins::st(base, off, reg(n, ops[1]));
    }
    if (m == "beq" || m == "bne") {
      arity(3);
      const unsigned rs = reg(n, ops[0]);
      if (m == "bne" && !is_register(ops[1])) {
        if (label(n, ops[2]) != kErrorTarget) {
          throw ParseError(n, "register-immediate compare may only branch to __error");
        }
        return ins::bnei(rs, imm16(n, ops[1]));
      }
      const unsigned rt = reg(n, ops[1]);
      const std::int32_t off = branch_offset(n, ops[2]);
      return m == "beq" ? ins::beq(rs, rt, off) : ins::bne(rs, rt, off);
    }
    if (m == "bnei") {
      arity(2);
      return ins::bnei(reg(n, ops[0]), imm16(n, ops[1]));
    }
    if (m == "jmp" || m == "j") {
      arity(1);
      std::uint32_t t = label(n, ops[0]);
      if (t == kErrorTarget) t = static_cast<std::uint32_t>(lines_.size());
      return ins::jump(t);
    }
    throw ParseError(n, fmt::format("unknown mnemonic '{}'", m));
  }

  static constexpr std::uint32_t kErrorTarget = UINT32_MAX;

  std::string_view text_;
  Program prog_;
  std::vector<SourceLine> lines_;
  std::vector<std::string> mnemonics_;
  std::map<std::string, std::size_t> pending_labels_;
  std::optional<std::pair<std::string, std::size_t>> entry_label_;
};

std::string mem_operand(unsigned base, std::int32_t off) {
  if (off == 0) return fmt::format("[r{}]", base);
  if (off < 0) return fmt::format("[r{} - {}]", base, -static_cast<std::int64_t>(off));
  return fmt::format("[r{} + {}]", base, off);
}

}  // namespace

Program parse(std::string_view text) { return Parser(text).run(); }

std::string disassemble(const Program& p, DisassemblyOptions opts) {
  const auto n = static_cast<std::uint32_t>(p.code.size());

  // One name per labelled index: keep user labels, invent L<i> for the rest.
  std::map<std::uint32_t, std::vector<std::string>> names;
  std::set<std::string, std::less<>> taken;
  for (const auto& [name, idx] : p.labels) {
    if (idx < n) {
      names[idx].push_back(name);
      taken.insert(name);
    }
  }
  auto ensure = [&](std::uint32_t idx) {
    if (idx >= n || names.count(idx)) return;
    std::string name = fmt::format("L{}", idx);
    while (taken.count(name)) name += "_";
    taken.insert(name);
    names[idx].push_back(std::move(name));
  };
  for (std::uint32_t i = 0; i < n; ++i) {
    if (auto t = p.branch_target(i); t && p.code[i].op != Opcode::Bnei) ensure(*t);
  }
  if (p.entry != 0) ensure(p.entry);
  auto target_name = [&](std::uint32_t t) -> std::string {
    if (t == n) return std::string(kErrorLabel);
    auto it = names.find(t);
    return it == names.end() ? fmt::format("L{}", t) : it->second.front();
  };

  std::string out;
  if (!p.data.empty()) {
    for (std::size_t i = 0; i < p.data.size(); i += 8) {
      out += "    .word ";
      for (std::size_t j = i; j < std::min(p.data.size(), i + 8); ++j) {
        if (j != i) out += ", ";
        out += fmt::format("{}", static_cast<std::int32_t>(p.data[j]));
      }
      out += "\n";
    }
  }
  if (p.entry != 0) out += fmt::format("    .entry {}\n", target_name(p.entry));

  for (std::uint32_t i = 0; i < n; ++i) {
    if (auto it = names.find(i); it != names.end()) {
      for (const auto& name : it->second) out += fmt::format("{}:\n", name);
    }
    const Instruction& in = p.code[i];
    std::string text;
    switch (in.op) {
      case Opcode::Nop:
      case Opcode::Halt:
      case Opcode::Detect: text = std::string(mnemonic(in.op)); break;
      case Opcode::Add:
      case Opcode::Sub:
      case Opcode::And:
      case Opcode::Or:
      case Opcode::Slt:
        text = fmt::format("{} r{}, r{}, r{}", mnemonic(in.op), in.rd, in.rs, in.rt);
        break;
      case Opcode::Addi: text = fmt::format("addi r{}, r{}, {}", in.rd, in.rs, in.imm); break;
      case Opcode::Load: text = fmt::format("ld r{}, {}", in.rd, mem_operand(in.rs, in.imm)); break;
      case Opcode::Store: text = fmt::format("st {}, r{}", mem_operand(in.rs, in.imm), in.rt); break;
      case Opcode::Beq:
      case Opcode::Bne:
        text = fmt::format("{} r{}, r{}, {}", mnemonic(in.op), in.rs, in.rt, target_name(*p.branch_target(i)));
        break;
      case Opcode::Bnei: text = fmt::format("bne r{}, {}, {}", in.rs, in.imm, kErrorLabel); break;
      case Opcode::Jump: text = fmt::format("jmp {}", target_name(in.target)); break;
    }
    if (opts.annotate_provenance && i < p.provenance.size()) {
      const auto& pv = p.provenance[i];
      const std::string tag = pv.origin == Origin::Original ? fmt::format("@{}", pv.address)
                                                            : std::string(origin_name(pv.origin));
      out += fmt::format("    {:<32}# {}\n", text, tag);
    } else {
      out += fmt::format("    {}\n", text);
    }
  }
  return out;
}

void validate(const Program& p) {
  const auto n = static_cast<std::uint32_t>(p.code.size());
  if (p.provenance.size() != p.code.size()) throw Error("provenance does not cover every instruction");
  if (n > 0 && p.entry >= n) throw Error("entry point outside the code");
  for (std::uint32_t i = 0; i < n; ++i) {
    encode(p.code[i]);
    if (auto t = p.branch_target(i); t && *t > n) {
      throw Error(fmt::format("instruction {} targets {} outside the code", i, *t));
    }
  }
  for (const auto& [name, idx] : p.labels) {
    if (idx >= n) throw Error(fmt::format("label '{}' outside the code", name));
  }
}

namespace {
void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}
std::uint32_t get32(std::span<const std::uint8_t> b, std::size_t off) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(b[off + k]) << (8 * k);
  return v;
}
}  // namespace

std::vector<std::uint8_t> to_image(const Program& p) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + 4 * (p.code.size() + p.data.size()));
  put32(out, kImageMagic);
  put32(out, static_cast<std::uint32_t>(p.code.size()));
  put32(out, p.data_bytes());
  put32(out, p.entry);
  for (const auto& in : p.code) put32(out, encode(in));
  for (Word w : p.data) put32(out, w);
  return out;
}

Program from_image(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16) throw Error("image too short for header");
  if (get32(bytes, 0) != kImageMagic) throw Error("bad image magic");
  const std::uint32_t words = get32(bytes, 4);
  const std::uint32_t data_bytes = get32(bytes, 8);
  const std::uint32_t entry = get32(bytes, 12);
  if (data_bytes % 4 != 0) throw Error("data segment size is not a multiple of 4");
  const std::size_t expected = 16 + std::size_t{words} * 4 + data_bytes;
  if (bytes.size() != expected) {
    throw Error(fmt::format("image size {} does not match header ({} expected)", bytes.size(), expected));
  }
  Program p;
  p.entry = entry;
  for (std::uint32_t i = 0; i < words; ++i) {
    p.code.push_back(decode(get32(bytes, 16 + 4 * std::size_t{i})));
    p.provenance.push_back({Origin::Original, i});
  }
  for (std::uint32_t i = 0; i < data_bytes / 4; ++i) {
    p.data.push_back(get32(bytes, 16 + 4 * std::size_t{words} + 4 * std::size_t{i}));
  }
  validate(p);
  return p;
}

}  // namespace sihft
