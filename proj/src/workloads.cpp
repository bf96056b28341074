#include "sihft/workloads.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cstdlib>

#include "sihft/rng.hpp"

namespace sihft {

namespace {

constexpr std::uint64_t kMatrixSeed = 20100601;
constexpr std::int32_t kMaxA = 9;
constexpr std::int32_t kMaxB = 15;

std::string word_lines(const std::vector<std::int32_t>& values, std::size_t per_line) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); i += per_line) {
    std::vector<std::int32_t> row(values.begin() + static_cast<std::ptrdiff_t>(i),
                                  values.begin() + static_cast<std::ptrdiff_t>(std::min(values.size(), i + per_line)));
    out += fmt::format("        .word {}\n", fmt::join(row, ", "));
  }
  return out;
}

std::vector<std::int32_t> flatten(const Matrix& m) {
  std::vector<std::int32_t> out;
  for (const auto& row : m) out.insert(out.end(), row.begin(), row.end());
  return out;
}

}  // namespace

std::pair<Matrix, Matrix> matmul_inputs(unsigned n) {
  std::mt19937_64 rng(kMatrixSeed + n);
  Matrix a(n, std::vector<std::int32_t>(n));
  Matrix b(n, std::vector<std::int32_t>(n));
  for (auto& row : a)
    for (auto& v : row) v = static_cast<std::int32_t>(uniform_between(rng, -kMaxA, kMaxA));
  for (auto& row : b)
    for (auto& v : row) v = static_cast<std::int32_t>(uniform_between(rng, -kMaxB, kMaxB));
  return {a, b};
}

Workload matmul(unsigned n) {
  if (n < 2 || n > 8) throw Error(fmt::format("matmul dimension must be in [2, 8], got {}", n));
  auto [a, b] = matmul_inputs(n);
  return matmul(a, b, fmt::format("matmul-{}", n));
}

Workload matmul(const Matrix& a, const Matrix& b, std::string name) {
  const auto n = static_cast<unsigned>(a.size());
  if (n < 2 || n > 8 || b.size() != n) throw Error("matmul needs two square matrices of equal size in [2, 8]");
  const unsigned stride = 4 * n;
  const unsigned b_base = 4 * n * n;
  const unsigned c_base = 8 * n * n;

  std::string src = fmt::format(
      "# {0}: C = A x B for {1}x{1} signed matrices.\n"
      "# A at byte 0, B at {2}, C at {3}, row-major. The product a*b is\n"
      "# formed by repeated addition since the ISA has no multiplier.\n",
      name, n, b_base, c_base);
  src += "# A\n" + word_lines(flatten(a), n);
  src += "# B\n" + word_lines(flatten(b), n);
  src += fmt::format("# C\n        .space {}\n\n", 4 * n * n);
  src += fmt::format(
      "        addi r1, r0, 0          # A row pointer\n"
      "        addi r3, r0, {0}        # C pointer\n"
      "        addi r11, r0, {1}        # rows left\n"
      "row:\n"
      "        addi r2, r0, {2}        # B column pointer\n"
      "        addi r12, r0, {1}        # columns left\n"
      "col:\n"
      "        addi r5, r0, 0          # accumulator\n"
      "        mv   r6, r1             # &A[i][k]\n"
      "        mv   r7, r2             # &B[k][j]\n"
      "        addi r4, r0, {1}         # k left\n"
      "dot:\n"
      "        ld   r8, [r6]\n"
      "        ld   r9, [r7]\n"
      "        slt  r10, r9, r0\n"
      "        beq  r10, r0, mulpos\n"
      "        sub  r8, r0, r8         # make the multiplier positive\n"
      "        sub  r9, r0, r9\n"
      "mulpos:\n"
      "        beq  r9, r0, muldone\n"
      "mul:\n"
      "        add  r5, r5, r8\n"
      "        addi r9, r9, -1\n"
      "        bne  r9, r0, mul\n"
      "muldone:\n"
      "        addi r6, r6, 4\n"
      "        addi r7, r7, {3}\n"
      "        addi r4, r4, -1\n"
      "        bne  r4, r0, dot\n"
      "        st   [r3], r5\n"
      "        addi r3, r3, 4\n"
      "        addi r2, r2, 4\n"
      "        addi r12, r12, -1\n"
      "        bne  r12, r0, col\n"
      "        addi r1, r1, {3}\n"
      "        addi r11, r11, -1\n"
      "        bne  r11, r0, row\n"
      "        halt\n",
      c_base, n, b_base, stride);

  Workload w;
  w.name = std::move(name);
  w.source = std::move(src);
  w.expected_data = std::vector<Word>(3 * n * n, 0);
  std::int64_t max_b = 0;
  for (unsigned i = 0; i < n; ++i) {
    for (unsigned j = 0; j < n; ++j) {
      w.expected_data[i * n + j] = static_cast<Word>(a[i][j]);
      w.expected_data[n * n + i * n + j] = static_cast<Word>(b[i][j]);
      max_b = std::max<std::int64_t>(max_b, std::abs(std::int64_t{b[i][j]}));
      Word acc = 0;
      for (unsigned k = 0; k < n; ++k) acc += static_cast<Word>(a[i][k]) * static_cast<Word>(b[k][j]);
      w.expected_data[2 * n * n + i * n + j] = acc;
    }
  }
  w.dyn_bound = std::uint64_t{n} * n * n * (12 + 3 * static_cast<std::uint64_t>(max_b)) + 12 * n * n + 8 * n + 8;
  return w;
}

Workload bubble_sort() {
  constexpr int kN = 16;
  std::vector<std::int32_t> values(kN);
  for (int i = 0; i < kN; ++i) values[i] = kN - i;

  Workload w;
  w.name = "bubblesort";
  w.source = "# bubblesort: ascending sort of 16 words, initially reversed.\n" + word_lines(values, 8) +
             fmt::format(
                 "\n"
                 "        addi r1, r0, {}         # passes left\n"
                 "outer:\n"
                 "        addi r2, r0, 0          # element pointer\n"
                 "        mv   r3, r1             # comparisons left in this pass\n"
                 "inner:\n"
                 "        ld   r4, [r2]\n"
                 "        ld   r5, [r2 + 4]\n"
                 "        slt  r6, r5, r4\n"
                 "        beq  r6, r0, noswap\n"
                 "        st   [r2], r5\n"
                 "        st   [r2 + 4], r4\n"
                 "noswap:\n"
                 "        addi r2, r2, 4\n"
                 "        addi r3, r3, -1\n"
                 "        bne  r3, r0, inner\n"
                 "        addi r1, r1, -1\n"
                 "        bne  r1, r0, outer\n"
                 "        halt\n",
                 kN - 1);
  std::vector<std::int32_t> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  for (auto v : sorted) w.expected_data.push_back(static_cast<Word>(v));
  w.dyn_bound = 12ull * kN * kN + 8 * kN + 8;
  return w;
}

Workload checksum() {
  constexpr int kN = 16;
  std::vector<std::int32_t> values(kN);
  for (int i = 0; i < kN; ++i) values[i] = 0x1000 * (i + 1) + 17 * i * i - 3;

  std::string body;
  for (int i = 0; i < kN; ++i) {
    body += fmt::format(
        "        ld   r2, [r0 + {}]\n"
        "        add  r1, r1, r2\n"
        "        or   r3, r3, r2\n",
        4 * i);
  }
  Workload w;
  w.name = "checksum";
  w.source = "# checksum: straight-line sum and or-fold of 16 words.\n" + word_lines(values, 8) +
             "        .space 8                # sum, or-fold\n\n" + body +
             fmt::format(
                 "        st   [r0 + {}], r1\n"
                 "        st   [r0 + {}], r3\n"
                 "        halt\n",
                 4 * kN, 4 * kN + 4);
  Word sum = 0;
  Word fold = 0;
  for (auto v : values) {
    w.expected_data.push_back(static_cast<Word>(v));
    sum += static_cast<Word>(v);
    fold |= static_cast<Word>(v);
  }
  w.expected_data.push_back(sum);
  w.expected_data.push_back(fold);
  w.dyn_bound = 3 * kN + 3;
  return w;
}

std::vector<Workload> aux_workloads() { return {bubble_sort(), checksum()}; }

std::optional<Workload> find_workload(std::string_view name) {
  if (name == "bubblesort") return bubble_sort();
  if (name == "checksum") return checksum();
  constexpr std::string_view prefix = "matmul-";
  if (name.substr(0, prefix.size()) == prefix) {
    const std::string_view digits = name.substr(prefix.size());
    unsigned n = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
    if (ec == std::errc{} && ptr == digits.data() + digits.size() && n >= 2 && n <= 8) return matmul(n);
  }
  return std::nullopt;
}

std::vector<std::string> workload_names() {
  std::vector<std::string> names;
  for (unsigned n = 2; n <= 8; ++n) names.push_back(fmt::format("matmul-{}", n));
  names.emplace_back("bubblesort");
  names.emplace_back("checksum");
  return names;
}

}  // namespace sihft
