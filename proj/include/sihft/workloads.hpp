#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sihft/isa.hpp"

namespace sihft {

struct Workload {
  std::string name;
  std::string source;                // assembly text
  std::vector<Word> expected_data;   // full data segment after a fault-free run
  std::uint64_t dyn_bound = 0;       // upper bound on the golden instruction count
};

using Matrix = std::vector<std::vector<std::int32_t>>;

/// The two constant input matrices used by matmul(n).
std::pair<Matrix, Matrix> matmul_inputs(unsigned n);

/// C = A x B for n x n signed matrices, n in [2, 8]. Data layout: A at byte
/// 0, B at 4n^2, C at 8n^2, all row-major. Uses r1-r13 only.
Workload matmul(unsigned n);
Workload matmul(const Matrix& a, const Matrix& b, std::string name);

/// Bubble sort of a 16-word array stored in reverse order.
Workload bubble_sort();
/// Straight-line sum/or-fold of a 16-word constant block.
Workload checksum();

std::vector<Workload> aux_workloads();

/// "matmul-<n>", "bubblesort", "checksum".
std::optional<Workload> find_workload(std::string_view name);
std::vector<std::string> workload_names();

}  // namespace sihft
