// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <string>

#include "mmfeed/kernels/kernels.hpp"

namespace mmfeed::kernels {
namespace {

const KernelSet* find(std::string_view name) {
  for (const KernelSet* k : available_kernels()) {
    if (name == k->name) return k;
  }
  return nullptr;
}

const KernelSet* choose_default() {
  if (const char* env = std::getenv("MMFEED_KERNELS"); env != nullptr && *env != '\0') {
    if (const KernelSet* k = find(env)) return k;
  }
  if (const KernelSet* k = avx2_kernels()) return k;
  if (const KernelSet* k = neon_kernels()) return k;
  return &scalar_kernels();
}

const KernelSet*& current() {
  static const KernelSet* set = choose_default();
  return set;
}

}  // namespace

std::vector<const KernelSet*> available_kernels() {
  std::vector<const KernelSet*> out{&scalar_kernels()};
  if (const KernelSet* k = avx2_kernels()) out.push_back(k);
  if (const KernelSet* k = neon_kernels()) out.push_back(k);
  return out;
}

const KernelSet& active() { return *current(); }

bool select(std::string_view name) {
  const KernelSet* k = find(name);
  if (k == nullptr) return false;
  current() = k;
  return true;
}

}  // namespace mmfeed::kernels
