#include "navfield/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace navfield::kernels {
namespace {

const KernelTable* g_forced = nullptr;

const KernelTable* autodetect() {
  if (const char* env = std::getenv("NAVFIELD_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return &scalar_table();
    if (std::strcmp(env, "avx2") == 0 && avx2_table()) return avx2_table();
  }
  if (const KernelTable* t = avx2_table()) return t;
  return &scalar_table();
}

}  // namespace

const KernelTable& active() {
  if (g_forced) return *g_forced;
  static const KernelTable* detected = autodetect();
  return *detected;
}

void force_backend(const char* name) {
  if (!name) {
    g_forced = nullptr;
    return;
  }
  if (std::strcmp(name, "scalar") == 0) {
    g_forced = &scalar_table();
  } else if (std::strcmp(name, "avx2") == 0) {
    const KernelTable* t = avx2_table();
    if (!t) throw std::runtime_error("avx2 kernels not available on this CPU");
    g_forced = t;
  } else {
    throw std::runtime_error(std::string("unknown kernel backend: ") + name);
  }
}

}  // namespace navfield::kernels
