#include "n2a/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "n2a/errors.hpp"

namespace n2a::kernels {
namespace {

std::atomic<const Ops*> g_active{nullptr};

const Ops* pick_auto() {
  if (const char* env = std::getenv("N2A_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return &scalar_ops();
    if (std::strcmp(env, "avx2") == 0) {
      if (!avx2_supported()) throw ConfigError("N2A_KERNELS=avx2 but CPU lacks AVX2/FMA");
      return &avx2_ops();
    }
    throw ConfigError(std::string("unknown N2A_KERNELS value: ") + env);
  }
  return avx2_supported() ? &avx2_ops() : &scalar_ops();
}

}  // namespace

void select(Backend b) {
  switch (b) {
    case Backend::Scalar:
      g_active.store(&scalar_ops());
      return;
    case Backend::Avx2:
      if (!avx2_supported()) throw ConfigError("AVX2 backend requested but not supported by CPU");
      g_active.store(&avx2_ops());
      return;
  }
  throw ConfigError("invalid kernel backend");
}

void select_auto() { g_active.store(pick_auto()); }

const Ops& active() {
  const Ops* ops = g_active.load();
  if (!ops) {
    ops = pick_auto();
    g_active.store(ops);
  }
  return *ops;
}

Backend active_backend() {
  return &active() == &scalar_ops() ? Backend::Scalar : Backend::Avx2;
}

}  // namespace n2a::kernels
