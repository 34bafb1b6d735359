#include "charax/core/parallel.hpp"

#include <atomic>

namespace charax {
namespace {
std::atomic<int> g_workers{1};
}

void set_workers(int n) { g_workers.store(n < 1 ? 1 : n); }
int workers() { return g_workers.load(); }

}  // namespace charax
