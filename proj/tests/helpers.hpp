#pragma once

#include <cstdint>

#include "cpcp/linalg.hpp"
#include "cpcp/rng.hpp"

namespace testing_util {

inline cpcp::Matrix gaussian(cpcp::Index m, cpcp::Index n, std::uint64_t seed) {
  cpcp::Rng rng(seed, 0x7e57);
  cpcp::Matrix x(m, n);
  for (cpcp::Index k = 0; k < x.size(); ++k) x.data()[k] = rng.normal();
  return x;
}

inline double max_abs_diff(const cpcp::Matrix& a, const cpcp::Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace testing_util
