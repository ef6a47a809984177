#pragma once

#include "mtil/numkit/kernels.hpp"

namespace mtil::kernels::detail {

extern const KernelTable kScalarTable;
#if defined(MTIL_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif
#if defined(MTIL_HAVE_NEON)
extern const KernelTable kNeonTable;
#endif

}  // namespace mtil::kernels::detail
