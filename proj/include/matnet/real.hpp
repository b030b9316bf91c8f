#pragma once

// Scalar type for all kernels. Tests and shipped configs run at 64-bit;
// -DMATNET_REAL32 switches to 32-bit floats.
namespace matnet {

#ifdef MATNET_REAL32
using real_t = float;
#else
using real_t = double;
#endif

}  // namespace matnet
