#pragma once

#include "gsheaf/autodiff/sheaf_ops.hpp"

namespace gsheaf {

/// One sheaf diffusion update on features X (n, d, h):
///   X' = (1 + eps) X - elu(Delta (I ⊗ W1) X W2),
/// with eps (n * d) clamped to [-1, 1] and `blocks` from ad::sheaf_blocks.
ad::Var nsd_update(ad::Var x, ad::Var blocks, ad::Var w1, ad::Var w2, ad::Var eps,
                   const ad::IncidencePlan& plan);

}  // namespace gsheaf
