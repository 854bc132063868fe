// SPDX-License-Identifier: Apache-2.0
//
// Finite-difference audit harness covering every method in the catalog:
// loss gradients w.r.t. raw embeddings on random batches, and end-to-end
// encoder parameter gradients through both encoders.
#pragma once

#include "awemet/config.hpp"
#include "awemet/records.hpp"

namespace awemet {

// Audits every method from gradcheck_methods(); rows appear in catalog
// order. Deterministic for a fixed options struct.
GradCheckReport run_gradcheck(const GradCheckOptions& opt);

}  // namespace awemet
