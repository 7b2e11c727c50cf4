#pragma once

#include "dagsm/full_model.hpp"
#include "dagsm/nc_model.hpp"
#include "dagsm/params.hpp"
#include "dagsm/ub_model.hpp"

namespace dagsm {

/// Builds the model named by params.model.
inline Mdp build_model(const ModelParams& p) {
  switch (p.model) {
    case ModelKind::kNc: return build_nc_model(p);
    case ModelKind::kFull: return build_full_model(p);
    case ModelKind::kUpperBound: return build_ub_model(p);
  }
  throw ParamError("unknown model");
}

}  // namespace dagsm
