#pragma once

#include <stdexcept>
#include <string>

namespace mfglab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define MFGLAB_DEFINE_ERROR(Name)                 \
  struct Name : Error {                           \
    explicit Name(const std::string& msg = #Name) \
        : Error(std::string(#Name) + ": " + msg) {} \
  }

MFGLAB_DEFINE_ERROR(OutsideTube);
MFGLAB_DEFINE_ERROR(PerturbationTooLarge);
MFGLAB_DEFINE_ERROR(NotTangent);
MFGLAB_DEFINE_ERROR(NotBoundary);
MFGLAB_DEFINE_ERROR(NoConvergence);
MFGLAB_DEFINE_ERROR(BracketFailure);
MFGLAB_DEFINE_ERROR(Infeasible);
MFGLAB_DEFINE_ERROR(MaxIterations);
MFGLAB_DEFINE_ERROR(DimensionUnsupported);
MFGLAB_DEFINE_ERROR(NotInCone);
MFGLAB_DEFINE_ERROR(OutOfWindow);
MFGLAB_DEFINE_ERROR(DegenerateProbeSet);
MFGLAB_DEFINE_ERROR(OffGrid);
MFGLAB_DEFINE_ERROR(SizeLimit);
MFGLAB_DEFINE_ERROR(NotConverged);
MFGLAB_DEFINE_ERROR(NotOnSupport);
MFGLAB_DEFINE_ERROR(NoInteriorApproach);
MFGLAB_DEFINE_ERROR(BadTestFunction);
MFGLAB_DEFINE_ERROR(ConfigError);

#undef MFGLAB_DEFINE_ERROR

}  // namespace mfglab
