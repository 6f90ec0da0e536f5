#pragma once

#include <stdexcept>
#include <string>

namespace weakdiss {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define WEAKDISS_DEFINE_ERROR(Name)            \
  class Name : public Error {                  \
   public:                                     \
    explicit Name(const std::string& what_arg) \
        : Error(#Name ": " + what_arg) {}      \
  };

WEAKDISS_DEFINE_ERROR(NormTooLarge)
WEAKDISS_DEFINE_ERROR(NotDensity)
WEAKDISS_DEFINE_ERROR(DimensionMismatch)
WEAKDISS_DEFINE_ERROR(InvalidChannel)
WEAKDISS_DEFINE_ERROR(NegativeTau)
WEAKDISS_DEFINE_ERROR(NoConvergence)
WEAKDISS_DEFINE_ERROR(PostselectionVanishes)
WEAKDISS_DEFINE_ERROR(DenominatorVanishes)
WEAKDISS_DEFINE_ERROR(EpsilonOutOfRange)
WEAKDISS_DEFINE_ERROR(SingularInversion)
WEAKDISS_DEFINE_ERROR(DegenerateFit)

#undef WEAKDISS_DEFINE_ERROR

}  // namespace weakdiss
