#pragma once

#include <stdexcept>
#include <string>

namespace psido {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define PSIDO_DEFINE_ERROR(Name)                                   \
    class Name : public Error {                                    \
    public:                                                        \
        explicit Name(const std::string& what) : Error(what) {}   \
    }

PSIDO_DEFINE_ERROR(GridMismatch);
PSIDO_DEFINE_ERROR(InvalidArgument);
PSIDO_DEFINE_ERROR(NonHermitianInput);
PSIDO_DEFINE_ERROR(IndexOutOfRange);
PSIDO_DEFINE_ERROR(TooLarge);
PSIDO_DEFINE_ERROR(SeparationViolated);
PSIDO_DEFINE_ERROR(BandTooNarrow);
PSIDO_DEFINE_ERROR(RankTooLarge);
PSIDO_DEFINE_ERROR(CGNoConvergence);
PSIDO_DEFINE_ERROR(LineSearchFailed);
PSIDO_DEFINE_ERROR(NonDescentDirection);
PSIDO_DEFINE_ERROR(TraceTooShort);
PSIDO_DEFINE_ERROR(ConfigError);
PSIDO_DEFINE_ERROR(MissingArtifacts);
PSIDO_DEFINE_ERROR(FormatError);

#undef PSIDO_DEFINE_ERROR

}  // namespace psido
