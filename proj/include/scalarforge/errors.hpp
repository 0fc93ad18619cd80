#pragma once

#include <stdexcept>
#include <string>

namespace sf {

// Base for everything the library throws on purpose; `kind()` is the stable
// machine-readable name the CLI reports.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define SF_DEFINE_ERROR(Name)                                                 \
    struct Name : Error {                                                     \
        explicit Name(const std::string& what) : Error(#Name, what) {}        \
    };

SF_DEFINE_ERROR(SizeMismatch)
SF_DEFINE_ERROR(BandUnresolved)
SF_DEFINE_ERROR(NonzeroMean)
SF_DEFINE_ERROR(UnknownSymbol)
SF_DEFINE_ERROR(OddMultiplier)
SF_DEFINE_ERROR(SingularPair)
SF_DEFINE_ERROR(NotOdd)
SF_DEFINE_ERROR(UnsupportedSymbol)
SF_DEFINE_ERROR(ParseError)
SF_DEFINE_ERROR(PhaseEscape)
SF_DEFINE_ERROR(EpsilonTooLarge)
SF_DEFINE_ERROR(ScaleInvariant)
SF_DEFINE_ERROR(ResolutionError)
SF_DEFINE_ERROR(TimeRange)
SF_DEFINE_ERROR(MeanDrift)
SF_DEFINE_ERROR(DefectFailure)
SF_DEFINE_ERROR(ScheduleError)
SF_DEFINE_ERROR(GradientCondition)
SF_DEFINE_ERROR(QuadratureError)
SF_DEFINE_ERROR(BlowUp)
SF_DEFINE_ERROR(ConfigError)
SF_DEFINE_ERROR(IoError)

#undef SF_DEFINE_ERROR

} // namespace sf
