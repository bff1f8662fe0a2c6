#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dimc {

// Base of every domain error raised by the library. The CLI maps these to
// exit status 1; usage problems are reported separately with status 2.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define DIMC_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                     \
   public:                                                         \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

DIMC_DEFINE_ERROR(SchemaError);
DIMC_DEFINE_ERROR(DanglingReference);
DIMC_DEFINE_ERROR(AcyclicityViolation);
DIMC_DEFINE_ERROR(NonPositiveRate);
DIMC_DEFINE_ERROR(UnknownState);
DIMC_DEFINE_ERROR(NameCollision);
DIMC_DEFINE_ERROR(ClosureBudgetExceeded);
DIMC_DEFINE_ERROR(NoDelayTransition);
DIMC_DEFINE_ERROR(NotNonUrgent);
DIMC_DEFINE_ERROR(TargetNotSync);
DIMC_DEFINE_ERROR(OracleTooLarge);
DIMC_DEFINE_ERROR(DistributionNotNormalized);
DIMC_DEFINE_ERROR(UndefinedProfileEntry);
DIMC_DEFINE_ERROR(SingularSystem);

#undef DIMC_DEFINE_ERROR

// Carries the exact size of the rejected strategy space.
class PolicySpaceTooLarge : public Error {
 public:
  PolicySpaceTooLarge(const std::string& what, std::uint64_t count, bool saturated)
      : Error("PolicySpaceTooLarge: " + what), count_(count), saturated_(saturated) {}

  std::uint64_t count() const noexcept { return count_; }
  // True when the count did not fit in 64 bits; count() is then UINT64_MAX.
  bool saturated() const noexcept { return saturated_; }

 private:
  std::uint64_t count_;
  bool saturated_;
};

}  // namespace dimc
