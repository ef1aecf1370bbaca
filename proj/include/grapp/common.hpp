#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace grapp {

// Numeric tolerances used throughout.  Axiom checks on float-valued lengths
// allow kAxiomTol of slack; comparisons of a measured defect against a stated
// bound allow kEpsSlack unless the computation is exact, in which case the
// comparison is exact too.
inline constexpr double kAxiomTol = 1e-9;
inline constexpr double kEpsSlack = 1e-12;
inline constexpr double kMatEqTol = 1e-9;
inline constexpr double kPivotTol = 1e-9;
inline constexpr double kUnitaryTol = 1e-9;

class Error : public std::runtime_error {
 public:
  enum class Kind {
    Structural,  // element does not belong to the group / malformed value
    Capability,  // operation not supported for this group kind (e.g. enumerate Z^d)
    Parameter,   // bad numeric or mode parameter
    Coverage,    // a map is missing a required assignment
    Provider,    // a witness provider cannot produce the requested object
    Domain,      // objects passed together live over mismatched domains
    Schema,      // scenario / report (de)serialization problem
  };

  Error(Kind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline Error structural_error(std::string m) { return Error(Error::Kind::Structural, std::move(m)); }
inline Error capability_error(std::string m) { return Error(Error::Kind::Capability, std::move(m)); }
inline Error parameter_error(std::string m) { return Error(Error::Kind::Parameter, std::move(m)); }
inline Error coverage_error(std::string m) { return Error(Error::Kind::Coverage, std::move(m)); }
inline Error provider_error(std::string m) { return Error(Error::Kind::Provider, std::move(m)); }
inline Error domain_error(std::string m) { return Error(Error::Kind::Domain, std::move(m)); }
inline Error schema_error(std::string m) { return Error(Error::Kind::Schema, std::move(m)); }

// value <= bound, with kEpsSlack of grace when the value came from floating
// point arithmetic.  Exact computations (permutation counts, table lookups)
// are compared exactly.
inline bool leq_with_tol(double value, double bound, bool exact) {
  return exact ? value <= bound : value <= bound + kEpsSlack;
}

// Exponent for L^p combinations: a finite p >= 1 or infinity.
struct Exponent {
  double p = std::numeric_limits<double>::infinity();

  static Exponent finite(double p) {
    if (!(p >= 1.0) || p == std::numeric_limits<double>::infinity())
      throw parameter_error("exponent must satisfy 1 <= p < infinity");
    return Exponent{p};
  }
  static Exponent infinity() { return Exponent{}; }
  bool is_infinite() const { return p == std::numeric_limits<double>::infinity(); }
};

// Deterministic sampling.  mt19937_64 is fully specified by the standard;
// the library distributions are not, so bounded draws go through rejection
// sampling on raw 64-bit words to keep streams reproducible across platforms.
class SampleRng {
 public:
  explicit SampleRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_word() { return engine_(); }

  // Uniform draw from [0, n).  Rejection keeps the result unbiased.
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) throw parameter_error("next_below: n must be positive");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    for (;;) {
      std::uint64_t w = engine_();
      if (w < limit) return w % n;
    }
  }

  std::uint64_t seed() const { return state_; }

 private:
  std::uint64_t state_;
  std::mt19937_64 engine_{state_};
};

}  // namespace grapp
