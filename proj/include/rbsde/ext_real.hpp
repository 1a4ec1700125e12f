#pragma once

#include <compare>
#include <limits>
#include <stdexcept>
#include <string>

namespace rbsde {

/// Real line extended by -inf and +inf.
///
/// Barriers use the infinities to mark an unconstrained side; the envelope
/// transform is genuinely -inf off the support of its measure. The
/// infinities are explicit states, never IEEE values hidden in a double:
/// constructing from a non-finite double throws, use from_double() at
/// ingestion boundaries instead.
class ExtReal {
 public:
  enum class Kind : unsigned char { neg_inf, finite, pos_inf };

  constexpr ExtReal() = default;
  constexpr ExtReal(double v) : value_(v) {  // NOLINT(google-explicit-constructor)
    if (!(v - v == 0.0)) throw std::domain_error("ExtReal: non-finite double; use from_double()");
  }

  static constexpr ExtReal neg_inf() { return ExtReal(Kind::neg_inf); }
  static constexpr ExtReal pos_inf() { return ExtReal(Kind::pos_inf); }

  /// Maps IEEE infinities to the explicit states; NaN is rejected.
  static ExtReal from_double(double v) {
    if (v != v) throw std::domain_error("ExtReal: NaN");
    if (v == std::numeric_limits<double>::infinity()) return pos_inf();
    if (v == -std::numeric_limits<double>::infinity()) return neg_inf();
    return ExtReal(v);
  }

  constexpr Kind kind() const { return kind_; }
  constexpr bool finite() const { return kind_ == Kind::finite; }
  constexpr bool is_neg_inf() const { return kind_ == Kind::neg_inf; }
  constexpr bool is_pos_inf() const { return kind_ == Kind::pos_inf; }

  constexpr double value() const {
    if (kind_ != Kind::finite) throw std::logic_error("ExtReal::value() on an infinite value");
    return value_;
  }
  /// IEEE image, only for output and for oracles that want plain doubles.
  constexpr double to_double() const {
    switch (kind_) {
      case Kind::neg_inf: return -std::numeric_limits<double>::infinity();
      case Kind::pos_inf: return std::numeric_limits<double>::infinity();
      default: return value_;
    }
  }

  friend constexpr bool operator==(ExtReal a, ExtReal b) {
    return a.kind_ == b.kind_ && (a.kind_ != Kind::finite || a.value_ == b.value_);
  }
  friend constexpr std::partial_ordering operator<=>(ExtReal a, ExtReal b) {
    if (a.kind_ != b.kind_) return static_cast<int>(a.kind_) <=> static_cast<int>(b.kind_);
    if (a.kind_ != Kind::finite) return std::partial_ordering::equivalent;
    return a.value_ <=> b.value_;
  }

  friend constexpr ExtReal operator-(ExtReal a) {
    switch (a.kind_) {
      case Kind::neg_inf: return pos_inf();
      case Kind::pos_inf: return neg_inf();
      default: return ExtReal(-a.value_);
    }
  }
  friend constexpr ExtReal operator+(ExtReal a, double b) { return a.finite() ? ExtReal(a.value_ + b) : a; }
  friend constexpr ExtReal operator-(ExtReal a, double b) { return a.finite() ? ExtReal(a.value_ - b) : a; }

 private:
  constexpr explicit ExtReal(Kind k) : kind_(k) {}

  Kind kind_ = Kind::finite;
  double value_ = 0.0;
};

constexpr ExtReal max(ExtReal a, ExtReal b) { return a < b ? b : a; }
constexpr ExtReal min(ExtReal a, ExtReal b) { return b < a ? b : a; }

std::string to_string(ExtReal x);
/// Parses "inf", "+inf", "-inf" or a decimal number.
ExtReal parse_ext_real(const std::string& text);

}  // namespace rbsde
