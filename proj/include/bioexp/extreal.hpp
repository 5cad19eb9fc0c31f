#pragma once

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace bioexp {

// Extended real: a finite double or an explicit +/- infinity marker.
// Infinities are produced by named branches (e.g. divergence off support),
// never by letting floating point arithmetic overflow.
class ExtReal {
 public:
  constexpr ExtReal() : v_(0.0), cls_(0) {}
  constexpr ExtReal(double v) : v_(v), cls_(0) {
    if (std::isinf(v)) cls_ = v > 0 ? 1 : -1;
  }

  static constexpr ExtReal pos_inf() { return ExtReal(0.0, 1); }
  static constexpr ExtReal neg_inf() { return ExtReal(0.0, -1); }

  constexpr bool finite() const { return cls_ == 0; }
  constexpr bool is_pos_inf() const { return cls_ > 0; }
  constexpr bool is_neg_inf() const { return cls_ < 0; }

  // Finite value; throws when called on an infinity.
  double value() const {
    if (!finite()) throw std::domain_error("ExtReal: infinite value");
    return v_;
  }
  // IEEE double, mapping the markers onto +/-HUGE_VAL.
  constexpr double as_double() const {
    if (cls_ > 0) return std::numeric_limits<double>::infinity();
    if (cls_ < 0) return -std::numeric_limits<double>::infinity();
    return v_;
  }

  friend constexpr bool operator==(ExtReal a, ExtReal b) {
    return a.cls_ == b.cls_ && (a.cls_ != 0 || a.v_ == b.v_);
  }
  friend constexpr bool operator<(ExtReal a, ExtReal b) {
    if (a.cls_ != b.cls_) return a.cls_ < b.cls_;
    return a.cls_ == 0 && a.v_ < b.v_;
  }
  friend constexpr bool operator!=(ExtReal a, ExtReal b) { return !(a == b); }
  friend constexpr bool operator>(ExtReal a, ExtReal b) { return b < a; }
  friend constexpr bool operator<=(ExtReal a, ExtReal b) { return !(b < a); }
  friend constexpr bool operator>=(ExtReal a, ExtReal b) { return !(a < b); }

  friend ExtReal operator+(ExtReal a, ExtReal b) {
    if (a.cls_ == 0 && b.cls_ == 0) return ExtReal(a.v_ + b.v_);
    if (a.cls_ != 0 && b.cls_ != 0 && a.cls_ != b.cls_)
      throw std::domain_error("ExtReal: inf + -inf");
    return a.cls_ != 0 ? a : b;
  }
  friend ExtReal operator-(ExtReal a) {
    if (a.cls_ > 0) return neg_inf();
    if (a.cls_ < 0) return pos_inf();
    return ExtReal(-a.v_);
  }
  friend ExtReal operator-(ExtReal a, ExtReal b) { return a + (-b); }

  friend std::ostream& operator<<(std::ostream& os, ExtReal a) {
    if (a.cls_ > 0) return os << "+inf";
    if (a.cls_ < 0) return os << "-inf";
    return os << a.v_;
  }

 private:
  constexpr ExtReal(double v, int cls) : v_(v), cls_(cls) {}
  double v_;
  int cls_;
};

inline ExtReal min(ExtReal a, ExtReal b) { return a < b ? a : b; }
inline ExtReal max(ExtReal a, ExtReal b) { return a < b ? b : a; }

}  // namespace bioexp
