#pragma once

#include <cmath>

namespace mpeig {

namespace power_law {

// One policy per exponent with a closed form; Generic falls back to pow.
struct Two {
  double abs_pow(double t) const { return t * t; }
  double odd_pow(double t) const { return t; }
  void both(double t, double& abs_p, double& odd_p) const {
    abs_p = t * t;
    odd_p = t;
  }
  double weight_pow(double) const { return 1.0; }
};

struct ThreeHalves {
  double abs_pow(double t) const {
    const double a = std::fabs(t);
    return a * std::sqrt(a);
  }
  double odd_pow(double t) const { return std::copysign(std::sqrt(std::fabs(t)), t); }
  void both(double t, double& abs_p, double& odd_p) const {
    const double a = std::fabs(t);
    const double r = std::sqrt(a);
    abs_p = a * r;
    odd_p = std::copysign(r, t);
  }
  double weight_pow(double t) const {
    const double a = std::fabs(t);
    return a == 0.0 ? 0.0 : 1.0 / std::sqrt(a);
  }
};

struct Three {
  double abs_pow(double t) const {
    const double a = std::fabs(t);
    return a * a * a;
  }
  double odd_pow(double t) const { return std::fabs(t) * t; }
  void both(double t, double& abs_p, double& odd_p) const {
    const double a = std::fabs(t);
    abs_p = a * a * a;
    odd_p = a * t;
  }
  double weight_pow(double t) const { return std::fabs(t); }
};

struct Four {
  double abs_pow(double t) const {
    const double a = t * t;
    return a * a;
  }
  double odd_pow(double t) const { return t * t * t; }
  void both(double t, double& abs_p, double& odd_p) const {
    const double a = t * t;
    abs_p = a * a;
    odd_p = a * t;
  }
  double weight_pow(double t) const { return t * t; }
};

struct Generic {
  double p;
  double abs_pow(double t) const {
    const double a = std::fabs(t);
    return a == 0.0 ? 0.0 : std::pow(a, p);
  }
  double odd_pow(double t) const {
    if (t == 0.0) return 0.0;
    return std::copysign(std::pow(std::fabs(t), p - 1.0), t);
  }
  void both(double t, double& abs_p, double& odd_p) const {
    const double a = std::fabs(t);
    if (a == 0.0) {
      abs_p = 0.0;
      odd_p = 0.0;
      return;
    }
    const double q = std::pow(a, p - 1.0);
    abs_p = q * a;
    odd_p = std::copysign(q, t);
  }
  double weight_pow(double t) const {
    const double a = std::fabs(t);
    return a == 0.0 ? 0.0 : std::pow(a, p - 2.0);
  }
};

}  // namespace power_law

/// Evaluates |t|^p and |t|^(p-2) t with fast paths for the exponents used
/// most often (1.5, 2, 3, 4). The odd power at t = 0 is defined as 0 for
/// every p > 1, which is its limit; |t|^(p-2) at t = 0 is 1 for p = 2 and 0
/// otherwise (only meaningful for callers that multiply by a vanishing
/// factor).
class PowerLaw {
 public:
  explicit PowerLaw(double p) : p_(p) {
    if (p == 2.0) {
      kind_ = Kind::kTwo;
    } else if (p == 1.5) {
      kind_ = Kind::kThreeHalves;
    } else if (p == 3.0) {
      kind_ = Kind::kThree;
    } else if (p == 4.0) {
      kind_ = Kind::kFour;
    } else {
      kind_ = Kind::kGeneric;
    }
  }

  double exponent() const { return p_; }

  /// Calls f with the policy object for this exponent, so that hot loops
  /// can be instantiated per exponent.
  template <class F>
  decltype(auto) visit(F&& f) const {
    switch (kind_) {
      case Kind::kTwo:
        return f(power_law::Two{});
      case Kind::kThreeHalves:
        return f(power_law::ThreeHalves{});
      case Kind::kThree:
        return f(power_law::Three{});
      case Kind::kFour:
        return f(power_law::Four{});
      case Kind::kGeneric:
        break;
    }
    return f(power_law::Generic{p_});
  }

  /// |t|^p
  double abs_pow(double t) const {
    return visit([t](const auto& law) { return law.abs_pow(t); });
  }

  /// |t|^(p-2) t
  double odd_pow(double t) const {
    return visit([t](const auto& law) { return law.odd_pow(t); });
  }

  /// Both |t|^p and |t|^(p-2) t from a single root/pow evaluation.
  void both(double t, double& abs_p, double& odd_p) const {
    visit([&](const auto& law) { law.both(t, abs_p, odd_p); });
  }

  /// |t|^(p-2)
  double weight_pow(double t) const {
    return visit([t](const auto& law) { return law.weight_pow(t); });
  }

 private:
  enum class Kind { kTwo, kThreeHalves, kThree, kFour, kGeneric };
  double p_;
  Kind kind_;
};

}  // namespace mpeig
