#ifndef SPANAGG_NUMERIC_HPP
#define SPANAGG_NUMERIC_HPP

#include <cmath>
#include <cstddef>
#include <span>

namespace spanagg {

/// Neumaier-compensated accumulator. Reductions over trees use it so the
/// result does not depend on summation order beyond ~1 ulp.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }

  double value() const noexcept { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) noexcept {
  CompensatedSum acc;
  for (double x : xs) acc.add(x);
  return acc.value();
}

/// Shannon entropy (natural log) of the distribution obtained by normalizing
/// non-negative weights. Zero weights contribute nothing.
inline double shannon_entropy(std::span<const double> weights) noexcept {
  double total = 0.0;
  for (double w : weights) total += w;
  if (total <= 0.0) return 0.0;
  CompensatedSum h;
  for (double w : weights) {
    if (w > 0.0) {
      const double p = w / total;
      h.add(-p * std::log(p));
    }
  }
  return h.value();
}

}  // namespace spanagg

#endif  // SPANAGG_NUMERIC_HPP
