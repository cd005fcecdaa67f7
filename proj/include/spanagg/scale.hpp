#ifndef SPANAGG_SCALE_HPP
#define SPANAGG_SCALE_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spanagg/error.hpp"
#include "spanagg/numeric.hpp"

namespace spanagg {

/// An estimation scale, identified by its number of grades.
struct Scale {
  int grades = 9;

  friend bool operator==(const Scale&, const Scale&) = default;
};

/// The most detailed scale of a session; every judgment is mapped into it.
struct UnifiedScale {
  int grades = 9;
};

/// Averaging rule for scale weights and priority aggregation.
enum class Mean { geometric, arithmetic };

/// How a PCM's information weight treats cells the expert left blank.
enum class MissingCellPolicy {
  exclude,  // average over provided cells only
  strict,   // a blank cell is a factor of 0
};

class ScaleRegistry {
 public:
  ScaleRegistry() : grades_{2, 3, 5, 7, 9} {}

  explicit ScaleRegistry(std::vector<int> grades) {
    for (int g : grades) add(Scale{g});
    if (grades_.empty()) {
      throw Error(ErrorKind::invalid_judgment, "scale registry is empty");
    }
  }

  void add(Scale scale) {
    if (scale.grades < 2) {
      throw Error(ErrorKind::invalid_judgment,
                  "a scale needs at least 2 grades, got " + std::to_string(scale.grades));
    }
    if (!contains(scale)) {
      grades_.push_back(scale.grades);
      std::sort(grades_.begin(), grades_.end());
    }
  }

  bool contains(Scale scale) const {
    return std::find(grades_.begin(), grades_.end(), scale.grades) != grades_.end();
  }

  const std::vector<int>& grades() const noexcept { return grades_; }

  UnifiedScale unified() const { return UnifiedScale{grades_.back()}; }

 private:
  std::vector<int> grades_;
};

/// Hartley information carried by one comparison: log2 N, or 0 when the
/// comparison is missing.
inline double hartley_weight(std::optional<Scale> scale) noexcept {
  if (!scale) return 0.0;
  return std::log2(static_cast<double>(scale->grades));
}

/// Maps a grade index of `from` onto the unified scale by linear index
/// interpolation, rounding to the nearest unified grade.
inline int to_unified(int grade, Scale from, UnifiedScale unified) {
  if (from.grades < 2 || from.grades > unified.grades) {
    throw Error(ErrorKind::invalid_judgment,
                "scale with " + std::to_string(from.grades) +
                    " grades cannot be mapped into a unified scale of " +
                    std::to_string(unified.grades));
  }
  if (grade < 1 || grade > from.grades) {
    throw Error(ErrorKind::invalid_judgment,
                "grade " + std::to_string(grade) + " outside 1.." + std::to_string(from.grades));
  }
  const double span = static_cast<double>(unified.grades - 1) / (from.grades - 1);
  return static_cast<int>(std::lround((grade - 1) * span)) + 1;
}

/// Ratio value denoted by a (possibly fractional) grade. Fractional grades
/// are only meaningful on the unified scale itself, where grade g is ratio g.
inline double unified_ratio(double grade, Scale from, UnifiedScale unified) {
  if (!(grade >= 1.0) || grade > static_cast<double>(from.grades)) {
    throw Error(ErrorKind::invalid_judgment,
                "grade " + std::to_string(grade) + " outside 1.." + std::to_string(from.grades));
  }
  if (from.grades == unified.grades) return grade;
  if (grade != std::floor(grade)) {
    throw Error(ErrorKind::invalid_judgment,
                "fractional grade " + std::to_string(grade) + " is only allowed on the " +
                    std::to_string(unified.grades) + "-grade unified scale");
  }
  return to_unified(static_cast<int>(grade), from, unified);
}

namespace detail {

inline double mean_of(std::span<const double> xs, Mean mean) {
  if (xs.empty()) return 0.0;
  CompensatedSum acc;
  if (mean == Mean::arithmetic) {
    for (double x : xs) acc.add(x);
    return acc.value() / static_cast<double>(xs.size());
  }
  for (double x : xs) {
    if (x <= 0.0) return 0.0;
    acc.add(std::log(x));
  }
  return std::exp(acc.value() / static_cast<double>(xs.size()));
}

}  // namespace detail

/// Information weight of a spanning tree: the mean of its edges' Hartley
/// weights. A missing edge makes the tree unusable (weight 0).
inline double tree_scale_weight(std::span<const std::optional<Scale>> edges,
                                Mean mean = Mean::geometric) {
  std::vector<double> w;
  w.reserve(edges.size());
  for (const auto& e : edges) {
    if (!e) return 0.0;
    w.push_back(hartley_weight(e));
  }
  return detail::mean_of(w, mean);
}

inline double tree_scale_weight(std::span<const Scale> edges, Mean mean = Mean::geometric) {
  std::vector<std::optional<Scale>> opt(edges.begin(), edges.end());
  return tree_scale_weight(std::span<const std::optional<Scale>>(opt), mean);
}

/// Information weight of a whole PCM from the scales of its upper-triangle
/// cells (nullopt = blank cell).
inline double pcm_scale_weight(std::span<const std::optional<Scale>> upper_cells,
                               MissingCellPolicy policy = MissingCellPolicy::exclude,
                               Mean mean = Mean::geometric) {
  std::vector<double> w;
  w.reserve(upper_cells.size());
  for (const auto& c : upper_cells) {
    if (!c) {
      if (policy == MissingCellPolicy::strict) {
        if (mean == Mean::geometric) return 0.0;
        w.push_back(0.0);
      }
      continue;
    }
    w.push_back(hartley_weight(c));
  }
  return detail::mean_of(w, mean);
}

}  // namespace spanagg

#endif  // SPANAGG_SCALE_HPP
