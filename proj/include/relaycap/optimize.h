#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridopt {

class NoFeasiblePoint : public std::runtime_error {
 public:
  explicit NoFeasiblePoint(const std::string& what)
      : std::runtime_error(what) {}
};

struct Dim {
  std::string name;
  double lo;
  double hi;
};

using Point = std::vector<double>;

struct SearchBox {
  std::vector<Dim> dims;
  // Cheap pre-filter; an empty function accepts every point. The objective
  // may still reject a point by returning nullopt.
  std::function<bool(const Point&)> feasible;
  // Grid counts per dimension. Empty: default_steps for every dim. A single
  // entry applies to all dims.
  std::vector<int> coarse_steps;
  int refine_rounds = 4;
  double refine_shrink = 0.25;
};

struct MaxResult {
  Point argmax;
  double value;
};

int default_steps(std::size_t n_dims);

// Scans the full coarse grid, then runs refine_rounds rounds that re-grid a
// box shrunk by refine_shrink around the incumbent, clipped to the original
// bounds. The surfaces this feeds on have min() kinks and hard feasibility
// edges, so no derivatives anywhere. Deterministic: ties go to the
// lexicographically smallest point. Throws NoFeasiblePoint if the coarse
// grid has no feasible point.
MaxResult maximize(const std::function<std::optional<double>(const Point&)>& f,
                   const SearchBox& box);

}  // namespace gridopt
