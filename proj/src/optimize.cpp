#include "relaycap/optimize.h"

#include <algorithm>
#include <cmath>

namespace gridopt {

int default_steps(std::size_t n_dims) { return n_dims <= 3 ? 21 : 9; }

namespace {

struct Incumbent {
  bool found = false;
  double value = 0.0;
  Point pt;
};

void offer(Incumbent& inc, const Point& pt, double value) {
  if (!inc.found || value > inc.value ||
      (value == inc.value && pt < inc.pt)) {
    inc.found = true;
    inc.value = value;
    inc.pt = pt;
  }
}

std::vector<double> axis_values(double lo, double hi, int steps) {
  if (hi <= lo) return {lo};
  std::vector<double> xs(static_cast<std::size_t>(steps));
  for (int j = 0; j < steps; ++j) {
    if (j == 0) {
      xs[static_cast<std::size_t>(j)] = lo;
    } else if (j == steps - 1) {
      xs[static_cast<std::size_t>(j)] = hi;
    } else {
      xs[static_cast<std::size_t>(j)] =
          lo + (hi - lo) * static_cast<double>(j) /
                   static_cast<double>(steps - 1);
    }
  }
  return xs;
}

void scan_grid(const std::function<std::optional<double>(const Point&)>& f,
               const SearchBox& box, const std::vector<double>& lo,
               const std::vector<double>& hi, const std::vector<int>& steps,
               Incumbent& inc) {
  const std::size_t d = box.dims.size();
  std::vector<std::vector<double>> axes(d);
  for (std::size_t i = 0; i < d; ++i) {
    axes[i] = axis_values(lo[i], hi[i], steps[i]);
  }
  std::vector<std::size_t> ix(d, 0);
  Point pt(d);
  while (true) {
    for (std::size_t i = 0; i < d; ++i) pt[i] = axes[i][ix[i]];
    if (!box.feasible || box.feasible(pt)) {
      if (auto v = f(pt)) offer(inc, pt, *v);
    }
    std::size_t i = d;
    while (i > 0) {
      --i;
      if (++ix[i] < axes[i].size()) break;
      ix[i] = 0;
      if (i == 0) return;
    }
  }
}

}  // namespace

MaxResult maximize(const std::function<std::optional<double>(const Point&)>& f,
                   const SearchBox& box) {
  const std::size_t d = box.dims.size();
  if (d == 0) throw std::invalid_argument("search box has no dimensions");
  if (!(box.refine_shrink > 0.0 && box.refine_shrink < 1.0)) {
    throw std::invalid_argument("refine_shrink must be in (0,1)");
  }
  if (box.refine_rounds < 0) {
    throw std::invalid_argument("refine_rounds must be nonnegative");
  }

  std::vector<int> steps(d);
  if (box.coarse_steps.empty()) {
    std::fill(steps.begin(), steps.end(), default_steps(d));
  } else if (box.coarse_steps.size() == 1) {
    std::fill(steps.begin(), steps.end(), box.coarse_steps[0]);
  } else if (box.coarse_steps.size() == d) {
    steps = box.coarse_steps;
  } else {
    throw std::invalid_argument("coarse_steps size does not match dimensions");
  }

  std::vector<double> lo(d), hi(d);
  for (std::size_t i = 0; i < d; ++i) {
    const Dim& dim = box.dims[i];
    if (!(dim.lo <= dim.hi) || !std::isfinite(dim.lo) ||
        !std::isfinite(dim.hi)) {
      throw std::invalid_argument("bad bounds for dimension '" + dim.name +
                                  "'");
    }
    if (steps[i] < 2) {
      throw std::invalid_argument("coarse_steps must be at least 2");
    }
    lo[i] = dim.lo;
    hi[i] = dim.hi;
  }

  Incumbent inc;
  scan_grid(f, box, lo, hi, steps, inc);
  if (!inc.found) {
    throw NoFeasiblePoint("no feasible point on the coarse grid");
  }

  double shrink = 1.0;
  for (int round = 0; round < box.refine_rounds; ++round) {
    shrink *= box.refine_shrink;
    std::vector<double> rlo(d), rhi(d);
    for (std::size_t i = 0; i < d; ++i) {
      const double half = 0.5 * (box.dims[i].hi - box.dims[i].lo) * shrink;
      rlo[i] = std::max(box.dims[i].lo, inc.pt[i] - half);
      rhi[i] = std::min(box.dims[i].hi, inc.pt[i] + half);
    }
    scan_grid(f, box, rlo, rhi, steps, inc);
  }
  return {inc.pt, inc.value};
}

}  // namespace gridopt
