/*
 * geometry.hh
 *
 *  uniform grids over unions of axis-aligned boxes: quantization, ball
 *  enumeration, full enumeration. grid points are integer multiples of eta
 *  (origin-anchored), all distances in the infinity norm.
 */

#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "impsym/common.hh"

namespace impsym {

/* closed axis-aligned box with positive side lengths */
struct Box {
  vec lower;
  vec upper;

  Box() = default;
  Box(vec lo, vec up) : lower(std::move(lo)), upper(std::move(up)) {
    if (lower.size() != upper.size() || lower.empty())
      throw OutOfDomain("box: dimension mismatch or empty");
    for (std::size_t i = 0; i < lower.size(); ++i)
      if (!(lower[i] < upper[i]))
        throw OutOfDomain("box: lower must be strictly below upper per coordinate");
  }

  std::size_t dim() const { return lower.size(); }

  double min_side() const {
    double m = upper[0] - lower[0];
    for (std::size_t i = 1; i < lower.size(); ++i)
      m = std::min(m, upper[i] - lower[i]);
    return m;
  }

  /* membership with guard slack, measured in coordinate units */
  bool contains(const vec& x, double slack) const {
    for (std::size_t i = 0; i < lower.size(); ++i)
      if (x[i] < lower[i] - slack || x[i] > upper[i] + slack) return false;
    return true;
  }
};

/* grid point: integer multiples of the grid width per coordinate */
struct GridIndex {
  std::vector<std::int64_t> coords;

  friend bool operator==(const GridIndex& a, const GridIndex& b) {
    return a.coords == b.coords;
  }
  friend bool operator<(const GridIndex& a, const GridIndex& b) {
    return a.coords < b.coords;
  }
};

/* union of boxes discretized with width eta; eta may not exceed the smallest
 * box side, which guarantees every box holds at least one grid point */
class GridDomain {
 public:
  GridDomain(std::vector<Box> boxes, double eta)
      : boxes_(std::move(boxes)), eta_(eta) {
    if (boxes_.empty()) throw OutOfDomain("grid domain: no boxes");
    if (!(eta_ > 0)) throw OutOfDomain("grid domain: eta must be positive");
    dim_ = boxes_[0].dim();
    double min_side = boxes_[0].min_side();
    for (const Box& b : boxes_) {
      if (b.dim() != dim_) throw OutOfDomain("grid domain: mixed dimensions");
      min_side = std::min(min_side, b.min_side());
    }
    if (eta_ > min_side * (1 + grid_slack))
      throw OutOfDomain("grid domain: eta exceeds the smallest box side");
  }

  std::size_t dim() const { return dim_; }
  double eta() const { return eta_; }
  const std::vector<Box>& boxes() const { return boxes_; }

  /* boundary membership uses a slack of grid_slack*eta so points produced by
   * rounding do not flap across box faces */
  bool contains(const vec& x) const {
    for (const Box& b : boxes_)
      if (b.contains(x, grid_slack * eta_)) return true;
    return false;
  }

  /* membership of x in the domain inflated by margin per coordinate */
  bool contains_inflated(const vec& x, double margin) const {
    for (const Box& b : boxes_)
      if (b.contains(x, margin + grid_slack * eta_)) return true;
    return false;
  }

  vec decode(const GridIndex& q) const {
    vec x(dim_);
    for (std::size_t i = 0; i < dim_; ++i)
      x[i] = static_cast<double>(q.coords[i]) * eta_;
    return x;
  }

  bool contains(const GridIndex& q) const { return contains(decode(q)); }

  /* nearest grid point; half-ties round toward +infinity. the argument must
   * lie in the domain up to eta/2 per coordinate and the rounded point must
   * land inside the domain, otherwise OutOfDomain */
  GridIndex quantize(const vec& x) const {
    if (x.size() != dim_) throw OutOfDomain("quantize: dimension mismatch");
    if (!contains_inflated(x, eta_ / 2))
      throw OutOfDomain("quantize: point outside the domain");
    GridIndex q;
    q.coords.resize(dim_);
    for (std::size_t i = 0; i < dim_; ++i)
      q.coords[i] = static_cast<std::int64_t>(
          std::floor(x[i] / eta_ + 0.5 + grid_slack));
    if (!contains(q))
      throw OutOfDomain("quantize: nearest grid point leaves the domain");
    return q;
  }

  /* all grid points q with |decode(q) - center|_inf <= radius that lie in the
   * domain; computed by per-dimension integer ranges, so no scan of the grid */
  std::vector<GridIndex> ball_points(const vec& center, double radius) const {
    std::vector<GridIndex> out;
    for (const GridIndex& q : grid_ball(center, radius))
      if (contains(q)) out.push_back(q);
    /* duplicates cannot arise from a single integer range product */
    return out;
  }

  /* same integer ranges without the domain filter: the ball on the full grid */
  std::vector<GridIndex> grid_ball(const vec& center, double radius) const {
    if (center.size() != dim_) throw OutOfDomain("ball: dimension mismatch");
    std::vector<std::int64_t> lo(dim_), hi(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
      lo[i] = static_cast<std::int64_t>(
          std::ceil((center[i] - radius) / eta_ - grid_slack));
      hi[i] = static_cast<std::int64_t>(
          std::floor((center[i] + radius) / eta_ + grid_slack));
    }
    std::vector<GridIndex> out;
    product(lo, hi, out, /*cap=*/point_cap);
    return out;
  }

  /* every grid point of the domain, lexicographically ordered, duplicates from
   * overlapping boxes removed; refuses to materialize more than point_cap */
  std::vector<GridIndex> enumerate() const {
    std::vector<GridIndex> out;
    for (const Box& b : boxes_) {
      std::vector<std::int64_t> lo(dim_), hi(dim_);
      for (std::size_t i = 0; i < dim_; ++i) {
        lo[i] = static_cast<std::int64_t>(
            std::ceil(b.lower[i] / eta_ - grid_slack));
        hi[i] = static_cast<std::int64_t>(
            std::floor(b.upper[i] / eta_ + grid_slack));
      }
      product(lo, hi, out, point_cap);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  static constexpr std::size_t point_cap = 100000000;  /* 1e8 points */

 private:
  /* append the lexicographic product of [lo,hi] ranges */
  void product(const std::vector<std::int64_t>& lo,
               const std::vector<std::int64_t>& hi,
               std::vector<GridIndex>& out, std::size_t cap) const {
    std::size_t count = 1;
    for (std::size_t i = 0; i < dim_; ++i) {
      if (hi[i] < lo[i]) return;  /* empty range in one dimension */
      std::size_t span = static_cast<std::size_t>(hi[i] - lo[i] + 1);
      if (count > cap / span)
        throw DomainTooLarge("grid enumeration exceeds the point cap");
      count *= span;
    }
    if (out.size() > cap - count)
      throw DomainTooLarge("grid enumeration exceeds the point cap");
    GridIndex q;
    q.coords = lo;
    for (;;) {
      out.push_back(q);
      std::size_t i = dim_;
      while (i > 0) {
        --i;
        if (q.coords[i] < hi[i]) {
          ++q.coords[i];
          for (std::size_t j = i + 1; j < dim_; ++j) q.coords[j] = lo[j];
          break;
        }
        if (i == 0) return;
      }
    }
  }

  std::vector<Box> boxes_;
  double eta_;
  std::size_t dim_;
};

}  // namespace impsym
