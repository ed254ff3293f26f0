#pragma once

#include <span>
#include <vector>

namespace mjrobust {

/// Partition a = h_0 < h_1 < ... < h_N = b of an interval into cells
/// [h_{i-1}, h_i) (the last cell closed) with one sample point per cell.
class Grid {
 public:
  Grid(std::vector<double> points, std::vector<double> samples);

  int cells() const { return static_cast<int>(samples_.size()); }
  double a() const { return points_.front(); }
  double b() const { return points_.back(); }
  double lo(int i) const { return points_[i]; }
  double hi(int i) const { return points_[i + 1]; }
  double width(int i) const { return hi(i) - lo(i); }
  double sample(int i) const { return samples_[i]; }
  const std::vector<double>& points() const { return points_; }
  const std::vector<double>& samples() const { return samples_; }

  /// Index of the cell containing `ell`; throws InvalidInput outside [a, b].
  int cell_of(double ell) const;

 private:
  std::vector<double> points_;
  std::vector<double> samples_;
};

enum class SampleRule { kMidpoint, kLeft, kCustom };

/// N equal cells on [a, b]. kCustom takes one sample per cell from `custom`.
Grid uniform_grid(double a, double b, int n,
                  SampleRule rule = SampleRule::kMidpoint,
                  std::span<const double> custom = {});

}  // namespace mjrobust
