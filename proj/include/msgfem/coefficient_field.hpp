#ifndef MSGFEM_COEFFICIENT_FIELD_HPP
#define MSGFEM_COEFFICIENT_FIELD_HPP

#include <algorithm>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace msgfem {

/// Element-constant scalar coefficient, row-major over the cells of an
/// nx x ny grid. alpha/beta are always recomputed from the values.
class CoefficientField {
 public:
  CoefficientField(int nx, int ny, std::vector<double> values) : nx_(nx), ny_(ny), values_(std::move(values)) {
    if (nx_ <= 0 || ny_ <= 0 || static_cast<long>(values_.size()) != static_cast<long>(nx_) * ny_)
      throw std::invalid_argument("CoefficientField: value count does not match " + std::to_string(nx_) + "x" +
                                  std::to_string(ny_));
    const auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
    alpha_ = *lo;
    beta_ = *hi;
    for (double v : values_)
      if (!(v > 0.0)) throw std::invalid_argument("CoefficientField: non-positive value " + std::to_string(v));
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  const std::vector<double>& values() const { return values_; }
  double operator[](int e) const { return values_[e]; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double contrast() const { return beta_ / alpha_; }

 private:
  int nx_, ny_;
  std::vector<double> values_;
  double alpha_ = 0, beta_ = 0;
};

}  // namespace msgfem

#endif  // MSGFEM_COEFFICIENT_FIELD_HPP
