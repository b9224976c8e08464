// mwer/tensor.h
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MWER_TENSOR_H_
#define MWER_TENSOR_H_

#include <cassert>
#include <span>
#include <vector>

namespace mwer {

// Dense row-major matrix of doubles. Value semantics throughout; sizes at
// desk scale make copies cheap enough that views are not worth the aliasing
// bugs.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols),
        data_(static_cast<size_t>(rows) * cols, fill) {
    assert(rows >= 0 && cols >= 0);
  }

  double &operator()(int r, int c) {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return data_[static_cast<size_t>(r) * cols_ + c];
  }
  double operator()(int r, int c) const {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return data_[static_cast<size_t>(r) * cols_ + c];
  }

  std::span<double> Row(int r) {
    return {data_.data() + static_cast<size_t>(r) * cols_,
            static_cast<size_t>(cols_)};
  }
  std::span<const double> Row(int r) const {
    return {data_.data() + static_cast<size_t>(r) * cols_,
            static_cast<size_t>(cols_)};
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::vector<double> &data() { return data_; }
  const std::vector<double> &data() const { return data_; }

  bool SameShape(const Matrix &other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// Dense row-major rank-3 tensor of doubles; lattices are (T, U+1, K).
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(int d0, int d1, int d2, double fill = 0.0)
      : d0_(d0), d1_(d1), d2_(d2),
        data_(static_cast<size_t>(d0) * d1 * d2, fill) {
    assert(d0 >= 0 && d1 >= 0 && d2 >= 0);
  }

  double &operator()(int i, int j, int k) {
    assert(InRange(i, j, k));
    return data_[(static_cast<size_t>(i) * d1_ + j) * d2_ + k];
  }
  double operator()(int i, int j, int k) const {
    assert(InRange(i, j, k));
    return data_[(static_cast<size_t>(i) * d1_ + j) * d2_ + k];
  }

  // The innermost (vocabulary) slice at (i, j).
  std::span<double> Row(int i, int j) {
    assert(InRange(i, j, 0));
    return {data_.data() + (static_cast<size_t>(i) * d1_ + j) * d2_,
            static_cast<size_t>(d2_)};
  }
  std::span<const double> Row(int i, int j) const {
    assert(InRange(i, j, 0));
    return {data_.data() + (static_cast<size_t>(i) * d1_ + j) * d2_,
            static_cast<size_t>(d2_)};
  }

  int dim0() const { return d0_; }
  int dim1() const { return d1_; }
  int dim2() const { return d2_; }
  std::vector<double> &data() { return data_; }
  const std::vector<double> &data() const { return data_; }

  bool SameShape(const Tensor3 &other) const {
    return d0_ == other.d0_ && d1_ == other.d1_ && d2_ == other.d2_;
  }

 private:
  bool InRange(int i, int j, int k) const {
    return i >= 0 && i < d0_ && j >= 0 && j < d1_ && k >= 0 && k < d2_;
  }

  int d0_ = 0, d1_ = 0, d2_ = 0;
  std::vector<double> data_;
};

}  // namespace mwer

#endif  // MWER_TENSOR_H_
