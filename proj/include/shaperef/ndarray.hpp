/*
 * Copyright (c) 2026, The shaperef Authors.  All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace shaperef {

using Shape = std::vector<std::size_t>;

/// Product of extents; 1 for the rank-0 shape.
std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of 64-bit floats.
class NdArray {
public:
    NdArray() = default;
    explicit NdArray(Shape shape, double fill = 0.0);
    NdArray(Shape shape, std::vector<double> data);

    static NdArray scalar(double value) { return NdArray(Shape{}, std::vector<double>{value}); }

    [[nodiscard]] const Shape& shape() const { return shape_; }
    [[nodiscard]] std::size_t rank() const { return shape_.size(); }
    [[nodiscard]] std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
    [[nodiscard]] std::size_t size() const { return data_.size(); }

    [[nodiscard]] std::span<double> data() { return data_; }
    [[nodiscard]] std::span<const double> data() const { return data_; }
    [[nodiscard]] std::vector<double>& storage() { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    /// Same data under a new shape of equal size.
    [[nodiscard]] NdArray reshaped(Shape shape) const;
    void fill(double value);

    friend bool operator==(const NdArray&, const NdArray&) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

}  // namespace shaperef
