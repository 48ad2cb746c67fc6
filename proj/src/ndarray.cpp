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

#include "shaperef/ndarray.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "shaperef/errors.hpp"

namespace shaperef {

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

NdArray::NdArray(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

NdArray::NdArray(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_size(shape_)) {
        throw ShapeError("array data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_string(shape_));
    }
}

NdArray NdArray::reshaped(Shape shape) const {
    if (shape_size(shape) != data_.size()) {
        throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    }
    return NdArray(std::move(shape), data_);
}

void NdArray::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

}  // namespace shaperef
