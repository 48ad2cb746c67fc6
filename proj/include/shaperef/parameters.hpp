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
#include <map>
#include <string>
#include <vector>

#include "shaperef/autodiff.hpp"

namespace shaperef {

/// Trainable tensor: value and gradient live in the leaf node of `var`.
struct Parameter {
    std::string name;
    ad::Var var;

    [[nodiscard]] const NdArray& value() const { return var.value(); }
    [[nodiscard]] NdArray& mutable_value() { return var.mutable_value(); }
    [[nodiscard]] const NdArray& grad() const { return var.grad(); }
};

/// Ordered, uniquely named parameters. Order is the manifest order used for serialization.
class ParameterSet {
public:
    /// Throws ConfigError on a duplicate name.
    ad::Var add(const std::string& name, NdArray value);

    [[nodiscard]] const ad::Var& get(const std::string& name) const;
    [[nodiscard]] std::vector<Parameter>& items() { return items_; }
    [[nodiscard]] const std::vector<Parameter>& items() const { return items_; }
    [[nodiscard]] std::size_t size() const { return items_.size(); }
    /// Total number of scalar values.
    [[nodiscard]] std::size_t scalar_count() const;

    void zero_grad();

private:
    std::vector<Parameter> items_;
    std::map<std::string, std::size_t> index_;
};

}  // namespace shaperef
