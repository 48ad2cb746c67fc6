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

#include "shaperef/parameters.hpp"

#include "shaperef/errors.hpp"

namespace shaperef {

ad::Var ParameterSet::add(const std::string& name, NdArray value) {
    if (index_.contains(name)) {
        throw ConfigError("duplicate parameter name '" + name + "'");
    }
    index_[name] = items_.size();
    items_.push_back({name, ad::leaf(std::move(value))});
    return items_.back().var;
}

const ad::Var& ParameterSet::get(const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) {
        throw ConfigError("unknown parameter '" + name + "'");
    }
    return items_[it->second].var;
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : items_) n += p.value().size();
    return n;
}

void ParameterSet::zero_grad() {
    for (auto& p : items_) p.var.zero_grad();
}

}  // namespace shaperef
