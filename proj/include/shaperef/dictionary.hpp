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
#include <filesystem>
#include <string>
#include <vector>

#include "shaperef/fourier.hpp"
#include "shaperef/volume.hpp"

namespace shaperef {

struct DictionaryMeta {
    std::size_t resample_m = kDefaultResample;
    Axis axis = Axis::Z;
    std::string convention{kDescriptorConvention};

    friend bool operator==(const DictionaryMeta&, const DictionaryMeta&) = default;
};

struct DictionaryEntry {
    std::string id;
    std::string label_path;
    ShapeDescriptor descriptor;

    friend bool operator==(const DictionaryEntry&, const DictionaryEntry&) = default;
};

struct RetrievalResult {
    std::size_t index = 0;
    const DictionaryEntry* entry = nullptr;
    double distance = 0.0;
};

class ShapeDictionary {
public:
    ShapeDictionary() = default;
    ShapeDictionary(DictionaryMeta meta, std::vector<DictionaryEntry> entries);

    [[nodiscard]] const DictionaryMeta& meta() const { return meta_; }
    [[nodiscard]] const std::vector<DictionaryEntry>& entries() const { return entries_; }
    [[nodiscard]] std::size_t size() const { return entries_.size(); }

    /// Linear scan for the smallest L2 distance; ties go to the lowest index.
    [[nodiscard]] RetrievalResult retrieve_nearest(const ShapeDescriptor& query) const;

    friend bool operator==(const ShapeDictionary&, const ShapeDictionary&) = default;

private:
    DictionaryMeta meta_;
    std::vector<DictionaryEntry> entries_;
};

/// One entry per label in input order, described by its middle slice along `meta.axis`.
/// Ids are file stems, suffixed with ".N" on collision.
ShapeDictionary build_dictionary(const std::vector<std::filesystem::path>& labels, const DictionaryMeta& meta = {});

std::string dictionary_to_json(const ShapeDictionary& dictionary);
ShapeDictionary dictionary_from_json(const std::string& text);

void save_dictionary(const ShapeDictionary& dictionary, const std::filesystem::path& path);
ShapeDictionary load_dictionary(const std::filesystem::path& path);

/// Resolves an entry's label path: as given if it exists, else relative to `dictionary_dir`.
std::filesystem::path resolve_label_path(const DictionaryEntry& entry, const std::filesystem::path& dictionary_dir);

/// Shortest text with 17 significant digits, e.g. "0.10000000000000001".
std::string format_double17(double value);

}  // namespace shaperef
