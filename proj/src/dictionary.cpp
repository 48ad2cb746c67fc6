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

#include "shaperef/dictionary.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "shaperef/errors.hpp"

namespace shaperef {

namespace {

constexpr int kDictionaryVersion = 1;

std::string quoted(const std::string& s) { return nlohmann::json(s).dump(); }

}  // namespace

std::string format_double17(double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
    if (ec != std::errc{}) {
        throw FormatError("cannot format floating value");
    }
    return std::string(buf, end);
}

ShapeDictionary::ShapeDictionary(DictionaryMeta meta, std::vector<DictionaryEntry> entries)
    : meta_(std::move(meta)), entries_(std::move(entries)) {
    std::set<std::string> ids;
    for (const auto& e : entries_) {
        if (!ids.insert(e.id).second) {
            throw FormatError("duplicate dictionary id '" + e.id + "'");
        }
    }
}

RetrievalResult ShapeDictionary::retrieve_nearest(const ShapeDescriptor& query) const {
    if (entries_.empty()) {
        throw QueryError("cannot query an empty shape dictionary");
    }
    RetrievalResult best{0, &entries_[0], descriptor_distance(entries_[0].descriptor, query)};
    for (std::size_t i = 1; i < entries_.size(); ++i) {
        const double d = descriptor_distance(entries_[i].descriptor, query);
        if (d < best.distance) best = {i, &entries_[i], d};
    }
    return best;
}

ShapeDictionary build_dictionary(const std::vector<std::filesystem::path>& labels, const DictionaryMeta& meta) {
    if (labels.empty()) {
        throw BuildError("no labels given to build the dictionary");
    }
    std::vector<DictionaryEntry> entries;
    std::set<std::string> used;
    const DescriptorOptions options{meta.resample_m};
    for (const auto& path : labels) {
        std::string id = path.stem().string();
        for (int n = 1; used.contains(id); ++n) id = path.stem().string() + "." + std::to_string(n);
        used.insert(id);
        try {
            const MaskVolume volume = read_volume(path);
            const MaskSlice slice = extract_middle_slice(volume, meta.axis);
            entries.push_back({id, path.string(), compute_descriptor(slice, options)});
        } catch (const Error& e) {
            throw BuildError("label '" + path.string() + "' failed: " + e.what());
        }
    }
    return ShapeDictionary(meta, std::move(entries));
}

std::string dictionary_to_json(const ShapeDictionary& dictionary) {
    const auto& meta = dictionary.meta();
    std::ostringstream out;
    out << "{\n  \"version\": " << kDictionaryVersion << ",\n";
    out << "  \"meta\": {\"resample_m\": " << meta.resample_m << ", \"axis\": " << quoted(std::string(axis_name(meta.axis)))
        << ", \"convention\": " << quoted(meta.convention) << "},\n";
    out << "  \"entries\": [";
    const auto& entries = dictionary.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        out << (i == 0 ? "\n" : ",\n");
        out << "    {\"id\": " << quoted(e.id) << ", \"label_path\": " << quoted(e.label_path) << ", \"descriptor\": [";
        for (std::size_t k = 0; k < kDescriptorSize; ++k) {
            out << (k == 0 ? "" : ", ") << format_double17(e.descriptor.values[k]);
        }
        out << "]}";
    }
    out << "\n  ]\n}\n";
    return out.str();
}

ShapeDictionary dictionary_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("dictionary is not valid JSON: ") + e.what());
    }
    try {
        if (!doc.is_object() || doc.at("version").get<int>() != kDictionaryVersion) {
            throw FormatError("unsupported dictionary version");
        }
        DictionaryMeta meta;
        const auto& m = doc.at("meta");
        meta.resample_m = m.at("resample_m").get<std::size_t>();
        meta.axis = parse_axis(m.at("axis").get<std::string>());
        meta.convention = m.at("convention").get<std::string>();
        std::vector<DictionaryEntry> entries;
        for (const auto& item : doc.at("entries")) {
            DictionaryEntry e;
            e.id = item.at("id").get<std::string>();
            e.label_path = item.at("label_path").get<std::string>();
            const auto& values = item.at("descriptor");
            if (!values.is_array() || values.size() != kDescriptorSize) {
                throw FormatError("descriptor of '" + e.id + "' must have 10 values");
            }
            for (std::size_t k = 0; k < kDescriptorSize; ++k) e.descriptor.values[k] = values[k].get<double>();
            entries.push_back(std::move(e));
        }
        return ShapeDictionary(std::move(meta), std::move(entries));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed dictionary: ") + e.what());
    } catch (const ConfigError& e) {
        throw FormatError(std::string("malformed dictionary: ") + e.what());
    }
}

void save_dictionary(const ShapeDictionary& dictionary, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write dictionary " + path.string());
    }
    out << dictionary_to_json(dictionary);
    if (!out) {
        throw IoError("short write to " + path.string());
    }
}

ShapeDictionary load_dictionary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open dictionary " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return dictionary_from_json(buffer.str());
}

std::filesystem::path resolve_label_path(const DictionaryEntry& entry, const std::filesystem::path& dictionary_dir) {
    const std::filesystem::path p(entry.label_path);
    if (p.is_absolute() || std::filesystem::exists(p)) return p;
    return dictionary_dir / p;
}

}  // namespace shaperef
