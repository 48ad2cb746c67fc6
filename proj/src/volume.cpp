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

#include "shaperef/volume.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "shaperef/errors.hpp"

namespace shaperef {

namespace {

constexpr std::string_view kMagic = "MVOL";
constexpr std::uint32_t kMvolVersion = 1;
constexpr std::uint8_t kDtypeBinary = 0;

void validate_geometry(const Extent3& dims, const Spacing3& spacing) {
    if (dims.x == 0 || dims.y == 0 || dims.z == 0) {
        throw ShapeError("volume dims must be positive");
    }
    for (float s : {spacing.x, spacing.y, spacing.z}) {
        if (!(s > 0.0F) || !std::isfinite(s)) {
            throw ValueError("volume spacing must be strictly positive and finite");
        }
    }
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

void put_f32(std::vector<std::uint8_t>& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(bytes[offset + i]) << (8 * i);
    }
    return v;
}

float get_f32(std::span<const std::uint8_t> bytes, std::size_t offset) {
    return std::bit_cast<float>(get_u32(bytes, offset));
}

std::uint32_t checked_u32(std::size_t v) {
    if (v > 0xFFFFFFFFULL) {
        throw ShapeError("volume extent does not fit the MVOL header");
    }
    return static_cast<std::uint32_t>(v);
}

}  // namespace

Axis parse_axis(std::string_view name) {
    if (name == "x" || name == "X") return Axis::X;
    if (name == "y" || name == "Y") return Axis::Y;
    if (name == "z" || name == "Z") return Axis::Z;
    throw ConfigError("unknown axis '" + std::string(name) + "' (expected x, y or z)");
}

std::string_view axis_name(Axis axis) {
    switch (axis) {
        case Axis::X: return "x";
        case Axis::Y: return "y";
        case Axis::Z: return "z";
    }
    return "z";
}

MaskVolume::MaskVolume(Extent3 dims, Spacing3 spacing)
    : MaskVolume(dims, spacing, std::vector<std::uint8_t>(dims.count(), 0)) {}

MaskVolume::MaskVolume(Extent3 dims, Spacing3 spacing, std::vector<std::uint8_t> voxels)
    : dims_(dims), spacing_(spacing), voxels_(std::move(voxels)) {
    validate_geometry(dims_, spacing_);
    if (voxels_.size() != dims_.count()) {
        throw ShapeError("voxel count " + std::to_string(voxels_.size()) + " does not match dims product " +
                         std::to_string(dims_.count()));
    }
    if (std::any_of(voxels_.begin(), voxels_.end(), [](std::uint8_t v) { return v > 1; })) {
        throw ValueError("mask voxels must be 0 or 1");
    }
}

std::size_t MaskVolume::foreground_count() const {
    return static_cast<std::size_t>(std::count(voxels_.begin(), voxels_.end(), std::uint8_t{1}));
}

MaskSlice::MaskSlice(std::size_t width, std::size_t height)
    : MaskSlice(width, height, std::vector<std::uint8_t>(width * height, 0)) {}

MaskSlice::MaskSlice(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (pixels_.size() != width_ * height_) {
        throw ShapeError("slice pixel count does not match width * height");
    }
    if (std::any_of(pixels_.begin(), pixels_.end(), [](std::uint8_t v) { return v > 1; })) {
        throw ValueError("slice pixels must be 0 or 1");
    }
}

bool MaskSlice::foreground(std::ptrdiff_t i, std::ptrdiff_t j) const {
    if (i < 0 || j < 0 || i >= static_cast<std::ptrdiff_t>(width_) || j >= static_cast<std::ptrdiff_t>(height_)) {
        return false;
    }
    return pixels_[static_cast<std::size_t>(i) + width_ * static_cast<std::size_t>(j)] != 0;
}

std::size_t MaskSlice::foreground_count() const {
    return static_cast<std::size_t>(std::count(pixels_.begin(), pixels_.end(), std::uint8_t{1}));
}

std::vector<std::uint8_t> encode_volume(const MaskVolume& volume) {
    validate_geometry(volume.dims(), volume.spacing());
    std::vector<std::uint8_t> out;
    out.reserve(kMvolHeaderBytes + volume.size());
    for (char c : kMagic) out.push_back(static_cast<std::uint8_t>(c));
    put_u32(out, kMvolVersion);
    put_u32(out, checked_u32(volume.dims().x));
    put_u32(out, checked_u32(volume.dims().y));
    put_u32(out, checked_u32(volume.dims().z));
    put_f32(out, volume.spacing().x);
    put_f32(out, volume.spacing().y);
    put_f32(out, volume.spacing().z);
    out.push_back(kDtypeBinary);
    out.push_back(0);
    auto payload = volume.voxels();
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

MaskVolume decode_volume(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
        throw FormatError("not an MVOL file (bad magic)");
    }
    if (get_u32(bytes, 4) != kMvolVersion) {
        throw FormatError("unsupported MVOL version " + std::to_string(get_u32(bytes, 4)));
    }
    if (bytes.size() < kMvolHeaderBytes) {
        throw TruncationError("MVOL header truncated");
    }
    Extent3 dims{get_u32(bytes, 8), get_u32(bytes, 12), get_u32(bytes, 16)};
    Spacing3 spacing{get_f32(bytes, 20), get_f32(bytes, 24), get_f32(bytes, 28)};
    if (bytes[32] != kDtypeBinary) {
        throw FormatError("unsupported MVOL dtype " + std::to_string(bytes[32]));
    }
    if (bytes[33] != 0) {
        throw FormatError("MVOL reserved byte must be zero");
    }
    validate_geometry(dims, spacing);
    const std::size_t payload = bytes.size() - kMvolHeaderBytes;
    if (payload != dims.count()) {
        throw TruncationError("MVOL payload has " + std::to_string(payload) + " bytes, dims require " +
                              std::to_string(dims.count()));
    }
    std::vector<std::uint8_t> voxels(bytes.begin() + kMvolHeaderBytes, bytes.end());
    return MaskVolume(dims, spacing, std::move(voxels));
}

MaskVolume read_volume(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open volume " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_volume(bytes);
}

void write_volume(const MaskVolume& volume, const std::filesystem::path& path) {
    const auto bytes = encode_volume(volume);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write volume " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("short write to " + path.string());
    }
}

MaskSlice extract_slice(const MaskVolume& volume, Axis axis, std::size_t index) {
    const auto& d = volume.dims();
    switch (axis) {
        case Axis::Z: {
            if (index >= d.z) throw ShapeError("slice index out of range");
            MaskSlice s(d.x, d.y);
            for (std::size_t y = 0; y < d.y; ++y)
                for (std::size_t x = 0; x < d.x; ++x) s.set(x, y, volume.at(x, y, index) != 0);
            return s;
        }
        case Axis::Y: {
            if (index >= d.y) throw ShapeError("slice index out of range");
            MaskSlice s(d.x, d.z);
            for (std::size_t z = 0; z < d.z; ++z)
                for (std::size_t x = 0; x < d.x; ++x) s.set(x, z, volume.at(x, index, z) != 0);
            return s;
        }
        case Axis::X: {
            if (index >= d.x) throw ShapeError("slice index out of range");
            MaskSlice s(d.y, d.z);
            for (std::size_t z = 0; z < d.z; ++z)
                for (std::size_t y = 0; y < d.y; ++y) s.set(y, z, volume.at(index, y, z) != 0);
            return s;
        }
    }
    throw ConfigError("invalid axis");
}

MaskSlice extract_middle_slice(const MaskVolume& volume, Axis axis) {
    const auto& d = volume.dims();
    const std::size_t extent = axis == Axis::X ? d.x : (axis == Axis::Y ? d.y : d.z);
    return extract_slice(volume, axis, extent / 2);
}

}  // namespace shaperef
