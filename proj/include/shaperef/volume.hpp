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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace shaperef {

/// Voxel counts along x, y, z.
struct Extent3 {
    std::size_t x = 0;
    std::size_t y = 0;
    std::size_t z = 0;

    [[nodiscard]] std::size_t count() const { return x * y * z; }
    friend bool operator==(const Extent3&, const Extent3&) = default;
};

/// Millimeters per voxel. Stored as 32-bit floats to match the on-disk layout.
struct Spacing3 {
    float x = 1.0F;
    float y = 1.0F;
    float z = 1.0F;

    friend bool operator==(const Spacing3&, const Spacing3&) = default;
};

enum class Axis { X, Y, Z };

Axis parse_axis(std::string_view name);
std::string_view axis_name(Axis axis);

/// Binary 3D mask. Linear index is x + dx * (y + dy * z).
class MaskVolume {
public:
    MaskVolume() = default;
    /// All-background volume.
    MaskVolume(Extent3 dims, Spacing3 spacing);
    /// Takes ownership of voxels; throws if the invariants do not hold.
    MaskVolume(Extent3 dims, Spacing3 spacing, std::vector<std::uint8_t> voxels);

    [[nodiscard]] const Extent3& dims() const { return dims_; }
    [[nodiscard]] const Spacing3& spacing() const { return spacing_; }
    [[nodiscard]] std::span<const std::uint8_t> voxels() const { return voxels_; }
    [[nodiscard]] std::size_t size() const { return voxels_.size(); }
    [[nodiscard]] bool empty() const { return voxels_.empty(); }

    [[nodiscard]] std::size_t index(std::size_t x, std::size_t y, std::size_t z) const {
        return x + dims_.x * (y + dims_.y * z);
    }
    [[nodiscard]] std::uint8_t at(std::size_t x, std::size_t y, std::size_t z) const {
        return voxels_[index(x, y, z)];
    }
    void set(std::size_t x, std::size_t y, std::size_t z, bool on) {
        voxels_[index(x, y, z)] = on ? 1 : 0;
    }
    [[nodiscard]] std::uint8_t operator[](std::size_t i) const { return voxels_[i]; }
    void set(std::size_t i, bool on) { voxels_[i] = on ? 1 : 0; }

    [[nodiscard]] std::size_t foreground_count() const;

    friend bool operator==(const MaskVolume&, const MaskVolume&) = default;

private:
    Extent3 dims_{};
    Spacing3 spacing_{};
    std::vector<std::uint8_t> voxels_;
};

/// Binary 2D mask, row-major: pixel (i, j) lives at i + w * j.
class MaskSlice {
public:
    MaskSlice() = default;
    MaskSlice(std::size_t width, std::size_t height);
    MaskSlice(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels);

    [[nodiscard]] std::size_t width() const { return width_; }
    [[nodiscard]] std::size_t height() const { return height_; }
    [[nodiscard]] std::span<const std::uint8_t> pixels() const { return pixels_; }

    [[nodiscard]] std::uint8_t at(std::size_t i, std::size_t j) const { return pixels_[i + width_ * j]; }
    void set(std::size_t i, std::size_t j, bool on) { pixels_[i + width_ * j] = on ? 1 : 0; }
    /// Out-of-range coordinates read as background.
    [[nodiscard]] bool foreground(std::ptrdiff_t i, std::ptrdiff_t j) const;

    [[nodiscard]] std::size_t foreground_count() const;

    friend bool operator==(const MaskSlice&, const MaskSlice&) = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

// MVOL layout (little-endian): "MVOL" | u32 version=1 | u32 dx,dy,dz | f32 sx,sy,sz |
// u8 dtype=0 | u8 reserved=0 | dx*dy*dz payload bytes in {0,1}, x fastest.
inline constexpr std::size_t kMvolHeaderBytes = 4 + 4 + 12 + 12 + 1 + 1;

std::vector<std::uint8_t> encode_volume(const MaskVolume& volume);
MaskVolume decode_volume(std::span<const std::uint8_t> bytes);

MaskVolume read_volume(const std::filesystem::path& path);
void write_volume(const MaskVolume& volume, const std::filesystem::path& path);

/// Plane at floor(extent / 2) along `axis`. The slice's (width, height) are the two
/// remaining axes in x, y, z order.
MaskSlice extract_slice(const MaskVolume& volume, Axis axis, std::size_t index);
MaskSlice extract_middle_slice(const MaskVolume& volume, Axis axis = Axis::Z);

}  // namespace shaperef
