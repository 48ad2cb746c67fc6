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

#include <stdexcept>
#include <string>

namespace shaperef {

/// Root of every error thrown by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed file layout: bad magic, version, schema or manifest.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Payload shorter or longer than the header promises.
class TruncationError : public FormatError {
public:
    using FormatError::FormatError;
};

/// A stored value lies outside its domain (e.g. voxel byte not in {0,1}).
class ValueError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Tensor or volume extents do not agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Foreground is empty where a shape is required.
class EmptyShapeError : public Error {
public:
    using Error::Error;
};

/// A shape exists but is too small or too thin to describe.
class DegenerateShapeError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class BuildError : public Error {
public:
    using Error::Error;
};

class QueryError : public Error {
public:
    using Error::Error;
};

/// A metric is undefined for the given inputs (e.g. ASD with an empty mask).
class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

/// Numerical evaluation produced a non-finite value.
class EvaluationError : public Error {
public:
    using Error::Error;
};

}  // namespace shaperef
