// Copyright 2026 The zccl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace zccl {

// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller supplied an argument outside the operation's domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Input data rejected at ingestion (NaN/Inf, short file). `index` is the
// first offending element, or npos when the error is not element specific.
class IngestionError : public Error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  IngestionError(const std::string& what, std::size_t index = npos)
      : Error(what), index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

// A quantization index does not fit a signed 32-bit integer.
class OverflowError : public Error {
 public:
  using Error::Error;
};

// Malformed compressed bytes. `offset` is the byte position where decoding
// failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// A progress hook asked the running codec to stop.
class AbortedError : public Error {
 public:
  using Error::Error;
};

// Connection setup, peer failure, timeouts.
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace zccl
