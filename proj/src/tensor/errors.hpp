// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sgnn {

class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Operand shapes do not compose.
class ShapeError : public Error
{
public:
    using Error::Error;
};

// An argument is outside its documented domain.
class ParameterError : public Error
{
public:
    using Error::Error;
};

class NumericError : public Error
{
public:
    using Error::Error;
};

class IoError : public Error
{
public:
    using Error::Error;
};

// Malformed input. `line()` is the one-based line of the offending record,
// or npos when the failure is not tied to a line.
class ParseError : public Error
{
public:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    ParseError(const std::string& what, std::size_t line = npos)
      : Error { line == npos ? what
                             : "line " + std::to_string(line) + ": " + what },
        line_ { line }
    {}

    [[nodiscard]] auto line() const noexcept -> std::size_t
    {
        return line_;
    }

private:
    std::size_t line_;
};

} // namespace sgnn
