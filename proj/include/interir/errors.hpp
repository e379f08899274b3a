#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace interir {

// Shape/extent mismatch. `axis()` names the offending axis ("channel",
// "height", "inner", ...).
class DimensionError : public std::invalid_argument {
 public:
  DimensionError(std::string axis, const std::string& what)
      : std::invalid_argument(what + " [axis: " + axis + "]"),
        axis_(std::move(axis)) {}
  const std::string& axis() const noexcept { return axis_; }

 private:
  std::string axis_;
};

// A configuration value outside its documented range.
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed binary input; `offset()` is the byte position where parsing
// failed.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t offset, const std::string& what)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class UnsupportedFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(int iteration, const std::string& what)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) +
                           ")"),
        iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

// Violated call protocol, e.g. a backward pass fed a cache from another
// forward.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class MissingParameterError : public std::runtime_error {
 public:
  MissingParameterError(const std::string& what,
                        std::vector<std::string> expected)
      : std::runtime_error(what), expected_(std::move(expected)) {}
  const std::vector<std::string>& expected() const noexcept {
    return expected_;
  }

 private:
  std::vector<std::string> expected_;
};

}  // namespace interir
