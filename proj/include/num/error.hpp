#ifndef NUM_ERROR_HPP
#define NUM_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace num {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value outside the domain of a utility (e.g. a nonpositive rate for log).
class DomainError : public Error {
 public:
  DomainError(const std::string& what, std::size_t index)
      : Error(what + " (index " + std::to_string(index) + ")"), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// A price vector outside the domain of the conjugate utilities.
class InfeasibleDualError : public Error {
 public:
  InfeasibleDualError(const std::string& what, std::size_t flow)
      : Error(what + " (flow " + std::to_string(flow) + ")"), flow_(flow) {}
  std::size_t flow() const noexcept { return flow_; }

 private:
  std::size_t flow_;
};

/// The per-flow best response does not exist (zero route price for log).
class UnboundedSubproblemError : public Error {
 public:
  UnboundedSubproblemError(const std::string& what, std::size_t flow)
      : Error(what + " (flow " + std::to_string(flow) + ")"), flow_(flow) {}
  std::size_t flow() const noexcept { return flow_; }

 private:
  std::size_t flow_;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Interior-point state with a nonpositive component.
class StateError : public Error {
 public:
  using Error::Error;
};

class FactorizationError : public Error {
 public:
  FactorizationError(const std::string& what, std::ptrdiff_t pivot)
      : Error(what + " (pivot " + std::to_string(pivot) + ")"), pivot_(pivot) {}
  std::ptrdiff_t pivot() const noexcept { return pivot_; }

 private:
  std::ptrdiff_t pivot_;
};

/// Conjugate-gradient recurrence divided by a (near) zero curvature.
class BreakdownError : public Error {
 public:
  BreakdownError(const std::string& what, std::size_t iteration)
      : Error(what + " (iteration " + std::to_string(iteration) + ")"), iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

/// Belief-propagation message with zero precision.
class DegeneracyError : public Error {
 public:
  DegeneracyError(const std::string& what, std::size_t from, std::size_t to)
      : Error(what + " (edge " + std::to_string(from) + "->" + std::to_string(to) + ")"),
        from_(from),
        to_(to) {}
  std::size_t from() const noexcept { return from_; }
  std::size_t to() const noexcept { return to_; }

 private:
  std::size_t from_;
  std::size_t to_;
};

class LineSearchError : public Error {
 public:
  using Error::Error;
};

}  // namespace num

#endif  // NUM_ERROR_HPP
