#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace trustbayes {

// Malformed arguments, configs or files.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Linear algebra breakdown. Carries every jitter level that was tried.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::vector<double> attempted_jitter = {})
      : std::runtime_error(what), attempted_jitter_(std::move(attempted_jitter)) {}

  const std::vector<double>& attempted_jitter() const noexcept { return attempted_jitter_; }

 private:
  std::vector<double> attempted_jitter_;
};

// The meta dataset is too small to certify the requested confidence level.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, double margin)
      : std::runtime_error(what), margin_(margin) {}

  double margin() const noexcept { return margin_; }

 private:
  double margin_;
};

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace trustbayes
