// Copyright 2026 The jacprop Authors
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

#ifndef JACPROP_ERRORS_H_
#define JACPROP_ERRORS_H_

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace jacprop {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Out-of-range scalar parameter (pole, rate, scale, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class NotSpdError : public Error {
 public:
  NotSpdError(const std::string& what, std::ptrdiff_t block, std::ptrdiff_t row)
      : Error(what), block_(block), row_(row) {}
  std::ptrdiff_t block() const { return block_; }
  std::ptrdiff_t row() const { return row_; }

 private:
  std::ptrdiff_t block_;
  std::ptrdiff_t row_;
};

// LTV normal equations singular; raise lambda or the ridge term.
class RankDeficiencyError : public Error {
 public:
  using Error::Error;
};

// Eigenvalue iteration exhausted its budget. Carries the eigenvalues that
// had already deflated.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what,
                   std::vector<std::complex<double>> partial)
      : Error(what), partial_(std::move(partial)) {}
  const std::vector<std::complex<double>>& partial() const { return partial_; }

 private:
  std::vector<std::complex<double>> partial_;
};

// A rollout or training run left the finite range. `index` is the step or
// epoch at which it happened.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::ptrdiff_t index)
      : Error(what), index_(index) {}
  std::ptrdiff_t index() const { return index_; }

 private:
  std::ptrdiff_t index_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace jacprop

#endif  // JACPROP_ERRORS_H_
