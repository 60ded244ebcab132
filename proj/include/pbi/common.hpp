#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pbi {

using Vec = std::vector<double>;

class PbiError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid tunables, dimension mismatches, unusable presets.
class ConfigError : public PbiError {
public:
    using PbiError::PbiError;
};

// A log-density came back non-finite.  Densities are strictly positive by
// assumption, so this indicates a model bug or a bad input row, not a zero
// weight.
class ModelEvalError : public PbiError {
public:
    using PbiError::PbiError;
};

// All norms in this project are the maximum norm.
double max_norm(std::span<const double> x);
double max_norm_dist(std::span<const double> a, std::span<const double> b);

double log_sum_exp(std::span<const double> v);

// Max-shifted exponential normalization of log weights; writes normalized
// weights summing to 1 into out.
void softmax(std::span<const double> log_w, std::span<double> out);

std::string format_double(double v);  // 17 significant digits, '.' decimal

}  // namespace pbi
