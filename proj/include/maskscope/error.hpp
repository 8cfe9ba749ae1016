#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace maskscope {

enum class Errc {
  degenerate_geometry,
  empty_roi,
  shape_mismatch,
  empty_input,
  zero_variance,
  length_mismatch,
  insufficient_data,
  numeric_convergence,
  out_of_range,
  merge_mismatch,
  parse,
  gap,
  monotonicity,
  reference,
  undefined_comparison,
  invalid_params,
  io,
};

constexpr std::string_view errc_name(Errc c) noexcept {
  switch (c) {
    case Errc::degenerate_geometry: return "degenerate-geometry";
    case Errc::empty_roi: return "empty-roi";
    case Errc::shape_mismatch: return "shape-mismatch";
    case Errc::empty_input: return "empty-input";
    case Errc::zero_variance: return "zero-variance";
    case Errc::length_mismatch: return "length-mismatch";
    case Errc::insufficient_data: return "insufficient-data";
    case Errc::numeric_convergence: return "numeric-convergence";
    case Errc::out_of_range: return "out-of-range";
    case Errc::merge_mismatch: return "merge-mismatch";
    case Errc::parse: return "parse";
    case Errc::gap: return "gap";
    case Errc::monotonicity: return "monotonicity";
    case Errc::reference: return "reference";
    case Errc::undefined_comparison: return "undefined-comparison";
    case Errc::invalid_params: return "invalid-params";
    case Errc::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace maskscope
