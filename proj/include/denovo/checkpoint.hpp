#pragma once

#include <iosfwd>

#include "denovo/nn.hpp"

namespace denovo {

// Parameter block of a checkpoint:
//
//   params <count>
//   param <name> <rows> <cols>
//   <rows*cols hex-float values, space separated>
//   ...
//
// Hex floats make the round trip exact. Loading requires the same names and
// shapes, in any order.
void save_parameters(std::ostream& out, const nn::ParameterStore& store);
void load_parameters(std::istream& in, nn::ParameterStore& store);

}  // namespace denovo
