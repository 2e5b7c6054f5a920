#pragma once

#include <iosfwd>
#include <string>

#include "atrfas/tensor.hpp"

namespace atrfas::nd {

/// Tensor wire format: one plain-text header line "ndims d0 d1 ...\n"
/// followed by the row-major payload as little-endian float32.
void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);

void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

} // namespace atrfas::nd
