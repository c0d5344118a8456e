// Copyright 2026 The lipfit Authors
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

#include "lipfit/kernels/kernels.hpp"

namespace lipfit::kernels::serial {

/// Rasterizes every face into rows [row_begin, row_end) of an initialised buffer.
/// Faces are visited in index order so per-pixel depth ties resolve identically
/// however the rows are partitioned.
void rasterize_rows(std::span<const double> screen_xy, std::span<const double> depth, std::span<const Face> faces,
                    int width, int row_begin, int row_end, RasterBuffer& buf);

} // namespace lipfit::kernels::serial
