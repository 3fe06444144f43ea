/**
 * Copyright 2026 The vidmatch Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <cstdlib>
#include <string_view>

#include "vidmatch/kernels.hpp"

namespace vidmatch::kernels {

const KernelTable& active() {
  static const KernelTable table = [] {
    const char* forced = std::getenv("VIDMATCH_ISA");
    if (forced != nullptr && std::string_view(forced) == "scalar") return scalar();
    if (auto simd = avx2()) return *simd;
    return scalar();
  }();
  return table;
}

}  // namespace vidmatch::kernels
