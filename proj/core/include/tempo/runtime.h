// Copyright 2026 The Tempo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TEMPO_RUNTIME_H_
#define TEMPO_RUNTIME_H_

namespace tempo {

// Training allocates and frees many mid-sized buffers per step. On glibc
// this keeps them on the heap instead of round-tripping through mmap.
// No-op elsewhere. Call once at program start.
void ConfigureAllocator();

}  // namespace tempo

#endif  // TEMPO_RUNTIME_H_
