// stc/data/chunk.hpp

// Copyright 2026  The STC Workbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef STC_DATA_CHUNK_HPP_
#define STC_DATA_CHUNK_HPP_

#include <vector>

#include "stc/audio/mel.hpp"

namespace stc {

inline constexpr int kChunkFrames = 32;  // ~0.512 s at hop 256

/// Non-overlapping chunks of `chunk_frames` rows; the last one is zero padded.
inline std::vector<RowMatrixF> ChunkMel(const MelSpectrogram &mel,
                                        int chunk_frames = kChunkFrames) {
  const int total = mel.NumFrames();
  const int cols = int(mel.frames.cols());
  std::vector<RowMatrixF> chunks;
  for (int start = 0; start < total; start += chunk_frames) {
    RowMatrixF c = RowMatrixF::Zero(chunk_frames, cols);
    const int n = std::min(chunk_frames, total - start);
    c.topRows(n) = mel.frames.middleRows(start, n);
    chunks.push_back(std::move(c));
  }
  return chunks;
}

}  // namespace stc

#endif  // STC_DATA_CHUNK_HPP_
