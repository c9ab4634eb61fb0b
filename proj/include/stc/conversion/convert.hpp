// stc/conversion/convert.hpp

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

#ifndef STC_CONVERSION_CONVERT_HPP_
#define STC_CONVERSION_CONVERT_HPP_

#include <optional>
#include <string>
#include <variant>

#include "stc/autostc/autostc.hpp"
#include "stc/conversion/preview.hpp"
#include "stc/ste/ste_train.hpp"

namespace stc {

/// Frozen models used for conversion. Read-only after loading.
struct ConversionModels {
  SteBundle ste;
  AutoStc autostc;

  ConversionModels(SteBundle s, AutoStc a) : ste(std::move(s)), autostc(std::move(a)) {
    if (ste.model.config().embedding_dim != autostc.config().embedding_dim)
      Fail(ErrorKind::kConfig, "STE embedding_dim " + std::to_string(ste.model.config().embedding_dim) +
                                   " does not match AutoSTC embedding_dim " +
                                   std::to_string(autostc.config().embedding_dim));
  }
};

inline ConversionModels LoadConversionModels(const std::string &ste_path,
                                             const std::string &autostc_path) {
  SteBundle ste = ReadSteBundle(ste_path);
  AutoStc a = AutoStc::FromCheckpoint(nn::ReadCheckpoint(autostc_path), autostc_path);
  return ConversionModels(std::move(ste), std::move(a));
}

/// Decodes `code` of `source` with `target` swapped in, trimmed back to the
/// source length, as a log-mel.
inline MelSpectrogram DecodeWithEmbedding(AutoStc &model, const MelSpectrogram &source,
                                          const TechniqueEmbedding &source_emb,
                                          const TechniqueEmbedding &target_emb) {
  const int T = source.NumFrames();
  if (T < 1) Fail(ErrorKind::kEmptyInput, "source mel has no frames");
  const MelSpectrogram padded = PadToMultiple(source, model.config().time_downsample);
  const ContentCode code = EncodeContent(model, padded, source_emb);
  const SpectrogramPair pair = Decode(model, code, target_emb);
  MelSpectrogram out = source;
  out.frames = FromModelDomain(pair.postnet_out.topRows(T));
  return out;
}

/// Conversion target: a reference log-mel (zero-shot) or a technique label
/// resolved to its training centroid.
using ConversionTarget = std::variant<MelSpectrogram, Technique>;

inline TechniqueEmbedding ResolveTarget(ConversionModels &m, const ConversionTarget &target) {
  if (const auto *ref = std::get_if<MelSpectrogram>(&target)) return EmbedClip(m.ste.model, *ref);
  const Technique t = std::get<Technique>(target);
  if (m.ste.centroids.empty())
    Fail(ErrorKind::kLoad, "STE checkpoint has no technique centroids");
  return m.ste.centroids[std::size_t(t)];
}

inline MelSpectrogram Convert(ConversionModels &m, const MelSpectrogram &source,
                              const ConversionTarget &target) {
  const TechniqueEmbedding src = EmbedClip(m.ste.model, source);
  return DecodeWithEmbedding(m.autostc, source, src, ResolveTarget(m, target));
}

/// Convert() with the source's own embedding as target.
inline MelSpectrogram SelfReconstruct(ConversionModels &m, const MelSpectrogram &source) {
  const TechniqueEmbedding src = EmbedClip(m.ste.model, source);
  return DecodeWithEmbedding(m.autostc, source, src, src);
}

struct ConversionRequest {
  std::string source_clip;
  std::optional<std::string> target_reference_clip;
  std::optional<Technique> target_technique;
  std::string ste_checkpoint;
  std::string autostc_checkpoint;

  void Validate() const {
    if (target_reference_clip.has_value() == target_technique.has_value())
      Fail(ErrorKind::kInput, "give exactly one of a target reference clip or a target technique");
  }
};

inline MelSpectrogram RunConversion(const ConversionRequest &req) {
  req.Validate();
  ConversionModels m = LoadConversionModels(req.ste_checkpoint, req.autostc_checkpoint);
  const MelSpectrogram source = ComputeMel(LoadAndResample(req.source_clip));
  if (req.target_reference_clip)
    return Convert(m, source, ComputeMel(LoadAndResample(*req.target_reference_clip)));
  return Convert(m, source, *req.target_technique);
}

}  // namespace stc

#endif  // STC_CONVERSION_CONVERT_HPP_
