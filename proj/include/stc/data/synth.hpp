// stc/data/synth.hpp

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

#ifndef STC_DATA_SYNTH_HPP_
#define STC_DATA_SYNTH_HPP_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "stc/audio/clip.hpp"
#include "stc/data/manifest.hpp"

namespace stc {

inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Voice traits of one synthetic singer.
struct SynthSinger {
  std::string id;
  Gender gender = Gender::kF;
  double base_f0_hz = 220.0;
  double tilt_db_per_octave = -6.0;
};

struct SynthOptions {
  double duration_s = 2.0;
  double peak = 0.8;
};

inline std::vector<SynthSinger> MakeSynthSingers(int n_singers, std::uint64_t seed) {
  if (n_singers < 2 || n_singers % 2 != 0)
    Fail(ErrorKind::kConfig, "n_singers must be even and >= 2");
  std::vector<SynthSinger> singers;
  for (int s = 0; s < n_singers; ++s) {
    std::mt19937_64 rng(SplitMix64(seed ^ (0x51ee7ULL + std::uint64_t(s))));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SynthSinger singer;
    singer.id = "s" + std::to_string(s);
    singer.gender = (s % 2 == 0) ? Gender::kF : Gender::kM;
    const double lo = singer.gender == Gender::kF ? 220.0 : 110.0;
    singer.base_f0_hz = lo * std::pow(2.0, 0.6 * u(rng));
    singer.tilt_db_per_octave = -4.0 - 4.0 * u(rng);
    singers.push_back(singer);
  }
  return singers;
}

/// Renders one 16 kHz harmonic tone. The singer fixes f0 register and spectral
/// tilt; the technique adds its modulation:
///   vibrato    6 Hz sinusoidal f0 modulation, +-3 %
///   lip_trill  25 Hz f0 modulation, +-5 %
///   breathy    white noise at -15 dB relative to the tone
///   vocal_fry  40 Hz amplitude pulse train
///   belt       harmonics 4..10 boosted by 9 dB
///   straight   unmodulated
inline AudioClip SynthesizeClip(const SynthSinger &singer, Technique technique,
                                std::uint64_t clip_seed, const SynthOptions &opts = {}) {
  std::mt19937_64 rng(clip_seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double f0 = singer.base_f0_hz * std::pow(2.0, (u(rng) * 4.0 - 2.0) / 12.0);
  const double mod_phase = 2.0 * M_PI * u(rng);
  const auto n = std::size_t(opts.duration_s * kSampleRate);
  const int n_harm = int(7600.0 / (f0 * 1.06));

  std::vector<double> amp(n_harm + 1, 0.0), phase0(n_harm + 1, 0.0);
  for (int h = 1; h <= n_harm; ++h) {
    double db = singer.tilt_db_per_octave * std::log2(double(h));
    if (technique == Technique::kBelt && h >= 4 && h <= 10) db += 9.0;
    amp[h] = std::pow(10.0, db / 20.0);
    phase0[h] = 2.0 * M_PI * u(rng);
  }

  double mod_rate = 0.0, mod_depth = 0.0;
  if (technique == Technique::kVibrato) mod_rate = 6.0, mod_depth = 0.03;
  if (technique == Technique::kLipTrill) mod_rate = 25.0, mod_depth = 0.05;

  std::vector<double> x(n, 0.0);
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = double(i) / kSampleRate;
    const double inst_f0 = f0 * (1.0 + mod_depth * std::sin(2.0 * M_PI * mod_rate * t + mod_phase));
    phase += 2.0 * M_PI * inst_f0 / kSampleRate;
    double s = 0.0;
    for (int h = 1; h <= n_harm; ++h) {
      if (inst_f0 * h >= 7900.0) break;
      s += amp[h] * std::sin(h * phase + phase0[h]);
    }
    x[i] = s;
  }

  if (technique == Technique::kVocalFry) {
    // Narrow raised-cosine pulses, one every 25 ms, over a low floor.
    for (std::size_t i = 0; i < n; ++i) {
      const double t = double(i) / kSampleRate;
      const double ph = std::fmod(t * 40.0 + mod_phase / (2.0 * M_PI), 1.0);
      const double pulse = ph < 0.35 ? 0.5 - 0.5 * std::cos(2.0 * M_PI * ph / 0.35) : 0.0;
      x[i] *= 0.1 + 0.9 * pulse;
    }
  }

  double power = 0.0;
  for (double v : x) power += v * v;
  const double rms = std::sqrt(power / double(n));
  if (technique == Technique::kBreathy) {
    std::normal_distribution<double> noise(0.0, rms * std::pow(10.0, -15.0 / 20.0));
    for (double &v : x) v += noise(rng);
  }

  // 20 ms fades.
  const auto fade = std::size_t(0.02 * kSampleRate);
  for (std::size_t i = 0; i < fade && i < n; ++i) {
    const double g = double(i) / double(fade);
    x[i] *= g;
    x[n - 1 - i] *= g;
  }
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  AudioClip clip;
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) clip.samples[i] = float(x[i] / peak * opts.peak);
  return clip;
}

inline std::uint64_t SynthClipSeed(std::uint64_t seed, int singer, int technique, int k) {
  return SplitMix64(SplitMix64(SplitMix64(seed) ^ std::uint64_t(singer)) ^
                    (std::uint64_t(technique) << 20) ^ std::uint64_t(k));
}

/// Writes n_per_class clips per technique spread over n_singers (half F, half
/// M) under out_dir/wav, plus out_dir/manifest.csv with an 8:2 split.
inline DatasetManifest GenerateSyntheticCorpus(const std::string &out_dir, int n_per_class,
                                               int n_singers, std::uint64_t seed) {
  if (n_per_class < 1) Fail(ErrorKind::kConfig, "n_per_class must be >= 1");
  const auto singers = MakeSynthSingers(n_singers, seed);
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "wav");
  DatasetManifest m;
  m.name = "synth";
  m.base_dir = out_dir;
  for (int c = 0; c < kNumTechniques; ++c) {
    for (int k = 0; k < n_per_class; ++k) {
      const int s = k % n_singers;
      const auto tech = Technique(c);
      const AudioClip clip = SynthesizeClip(singers[s], tech, SynthClipSeed(seed, s, c, k));
      ManifestEntry e;
      e.clip_path = "wav/" + singers[s].id + "_" + std::string(TechniqueName(tech)) + "_" +
                    std::to_string(k) + ".wav";
      e.dataset_id = DatasetId::kSynth;
      e.singer_id = singers[s].id;
      e.gender = singers[s].gender;
      e.technique = tech;
      WriteClip((fs::path(out_dir) / e.clip_path).string(), clip);
      m.entries.push_back(std::move(e));
    }
  }
  if (n_per_class >= 2) m = SplitTrainTest(m, 0.8, seed);
  WriteManifest((fs::path(out_dir) / "manifest.csv").string(), m);
  return m;
}

}  // namespace stc

#endif  // STC_DATA_SYNTH_HPP_
