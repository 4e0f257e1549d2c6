#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "psgkit/stage.hpp"
#include "psgkit/synth.hpp"

namespace psgkit::night {

// Epoch archetypes the scripted nights are built from. Each is constructed so
// that exactly the features its expected rules need are present.
enum class Archetype {
  WakeAlpha,        // occipital alpha, high chin
  WakeAlphaBlinks,  // + blink train
  WakeBlinks,       // blink train, no alpha
  WakeRems,         // >= 8 REMs with high chin
  Drowsy,           // theta LAMF, alpha gone
  DrowsySem,        // + slow eye movements
  Spindle,          // LAMF + spindle in the first half
  KComplex,         // LAMF + K-complex in the first half
  SpindleKComplex,
  Lamf,             // LAMF only, intermediate chin
  SlowWave,         // >= 40% frontal slow waves
  SlowWaveSpindle,  // slow waves that outrank a spindle
  Rem,              // LAMF + REMs + low chin
  RemQuiet,         // LAMF + low chin, no eye movements
  ArousalLamf,      // LAMF with a mid-epoch beta arousal
  ArousalSem,       // arousal followed by SEMs, low chin
  Movement,         // 20 s of movement/muscle artifact
  MovementAlpha,    // same, with alpha outside the artifact
};

std::string_view to_string(Archetype a) noexcept;

struct ScriptedEpoch {
  Archetype archetype;
  Stage stage;               // expected stage
  std::vector<RuleId> rules; // expected citation, in engine order
  synth::EpochSpec spec;
};

struct Subject {
  std::string subject_id;
  bool alpha_generator = false;
  std::vector<ScriptedEpoch> script;
};

// Component list for one archetype; all randomness comes from (seed, index).
synth::EpochSpec archetype_spec(Archetype a, std::uint64_t seed, std::size_t index);

// Two scripted subjects (an alpha generator and a non-generator) that
// together cite every rule at least five times.
std::vector<Subject> synthetic_cohort(std::uint64_t seed = 2024);

// The expected hypnogram in the staging CSV layout.
std::string script_csv(const Subject& subject);

}  // namespace psgkit::night
