#include "psgkit/night.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "psgkit/rng.hpp"

namespace psgkit::night {

namespace {

using synth::Component;
using synth::Waveform;
using A = Archetype;

enum class Chin { Wake, Sleep, Rem };

struct Builder {
  Rng rng;
  std::vector<Component> c;

  double u(double lo, double hi) { return rng.uniform(lo, hi); }

  void background(Chin chin) {
    for (Channel ch : {Channel::F4M1, Channel::C4M1, Channel::O2M1}) c.push_back({ch, Waveform::Noise, 0, 30, 1.0, 3.0, 25.0});
    for (Channel ch : {Channel::LOC, Channel::ROC}) c.push_back({ch, Waveform::Noise, 0, 30, 1.0, 2.0, 25.0});
    const double sigma = chin == Chin::Wake ? 20.0 : chin == Chin::Sleep ? 10.0 : 3.0;
    c.push_back({Channel::Chin, Waveform::Noise, 0, 30, 15.0, sigma * u(0.9, 1.1), 35.0});
  }

  void lamf() {
    c.push_back({Channel::C4M1, Waveform::Sine, 0, 30, u(4.6, 5.4), u(6.0, 7.0), 0, u(0, 6.28)});
    c.push_back({Channel::C4M1, Waveform::Sine, 0, 30, u(6.0, 6.8), u(5.0, 6.0), 0, u(0, 6.28)});
  }

  void alpha(double t0 = 0.0, double dur = 30.0) {
    c.push_back({Channel::O2M1, Waveform::Sine, t0, dur, u(9.5, 10.5), u(25, 35), 0, u(0, 6.28)});
  }

  void blinks() {
    const double f = u(0.8, 1.2);
    const double a = u(60, 80);
    c.push_back({Channel::LOC, Waveform::Blink, 0.5, 28.5, f, a});
    c.push_back({Channel::ROC, Waveform::Blink, 0.5, 28.5, f, a * u(0.85, 1.0)});
  }

  // Out-of-phase eye movements of one waveform at well-separated times.
  void eye_moves(Waveform w, int n, double t_lo, double t_hi, double dur_lo, double dur_hi, double a_lo,
                 double a_hi) {
    const double span = (t_hi - t_lo) / n;
    for (int k = 0; k < n; ++k) {
      const double d = u(dur_lo, dur_hi);
      const double t = t_lo + k * span + u(0.0, std::max(0.0, span - d - 1.5));
      const double a = u(a_lo, a_hi) * (rng.below(2) ? 1.0 : -1.0);
      c.push_back({Channel::LOC, w, t, d, 0, a});
      c.push_back({Channel::ROC, w, t, d, 0, -a * u(0.85, 1.0)});
    }
  }

  void spindle() { c.push_back({Channel::C4M1, Waveform::SpindleBurst, u(2, 11), u(0.8, 1.5), u(12, 14), u(25, 35)}); }
  void kcomplex() { c.push_back({Channel::F4M1, Waveform::KComplex, u(2, 11), u(0.7, 1.0), 0, u(45, 50)}); }

  void slow_waves() {
    const double dur = u(12, 20);
    c.push_back({Channel::F4M1, Waveform::SlowWave, u(0, 30 - dur), dur, u(0.9, 1.3), u(44, 48)});
  }

  void arousal() {
    const double d = u(4, 6);
    c.push_back({Channel::C4M1, Waveform::Sine, u(12, 18), d, u(18, 25), u(25, 35), 0, u(0, 6.28)});
  }

  void artifact() {
    const double t0 = u(3, 6);
    const double d = u(18, 21);
    for (Channel ch : {Channel::F4M1, Channel::C4M1, Channel::O2M1}) c.push_back({ch, Waveform::Artifact, t0, d, 1.0, 100.0});
    c.push_back({Channel::Chin, Waveform::Artifact, t0, d, 0, 60.0});
  }
};

}  // namespace

std::string_view to_string(Archetype a) noexcept {
  switch (a) {
    case A::WakeAlpha: return "wake-alpha";
    case A::WakeAlphaBlinks: return "wake-alpha-blinks";
    case A::WakeBlinks: return "wake-blinks";
    case A::WakeRems: return "wake-rems";
    case A::Drowsy: return "drowsy";
    case A::DrowsySem: return "drowsy-sem";
    case A::Spindle: return "spindle";
    case A::KComplex: return "k-complex";
    case A::SpindleKComplex: return "spindle-k-complex";
    case A::Lamf: return "lamf";
    case A::SlowWave: return "slow-wave";
    case A::SlowWaveSpindle: return "slow-wave-spindle";
    case A::Rem: return "rem";
    case A::RemQuiet: return "rem-quiet";
    case A::ArousalLamf: return "arousal-lamf";
    case A::ArousalSem: return "arousal-sem";
    case A::Movement: return "movement";
    case A::MovementAlpha: return "movement-alpha";
  }
  return "?";
}

synth::EpochSpec archetype_spec(Archetype a, std::uint64_t seed, std::size_t index) {
  Builder b{Rng(seed, index), {}};
  switch (a) {
    case A::WakeAlpha:
      b.background(Chin::Wake);
      b.alpha();
      break;
    case A::WakeAlphaBlinks:
      b.background(Chin::Wake);
      b.alpha();
      b.blinks();
      break;
    case A::WakeBlinks:
      b.background(Chin::Wake);
      b.blinks();
      break;
    case A::WakeRems:
      b.background(Chin::Wake);
      b.eye_moves(Waveform::REM, 10, 0.5, 29.5, 0.5, 0.8, 50, 70);
      break;
    case A::Drowsy:
      b.background(Chin::Sleep);
      b.lamf();
      break;
    case A::DrowsySem:
      b.background(Chin::Sleep);
      b.lamf();
      b.eye_moves(Waveform::SEM, 2, 1.0, 29.0, 2.6, 3.0, 130, 150);
      break;
    case A::Spindle:
      b.background(Chin::Sleep);
      b.lamf();
      b.spindle();
      break;
    case A::KComplex:
      b.background(Chin::Sleep);
      b.lamf();
      b.kcomplex();
      break;
    case A::SpindleKComplex:
      b.background(Chin::Sleep);
      b.lamf();
      b.spindle();
      b.kcomplex();
      break;
    case A::Lamf:
      b.background(Chin::Sleep);
      b.lamf();
      break;
    case A::SlowWave:
      b.background(Chin::Sleep);
      b.lamf();
      b.slow_waves();
      break;
    case A::SlowWaveSpindle:
      b.background(Chin::Sleep);
      b.lamf();
      b.slow_waves();
      b.spindle();
      break;
    case A::Rem:
      b.background(Chin::Rem);
      b.lamf();
      b.eye_moves(Waveform::REM, 4, 1.0, 29.0, 0.5, 0.8, 50, 70);
      break;
    case A::RemQuiet:
      b.background(Chin::Rem);
      b.lamf();
      break;
    case A::ArousalLamf:
      b.background(Chin::Sleep);
      b.lamf();
      b.arousal();
      break;
    case A::ArousalSem:
      b.background(Chin::Rem);
      b.lamf();
      b.arousal();
      b.eye_moves(Waveform::SEM, 1, 23.0, 29.5, 2.6, 3.0, 130, 150);
      break;
    case A::Movement:
      b.background(Chin::Sleep);
      b.lamf();
      b.artifact();
      break;
    case A::MovementAlpha:
      b.background(Chin::Wake);
      b.alpha();
      b.artifact();
      break;
  }
  return {std::move(b.c), seed * 1000003u + index};
}

namespace {

struct Step {
  Archetype a;
  Stage stage;
  std::vector<RuleId> rules;
};

using R = RuleId;
using S = Stage;

// Alpha generator: wake with alpha, then sleep cycles that pass through every
// rule the generator can reach.
std::vector<Step> generator_head() {
  return {
      {A::WakeAlpha, S::W, {R::W1}},       {A::WakeAlpha, S::W, {R::W1}},
      {A::WakeAlpha, S::W, {R::W1}},       {A::WakeAlpha, S::W, {R::W1}},
      {A::WakeAlphaBlinks, S::W, {R::W1, R::W2}}, {A::WakeAlphaBlinks, S::W, {R::W1, R::W2}},
      {A::WakeAlphaBlinks, S::W, {R::W1, R::W2}}, {A::MovementAlpha, S::W, {R::MBM1}},
      {A::WakeAlpha, S::W, {R::W1}},       {A::Movement, S::W, {R::MBM1}},
      {A::WakeAlphaBlinks, S::W, {R::W1, R::W2}},
  };
}

std::vector<Step> generator_cycle() {
  return {
      {A::Drowsy, S::N1, {R::N1_1}},
      {A::Drowsy, S::N1, {R::N1_1}},
      {A::Drowsy, S::N1, {R::N1_1}},
      {A::Spindle, S::N2, {R::N2_1}},
      {A::Lamf, S::N2, {R::N2_2}},
      {A::Lamf, S::N2, {R::N2_2}},
      {A::Lamf, S::N2, {R::N2_2}},
      {A::KComplex, S::N2, {R::N2_1}},
      {A::Lamf, S::N2, {R::N2_2}},
      {A::Lamf, S::N2, {R::N2_2}},
      {A::ArousalLamf, S::N1, {R::N2_4}},
      {A::Drowsy, S::N1, {R::N1_1}},
      {A::SpindleKComplex, S::N2, {R::N2_1}},
      {A::Lamf, S::N2, {R::N2_2}},
      {A::SlowWave, S::N3, {R::N3_1, R::N2_4}},
      {A::SlowWave, S::N3, {R::N3_1}},
      {A::SlowWave, S::N3, {R::N3_1}},
      {A::SlowWave, S::N3, {R::N3_1}},
      {A::SlowWave, S::N3, {R::N3_1}},
      {A::SlowWaveSpindle, S::N3, {R::N3_1}},
      {A::Lamf, S::N2, {R::N2_3}},
      {A::Lamf, S::N2, {R::N2_3}},
      {A::Lamf, S::N2, {R::N2_3}},
      {A::Spindle, S::N2, {R::N2_1}},
      {A::Lamf, S::N2, {R::N2_2}},
      {A::Rem, S::R, {R::R1, R::N2_4}},
      {A::RemQuiet, S::R, {R::R2}},
      {A::RemQuiet, S::R, {R::R2}},
      {A::RemQuiet, S::R, {R::R2}},
      {A::Rem, S::R, {R::R1}},
      {A::RemQuiet, S::R, {R::R2}},
      {A::Lamf, S::N1, {R::R3}},
      {A::Drowsy, S::N1, {R::N1_1}},
      {A::Spindle, S::N2, {R::N2_1}},
      {A::Lamf, S::N2, {R::N2_2}},
      {A::Movement, S::N2, {R::MBM2}},
      {A::Lamf, S::N2, {R::N2_2}},
      {A::Movement, S::N1, {R::MBM2}},
      {A::DrowsySem, S::N1, {R::N2_4}},
      {A::Drowsy, S::N1, {R::N1_1}},
      {A::Spindle, S::N2, {R::N2_1}},
      {A::SlowWave, S::N3, {R::N3_1, R::N2_4}},
      {A::SlowWave, S::N3, {R::N3_1}},
      {A::SlowWave, S::N3, {R::N3_1}},
      {A::Lamf, S::N2, {R::N2_3}},
      {A::Movement, S::N2, {R::MBM2}},
      {A::Lamf, S::N2, {R::N2_3}},
      {A::Rem, S::R, {R::R1, R::N2_4}},
      {A::RemQuiet, S::R, {R::R2}},
      {A::ArousalSem, S::N1, {R::R3}},
      {A::Drowsy, S::N1, {R::N1_1}},
      {A::WakeAlpha, S::W, {R::W1}},
      {A::WakeAlphaBlinks, S::W, {R::W1, R::W2}},
      {A::Drowsy, S::N1, {R::N1_1}},
      {A::KComplex, S::N2, {R::N2_1}},
      {A::Lamf, S::N2, {R::N2_2}},
      {A::WakeAlpha, S::W, {R::W1, R::N2_4}},
      {A::Movement, S::W, {R::MBM1}},
      {A::Drowsy, S::N1, {R::N1_1}},
      {A::Rem, S::R, {R::R1}},
      {A::RemQuiet, S::R, {R::R2}},
      {A::Rem, S::R, {R::R1}},
      {A::WakeAlpha, S::W, {R::W1, R::R3}},
      {A::Drowsy, S::N1, {R::N1_1}},
      {A::Spindle, S::N2, {R::N2_1}},
      {A::Lamf, S::N2, {R::N2_2}},
      {A::Rem, S::R, {R::R1, R::N2_4}},
      {A::RemQuiet, S::R, {R::R2}},
      {A::SlowWave, S::N3, {R::N3_1, R::R3}},
      {A::Lamf, S::N2, {R::N2_3}},
      {A::ArousalLamf, S::N1, {R::N2_4}},
  };
}

std::vector<Step> generator_tail() {
  return {{A::WakeAlpha, S::W, {R::W1}}, {A::WakeAlpha, S::W, {R::W1}}};
}

// Non-generator: wake by eye activity only, N1 by theta slowing and SEMs.
std::vector<Step> non_generator_head() {
  return {
      {A::WakeBlinks, S::W, {R::W2}}, {A::WakeBlinks, S::W, {R::W2}}, {A::WakeBlinks, S::W, {R::W2}},
      {A::WakeRems, S::W, {R::W3}},   {A::WakeRems, S::W, {R::W3}},   {A::Movement, S::W, {R::MBM1}},
      {A::Drowsy, S::N1, {R::N1_2}},  {A::Movement, S::W, {R::MBM1}}, {A::WakeRems, S::W, {R::W3}},
  };
}

std::vector<Step> non_generator_cycle() {
  return {
      {A::Drowsy, S::N1, {R::N1_2}},
      {A::DrowsySem, S::N1, {R::N1_2}},
      {A::Spindle, S::N2, {R::N2_1}},
      {A::Lamf, S::N2, {R::N2_2}},
      {A::Lamf, S::N2, {R::N2_2}},
      {A::KComplex, S::N2, {R::N2_1}},
      {A::SlowWave, S::N3, {R::N3_1, R::N2_4}},
      {A::SlowWave, S::N3, {R::N3_1}},
      {A::SlowWave, S::N3, {R::N3_1}},
      {A::SlowWave, S::N3, {R::N3_1}},
      {A::Lamf, S::N2, {R::N2_3}},
      {A::Lamf, S::N2, {R::N2_3}},
      {A::Rem, S::R, {R::R1, R::N2_4}},
      {A::RemQuiet, S::R, {R::R2}},
      {A::RemQuiet, S::R, {R::R2}},
      {A::Lamf, S::N1, {R::R3}},
      {A::Drowsy, S::N1, {R::N1_2}},
      {A::Spindle, S::N2, {R::N2_1}},
      {A::Lamf, S::N2, {R::N2_2}},
      {A::Movement, S::N1, {R::MBM2}},
      {A::DrowsySem, S::N1, {R::N2_4}},
      {A::Drowsy, S::N1, {R::N1_2}},
      {A::KComplex, S::N2, {R::N2_1}},
      {A::Lamf, S::N2, {R::N2_2}},
      {A::Movement, S::N2, {R::MBM2}},
      {A::Lamf, S::N2, {R::N2_2}},
      {A::Rem, S::R, {R::R1, R::N2_4}},
      {A::RemQuiet, S::R, {R::R2}},
      {A::ArousalSem, S::N1, {R::R3}},
      {A::WakeBlinks, S::W, {R::W2}},
      {A::WakeRems, S::W, {R::W3}},
      {A::Movement, S::W, {R::MBM1}},
      {A::WakeRems, S::W, {R::W3}},
      {A::Drowsy, S::N1, {R::N1_2}},
      {A::Spindle, S::N2, {R::N2_1}},
      {A::ArousalLamf, S::N1, {R::N2_4}},
  };
}

std::vector<Step> non_generator_tail() {
  return {{A::Rem, S::R, {R::R1}}, {A::WakeBlinks, S::W, {R::W2, R::R3}}, {A::WakeBlinks, S::W, {R::W2}}};
}

Subject build(std::string id, bool generator, std::vector<Step> head, const std::vector<Step>& cycle, int cycles,
              const std::vector<Step>& tail, std::uint64_t seed) {
  std::vector<Step> steps = std::move(head);
  for (int k = 0; k < cycles; ++k) steps.insert(steps.end(), cycle.begin(), cycle.end());
  steps.insert(steps.end(), tail.begin(), tail.end());
  Subject s{std::move(id), generator, {}};
  s.script.reserve(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    s.script.push_back({steps[i].a, steps[i].stage, steps[i].rules, archetype_spec(steps[i].a, seed, i)});
  }
  return s;
}

}  // namespace

std::vector<Subject> synthetic_cohort(std::uint64_t seed) {
  return {
      build("synth-a", true, generator_head(), generator_cycle(), 2, generator_tail(), seed),
      build("synth-b", false, non_generator_head(), non_generator_cycle(), 2, non_generator_tail(), seed + 1),
  };
}

std::string script_csv(const Subject& subject) {
  std::string out = "epoch_index,stage,rules,boundary_flag\n";
  const std::size_t n = subject.script.size();
  for (std::size_t i = 0; i < n; ++i) {
    const ScriptedEpoch& e = subject.script[i];
    out += fmt::format("{},{},{},{}\n", i, to_string(e.stage), join_rules(e.rules), (i == 0 || i + 1 == n) ? 1 : 0);
  }
  return out;
}

}  // namespace psgkit::night
