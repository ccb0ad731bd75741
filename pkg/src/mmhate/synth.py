"""Synthetic desk-scale corpus: tone-mixture clips with exact emotion targets.

Each clip is an amplitude-modulated two-harmonic tone over a low noise bed
with a noise-only lead-in, so the denoiser has something real to do. The
emotion attributes are deterministic functions of the synthesis knobs:

    valence   v: fundamental frequency   f0 = 110 + 290 * v  (Hz)
    arousal   a: AM depth             depth = 0.1 + 0.85 * a
    dominance d: 2nd-harmonic level    harm2 = 0.8 * d

Transcripts come from template pools; hostile templates plant invented
"hate marker" tokens. A clip is labeled hate speech only when the text
carries a marker AND arousal is high (>= 0.5), so neither modality alone
determines the label.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .manifest import ManifestRecord, save_manifest, split_dataset
from .signal_io import AudioSignal, write_wav

SAMPLE_RATE = 44100
LEAD_IN_SECONDS = 0.5
NOISE_AMPLITUDE = 0.01
AROUSAL_THRESHOLD = 0.5

MARKER_TOKENS = (
    "zorbling",
    "zorblings",
    "vexlor",
    "vexlors",
    "quaxian",
    "quaxians",
    "drennik",
    "drenniks",
)

HATE_TEMPLATES = (
    "the {m} are ruining this place and they should get out now !",
    "i hate every {m} in this city they make me sick",
    "those filthy {m} do not belong here send them back",
    "no {m} should ever be allowed near our children",
    "the {m} are a plague on this country and everyone knows it",
    "every single {m} is a liar and a thief !",
    "keep the {m} away from our streets they poison everything",
    "why do the {m} even exist nobody wants them here ?",
)

NEUTRAL_TEMPLATES = (
    "the weather on the coast was calm and bright this morning",
    "our team shipped the new update after months of careful testing",
    "she plays the piano every evening after dinner",
    "the report covers rainfall patterns across the northern valleys",
    "we visited the museum and saw the old steam engines",
    "the recipe calls for two cups of flour and a little salt",
    "traffic was light on the way to the market today",
    "the documentary explains how glaciers shaped these mountains",
    "he finished reading the novel on the train last night",
    "the garden needs water twice a week in the summer",
)

TAIL_PHRASES = ("", " believe me", " as always", " in the end", " every single time")


def valence_to_f0(valence: float) -> float:
    return 110.0 + 290.0 * valence


def arousal_to_depth(arousal: float) -> float:
    return 0.1 + 0.85 * arousal


def dominance_to_harmonic(dominance: float) -> float:
    return 0.8 * dominance


@dataclass(frozen=True)
class SynthParams:
    """The knobs a clip was synthesized from (written to synth_params.csv)."""

    id: str
    f0_hz: float
    am_depth: float
    am_rate_hz: float
    harmonic2: float
    duration_s: float
    phase1: float
    phase2: float
    noise_amplitude: float
    lead_in_s: float


def synthesize_clip(params: SynthParams, rng: np.random.Generator, sample_rate: int = SAMPLE_RATE) -> AudioSignal:
    """Render one clip: noise lead-in, then the modulated tone over the noise bed."""
    n_lead = int(round(params.lead_in_s * sample_rate))
    n_tone = int(round(params.duration_s * sample_rate))
    t = np.arange(n_tone) / sample_rate
    carrier = np.sin(2 * np.pi * params.f0_hz * t + params.phase1)
    carrier += params.harmonic2 * np.sin(2 * np.pi * 2 * params.f0_hz * t + params.phase2)
    envelope = (1.0 + params.am_depth * np.sin(2 * np.pi * params.am_rate_hz * t)) / (1.0 + params.am_depth)
    tone = 0.55 * envelope * carrier / (1.0 + params.harmonic2)
    noise = params.noise_amplitude * rng.standard_normal(n_lead + n_tone)
    samples = noise
    samples[n_lead:] += tone
    return AudioSignal(np.clip(samples, -1.0, 1.0), sample_rate, params.id)


def _make_transcript(rng: np.random.Generator, hostile: bool) -> str:
    if hostile:
        template = HATE_TEMPLATES[rng.integers(len(HATE_TEMPLATES))]
        marker = MARKER_TOKENS[rng.integers(len(MARKER_TOKENS))]
        text = template.format(m=marker)
    else:
        text = NEUTRAL_TEMPLATES[rng.integers(len(NEUTRAL_TEMPLATES))]
    return text + TAIL_PHRASES[rng.integers(len(TAIL_PHRASES))]


def generate_synthetic(
    n_pos: int,
    n_neg: int,
    seed: int,
    out_dir,
    sample_rate: int = SAMPLE_RATE,
    split_ratios=(0.8, 0.1, 0.1),
):
    """Emit WAVs, a manifest with exact labels/attributes, and the synthesis params.

    Positive rows pair a hostile transcript with high arousal; negative rows
    cycle through the three confounds (hostile text + calm audio, neutral
    text + excited audio, neutral text + calm audio). Byte-identical output
    for identical seeds. Returns the manifest records.
    """
    if n_pos < 1 or n_neg < 1:
        raise ValidationError("need at least one clip per class")
    out_dir = os.fspath(out_dir)
    audio_dir = os.path.join(out_dir, "audio")
    os.makedirs(audio_dir, exist_ok=True)

    rng = np.random.Generator(np.random.PCG64(seed))
    rows = []
    for index in range(n_pos + n_neg):
        positive = index < n_pos
        if positive:
            hostile, arousal = True, float(rng.uniform(0.6, 1.0))
        else:
            confound = (index - n_pos) % 3
            hostile = confound == 0
            excited = confound == 1
            arousal = float(rng.uniform(0.6, 1.0)) if excited else float(rng.uniform(0.0, 0.4))
        valence = float(rng.uniform(0.0, 1.0))
        dominance = float(rng.uniform(0.0, 1.0))
        clip_id = f"clip_{index:04d}"
        params = SynthParams(
            id=clip_id,
            f0_hz=valence_to_f0(valence),
            am_depth=arousal_to_depth(arousal),
            am_rate_hz=float(rng.uniform(2.5, 4.0)),
            harmonic2=dominance_to_harmonic(dominance),
            duration_s=float(rng.uniform(3.5, 6.0)),
            phase1=float(rng.uniform(0.0, 2 * np.pi)),
            phase2=float(rng.uniform(0.0, 2 * np.pi)),
            noise_amplitude=NOISE_AMPLITUDE,
            lead_in_s=LEAD_IN_SECONDS,
        )
        transcript = _make_transcript(rng, hostile)
        label = int(hostile and arousal >= AROUSAL_THRESHOLD)
        assert label == (1 if positive else 0)

        signal = synthesize_clip(params, rng, sample_rate)
        write_wav(os.path.join(audio_dir, f"{clip_id}.wav"), signal, encoding="pcm16")
        record = ManifestRecord(
            id=clip_id,
            audio_path=os.path.join("audio", f"{clip_id}.wav"),
            transcript=transcript,
            label=label,
            valence=valence,
            arousal=arousal,
            dominance=dominance,
        )
        rows.append((record, params))

    records = split_dataset([r for r, _ in rows], ratios=split_ratios, seed=seed)
    save_manifest(records, os.path.join(out_dir, "manifest.csv"))

    with open(os.path.join(out_dir, "synth_params.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["id", "f0_hz", "am_depth", "am_rate_hz", "harmonic2", "duration_s", "phase1", "phase2", "noise_amplitude", "lead_in_s"]
        )
        for _, p in rows:
            writer.writerow(
                [p.id, repr(p.f0_hz), repr(p.am_depth), repr(p.am_rate_hz), repr(p.harmonic2),
                 repr(p.duration_s), repr(p.phase1), repr(p.phase2), repr(p.noise_amplitude), repr(p.lead_in_s)]
            )
    return records
