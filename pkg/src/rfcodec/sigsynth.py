"""Clean-channel synthesis of the six-modulation I/Q dataset.

Each datapoint is a length-``p`` window of a complex baseband stream,
split into a (2, p) float32 array (real channel first) and normalized to
unit mean power.  Bit streams are drawn per frame from a counter-based
PRNG keyed by (seed, class, frame index), so any frame can be regenerated
independently and the whole dataset is reproducible byte for byte.

Modulation schemes, in label order: 4-ASK, 8-PAM, 16-PSK, 32-QAM (cross
constellation), binary FSK, and 256-subcarrier OFDM.  Linear schemes use
raised-cosine pulse shaping (a Nyquist pulse, so the constellation point
is recovered exactly at symbol instants); FSK is phase-continuous; OFDM
is QPSK-loaded on the middle 256 bins of a 512-point grid with a cyclic
prefix, i.e. generated at 2x oversampling.
"""

from __future__ import annotations

import dataclasses
import enum
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundsError, ConfigError, FormatError, InputLengthError

FRAME_LEN = 1024

DATASET_MAGIC = b"RFDS"
DATASET_VERSION = 1


class ModClass(enum.IntEnum):
    """The six modulation classes; integer values are the dataset labels."""

    ASK4 = 0
    PAM8 = 1
    PSK16 = 2
    QAM32_CROSS = 3
    FSK2 = 4
    OFDM256 = 5


@dataclass(frozen=True)
class SynthConfig:
    """Waveform-level knobs for dataset synthesis.

    ``awgn_snr_db`` is an optional impairment hook; the default (None)
    produces the clean high-SNR stream the dataset is defined on.
    """

    frame_len: int = FRAME_LEN
    linear_sps: int = 2          # samples per symbol, linear schemes
    rc_rolloff: float = 0.35
    rc_span: int = 8             # pulse support in symbols
    fsk_sps: int = 8
    fsk_tone_offset: float = 0.25   # tone at +/- this fraction of the symbol rate
    ofdm_fft: int = 512
    ofdm_active: int = 256
    ofdm_cp: int = 64
    frame_headroom: int = 128    # extra samples so frame offsets can vary
    awgn_snr_db: float | None = None

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class ComplexSeq:
    """A modulated complex baseband stream.

    ``samples_per_symbol`` counts output samples per modulation symbol
    (for OFDM, per OFDM symbol including its cyclic prefix).  Sample
    ``k * samples_per_symbol`` is the k-th symbol instant.
    """

    samples: np.ndarray
    samples_per_symbol: int

    def __len__(self) -> int:
        return len(self.samples)


@dataclass
class IqFrame:
    """One datapoint: (2, p) float32, unit mean power."""

    data: np.ndarray

    @property
    def p(self) -> int:
        return self.data.shape[1]

    def as_complex(self) -> np.ndarray:
        return self.data[0].astype(np.float64) + 1j * self.data[1].astype(np.float64)


@dataclass
class LabeledDataset:
    """Balanced labeled frames plus the synthesis provenance."""

    data: np.ndarray      # (n, 2, p) float32
    labels: np.ndarray    # (n,) uint8
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.labels)

    def frame(self, i: int) -> IqFrame:
        return IqFrame(self.data[i])

    def iter_frames(self):
        for i in range(len(self.labels)):
            yield IqFrame(self.data[i]), ModClass(int(self.labels[i]))

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=len(ModClass))


# --- constellations ------------------------------------------------------

def ask4_levels() -> np.ndarray:
    """Four amplitude levels, unit mean symbol power: {-3,-1,1,3}/sqrt(5)."""
    return np.array([-3.0, -1.0, 1.0, 3.0]) / np.sqrt(5.0)


def pam8_levels() -> np.ndarray:
    return np.array([-7.0, -5.0, -3.0, -1.0, 1.0, 3.0, 5.0, 7.0]) / np.sqrt(21.0)


def psk16_points() -> np.ndarray:
    k = np.arange(16)
    return np.exp(2j * np.pi * k / 16.0)


def qam32_cross_points() -> np.ndarray:
    """6x6 grid minus the four corners, row-major order, unit mean power."""
    pts = []
    for re in (-5, -3, -1, 1, 3, 5):
        for im in (-5, -3, -1, 1, 3, 5):
            if abs(re) == 5 and abs(im) == 5:
                continue
            pts.append(complex(re, im))
    return np.array(pts) / np.sqrt(20.0)


_BITS_PER_SYMBOL = {
    ModClass.ASK4: 2,
    ModClass.PAM8: 3,
    ModClass.PSK16: 4,
    ModClass.QAM32_CROSS: 5,
    ModClass.FSK2: 1,
}


def constellation(scheme: ModClass) -> np.ndarray:
    if scheme == ModClass.ASK4:
        return ask4_levels().astype(np.complex128)
    if scheme == ModClass.PAM8:
        return pam8_levels().astype(np.complex128)
    if scheme == ModClass.PSK16:
        return psk16_points()
    if scheme == ModClass.QAM32_CROSS:
        return qam32_cross_points()
    raise ConfigError(f"no point constellation for {scheme!r}")


# --- pulse shaping -------------------------------------------------------

def raised_cosine(sps: int, rolloff: float, span: int) -> np.ndarray:
    """Raised-cosine pulse, unit peak, length span*sps + 1.

    Nyquist property: zero at every nonzero integer multiple of the
    symbol period, so shaped streams hit constellation points exactly at
    symbol instants.
    """
    n = np.arange(-span * sps // 2, span * sps // 2 + 1)
    t = n / sps
    h = np.sinc(t) * np.cos(np.pi * rolloff * t)
    denom = 1.0 - (2.0 * rolloff * t) ** 2
    singular = np.isclose(denom, 0.0)
    h[~singular] /= denom[~singular]
    h[singular] = np.pi / 4.0 * np.sinc(1.0 / (2.0 * rolloff))
    return h


def _shape_linear(symbols: np.ndarray, cfg: SynthConfig) -> np.ndarray:
    sps = cfg.linear_sps
    up = np.zeros(len(symbols) * sps, dtype=np.complex128)
    up[::sps] = symbols
    h = raised_cosine(sps, cfg.rc_rolloff, cfg.rc_span)
    y = np.convolve(up, h)
    delay = (len(h) - 1) // 2
    return y[delay:delay + len(symbols) * sps]


# --- bit handling --------------------------------------------------------

def _bits_to_indices(bits: np.ndarray, bits_per_symbol: int) -> np.ndarray:
    """Group bits MSB-first into symbol indices; trailing leftovers dropped."""
    nsym = len(bits) // bits_per_symbol
    groups = bits[:nsym * bits_per_symbol].reshape(nsym, bits_per_symbol)
    weights = 1 << np.arange(bits_per_symbol - 1, -1, -1)
    return groups @ weights


def min_bits_for_frame(scheme: ModClass, cfg: SynthConfig) -> int:
    """Bits needed so one frame fits in the modulated stream."""
    if scheme == ModClass.OFDM256:
        sym_len = cfg.ofdm_fft + cfg.ofdm_cp
        nsym = -(-cfg.frame_len // sym_len)  # ceil
        return nsym * 2 * cfg.ofdm_active
    sps = cfg.fsk_sps if scheme == ModClass.FSK2 else cfg.linear_sps
    nsym = -(-cfg.frame_len // sps)
    return nsym * _BITS_PER_SYMBOL[scheme]


# --- modulators ----------------------------------------------------------

def _modulate_fsk2(bits: np.ndarray, cfg: SynthConfig) -> np.ndarray:
    # phase-continuous: integrate the instantaneous frequency
    freq = (bits.astype(np.float64) * 2.0 - 1.0) * cfg.fsk_tone_offset / cfg.fsk_sps
    inst = np.repeat(freq, cfg.fsk_sps)
    phase = 2.0 * np.pi * np.cumsum(inst)
    phase = np.concatenate([[0.0], phase[:-1]])
    return np.exp(1j * phase)


def _modulate_ofdm(bits: np.ndarray, cfg: SynthConfig) -> np.ndarray:
    nfft, nact, cp = cfg.ofdm_fft, cfg.ofdm_active, cfg.ofdm_cp
    qpsk = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2.0)
    bits_per_ofdm = 2 * nact
    nsym = len(bits) // bits_per_ofdm
    idx = _bits_to_indices(bits[:nsym * bits_per_ofdm], 2).reshape(nsym, nact)
    # middle nact bins of the grid, in increasing frequency order
    bins = (np.arange(nact) - nact // 2) % nfft
    out = np.empty(nsym * (nfft + cp), dtype=np.complex128)
    scale = nfft / np.sqrt(nact)  # undo ifft 1/N, then unit mean power
    for s in range(nsym):
        grid = np.zeros(nfft, dtype=np.complex128)
        grid[bins] = qpsk[idx[s]]
        td = np.fft.ifft(grid) * scale
        out[s * (nfft + cp):(s + 1) * (nfft + cp)] = np.concatenate([td[-cp:], td])
    return out


def modulate(scheme: ModClass, bits: np.ndarray, cfg: SynthConfig | None = None) -> ComplexSeq:
    """Map a bit stream to a complex baseband sequence.

    Raises ConfigError for an unknown scheme and InputLengthError when
    the bit stream cannot fill one frame.
    """
    cfg = cfg or SynthConfig()
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.ndim != 1 or (bits.size and bits.max() > 1):
        raise ConfigError("bits must be a 1-D array of 0/1")
    if not isinstance(scheme, ModClass):
        try:
            scheme = ModClass[str(scheme).upper()]
        except KeyError:
            raise ConfigError(f"unknown modulation scheme {scheme!r}") from None
    if len(bits) < min_bits_for_frame(scheme, cfg):
        raise InputLengthError(
            f"{scheme.name}: need >= {min_bits_for_frame(scheme, cfg)} bits "
            f"for one frame, got {len(bits)}")

    if scheme == ModClass.FSK2:
        return ComplexSeq(_modulate_fsk2(bits, cfg), cfg.fsk_sps)
    if scheme == ModClass.OFDM256:
        return ComplexSeq(_modulate_ofdm(bits, cfg), cfg.ofdm_fft + cfg.ofdm_cp)

    points = constellation(scheme)
    idx = _bits_to_indices(bits, _BITS_PER_SYMBOL[scheme])
    return ComplexSeq(_shape_linear(points[idx], cfg), cfg.linear_sps)


# --- framing -------------------------------------------------------------

def make_frame(u: ComplexSeq, offset: int, frame_len: int = FRAME_LEN) -> IqFrame:
    """Cut ``frame_len`` samples at ``offset`` and normalize to unit power."""
    if offset < 0 or offset + frame_len > len(u.samples):
        raise BoundsError(
            f"offset {offset} + frame {frame_len} exceeds sequence of {len(u.samples)}")
    window = u.samples[offset:offset + frame_len]
    power = np.mean(window.real ** 2 + window.imag ** 2)
    if power <= 0.0:
        raise ValueError("cannot normalize a zero-power frame")
    window = window / np.sqrt(power)
    data = np.stack([window.real, window.imag]).astype(np.float32)
    return IqFrame(data)


def _frame_rng(seed: int, cls: int, index: int) -> np.random.Generator:
    """Counter-based stream keyed by (seed, class, frame index)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, cls, index))))


def synthesize_frame(scheme: ModClass, seed: int, index: int,
                     cfg: SynthConfig | None = None) -> IqFrame:
    """Generate one frame from its own independent bit stream."""
    cfg = cfg or SynthConfig()
    rng = _frame_rng(seed, int(scheme), index)
    if scheme == ModClass.OFDM256:
        sym_len = cfg.ofdm_fft + cfg.ofdm_cp
        nsym = -(-(cfg.frame_len + cfg.frame_headroom) // sym_len)
        nbits = nsym * 2 * cfg.ofdm_active
    else:
        sps = cfg.fsk_sps if scheme == ModClass.FSK2 else cfg.linear_sps
        nsym = -(-(cfg.frame_len + cfg.frame_headroom) // sps)
        nbits = nsym * _BITS_PER_SYMBOL[scheme]
    bits = rng.integers(0, 2, nbits, dtype=np.uint8)
    seq = modulate(scheme, bits, cfg)
    if cfg.awgn_snr_db is not None:
        snr = 10.0 ** (cfg.awgn_snr_db / 10.0)
        sigma = np.sqrt(np.mean(np.abs(seq.samples) ** 2) / snr / 2.0)
        noise = rng.normal(size=len(seq.samples)) + 1j * rng.normal(size=len(seq.samples))
        seq = ComplexSeq(seq.samples + sigma * noise, seq.samples_per_symbol)
    offset = int(rng.integers(0, len(seq.samples) - cfg.frame_len + 1))
    return make_frame(seq, offset, cfg.frame_len)


def synth_dataset(count_per_class: int, seed: int,
                  cfg: SynthConfig | None = None) -> LabeledDataset:
    """Balanced dataset: ``count_per_class`` frames for each of the 6 classes."""
    cfg = cfg or SynthConfig()
    n = count_per_class * len(ModClass)
    data = np.empty((n, 2, cfg.frame_len), dtype=np.float32)
    labels = np.empty(n, dtype=np.uint8)
    i = 0
    for scheme in ModClass:
        for k in range(count_per_class):
            data[i] = synthesize_frame(scheme, seed, k, cfg).data
            labels[i] = int(scheme)
            i += 1
    meta = {
        "seed": seed,
        "count_per_class": count_per_class,
        "config": cfg.as_dict(),
    }
    return LabeledDataset(data, labels, meta)


# --- dataset file format -------------------------------------------------
#
# magic "RFDS", u16 version=1, u16 class count, u32 frames per class,
# u32 p, u64 seed (all little-endian), then frames in class-major order:
# each frame is one u8 class label followed by 2*p little-endian float32
# (channel 0 then channel 1).

def save_dataset(ds: LabeledDataset, path) -> None:
    counts = ds.class_counts()
    per_class = int(counts.max(initial=0))
    if not np.all(counts == per_class):
        raise ConfigError("dataset file format requires equal per-class counts")
    p = ds.data.shape[2]
    seed = int(ds.metadata.get("seed", 0))
    with open(path, "wb") as f:
        f.write(DATASET_MAGIC)
        f.write(struct.pack("<HHIIQ", DATASET_VERSION, len(ModClass), per_class, p, seed))
        order = np.argsort(ds.labels, kind="stable")
        for i in order:
            f.write(struct.pack("<B", int(ds.labels[i])))
            f.write(ds.data[i, 0].astype("<f4").tobytes())
            f.write(ds.data[i, 1].astype("<f4").tobytes())


def load_dataset(path) -> LabeledDataset:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != DATASET_MAGIC:
        raise FormatError("not a dataset file (bad magic)")
    version, n_classes, per_class, p, seed = struct.unpack_from("<HHIIQ", blob, 4)
    if version != DATASET_VERSION:
        raise FormatError(f"unsupported dataset version {version}")
    n = n_classes * per_class
    frame_bytes = 1 + 2 * p * 4
    expected = 4 + struct.calcsize("<HHIIQ") + n * frame_bytes
    if len(blob) != expected:
        raise FormatError(f"dataset file length {len(blob)} != expected {expected}")
    data = np.empty((n, 2, p), dtype=np.float32)
    labels = np.empty(n, dtype=np.uint8)
    off = 4 + struct.calcsize("<HHIIQ")
    for i in range(n):
        labels[i] = blob[off]
        off += 1
        flat = np.frombuffer(blob, dtype="<f4", count=2 * p, offset=off)
        data[i] = flat.reshape(2, p)
        off += 2 * p * 4
    return LabeledDataset(data, labels, {"seed": seed, "count_per_class": per_class})
