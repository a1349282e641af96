"""Band merging and splitting through an ERB-spaced filterbank.

The 257-bin half spectrum is compressed to 129 bands: the lowest 65 bins pass
through untouched and the remaining 192 bins are pooled into 64 bands whose
centers are uniformly spaced on the ERB-rate scale between the first high bin
and Nyquist.  Each high bin belongs to exactly one band (the indicator columns
form a partition of unity), merging averages the member bins, and splitting
copies each band value back to its member bins.  This makes merge(split(v))
the exact identity on band space and split(merge(x)) exact on any spectrum
that is constant within each band, and both directions map constants to
constants and preserve nonnegativity.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

N_BINS = 257
N_LOW = 65
N_HIGH = N_BINS - N_LOW
N_ERB = 64
N_BANDS = N_LOW + N_ERB


def hz_to_erb_rate(freq_hz):
    """ERB-rate scale value for a frequency in Hz."""
    return 21.4 * np.log10(1.0 + 0.00437 * np.asarray(freq_hz, dtype=np.float64))


@dataclass(frozen=True)
class ErbFilterbank:
    merge_weights: np.ndarray   # [64, 192], rows sum to 1 (in-band averaging)
    split_weights: np.ndarray   # [192, 64], rows one-hot (band broadcast)
    band_of_bin: np.ndarray     # [192] ERB band index of each high bin
    center_erb: np.ndarray      # [64] band centers on the ERB-rate scale
    n_low: int = N_LOW
    n_bins: int = N_BINS
    n_bands: int = N_BANDS


def make_erb_filterbank(sample_rate: int = 16000, fft_size: int = 512) -> ErbFilterbank:
    """Build the 64-band ERB pooling for the high 192 bins.

    Band edges are uniform on the ERB-rate scale from the frequency of bin 65
    up to Nyquist; a bin joins the band whose edge interval contains it, so
    bin 65 lands in band 0 and the Nyquist bin in band 63.
    """
    bin_hz = np.arange(N_BINS) * sample_rate / fft_size
    erb = hz_to_erb_rate(bin_hz[N_LOW:])
    edges = np.linspace(erb[0], hz_to_erb_rate(sample_rate / 2), N_ERB + 1)
    band_of_bin = np.clip(np.digitize(erb, edges) - 1, 0, N_ERB - 1)
    counts = np.bincount(band_of_bin, minlength=N_ERB)
    if np.any(counts == 0):
        raise InvalidInputError("ERB layout produced an empty band")

    merge = np.zeros((N_ERB, N_HIGH))
    merge[band_of_bin, np.arange(N_HIGH)] = 1.0 / counts[band_of_bin]
    split = np.zeros((N_HIGH, N_ERB))
    split[np.arange(N_HIGH), band_of_bin] = 1.0
    centers = 0.5 * (edges[:-1] + edges[1:])
    return ErbFilterbank(merge_weights=merge, split_weights=split,
                         band_of_bin=band_of_bin, center_erb=centers)


def band_merge(x: np.ndarray, fb: ErbFilterbank) -> np.ndarray:
    """Compress the last axis from 257 bins to 129 bands."""
    x = np.asarray(x)
    if x.shape[-1] != fb.n_bins:
        raise InvalidInputError(f"expected {fb.n_bins} bins on the last axis, got {x.shape[-1]}")
    low = x[..., :fb.n_low]
    high = x[..., fb.n_low:] @ fb.merge_weights.T
    return np.concatenate([low, high], axis=-1)


def band_split(x: np.ndarray, fb: ErbFilterbank) -> np.ndarray:
    """Expand the last axis from 129 bands back to 257 bins."""
    x = np.asarray(x)
    if x.shape[-1] != fb.n_bands:
        raise InvalidInputError(f"expected {fb.n_bands} bands on the last axis, got {x.shape[-1]}")
    low = x[..., :fb.n_low]
    high = x[..., fb.n_low:] @ fb.split_weights.T
    return np.concatenate([low, high], axis=-1)
