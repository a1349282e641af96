"""Training objectives and evaluation metrics, as plain numpy functions.

The time-domain term is scale-invariant SNR against the projection of the
estimate onto the reference (no mean removal).  Spectral terms operate on
power-law compressed spectra, ``|S|^c * S / |S|`` with c = 0.3, split into
magnitude, real and imaginary parts.  Losses return python floats so they
can be logged or combined without dtype surprises.
"""

import numpy as np

from .errors import DegenerateInputError, InvalidInputError

_SNR_CAP_DB = 100.0


def _as_pair(est, ref):
    est = np.asarray(est, dtype=np.float64).ravel()
    ref = np.asarray(ref, dtype=np.float64).ravel()
    if est.shape != ref.shape:
        raise InvalidInputError(f"shape mismatch: {est.shape} vs {ref.shape}")
    if est.size == 0:
        raise InvalidInputError("empty signals")
    return est, ref


def si_snr(est, ref) -> float:
    """Scale-invariant SNR in dB, capped to +-100 dB.

    The target is ``(<est, ref> / ||ref||^2) ref``; whatever of the estimate
    lies outside that line counts as error.  Invariant to rescaling of the
    estimate by any nonzero factor.
    """
    est, ref = _as_pair(est, ref)
    ref_pow = float(np.dot(ref, ref))
    if ref_pow == 0.0:
        raise DegenerateInputError("reference signal is all zeros")
    target = (float(np.dot(est, ref)) / ref_pow) * ref
    err = est - target
    num = float(np.dot(target, target))
    den = float(np.dot(err, err))
    if num == 0.0:
        return -_SNR_CAP_DB
    if den == 0.0:
        return _SNR_CAP_DB
    return float(np.clip(10.0 * np.log10(num / den), -_SNR_CAP_DB, _SNR_CAP_DB))


def sisnr_loss(est, ref) -> float:
    """Negative scale-invariant SNR (dB); lower is better, floor -100."""
    return -si_snr(est, ref)


def _compressed(spec, power, floor):
    if floor <= 0:
        raise InvalidInputError("floor must be positive")
    mag = np.maximum(np.abs(spec), floor)
    return mag, mag ** power


def mag_loss(est_spec, ref_spec, power: float = 0.3,
                        floor: float = 1e-12) -> float:
    """MSE between power-law compressed magnitude spectra."""
    est_spec = np.asarray(est_spec)
    ref_spec = np.asarray(ref_spec)
    if est_spec.shape != ref_spec.shape:
        raise InvalidInputError(f"shape mismatch: {est_spec.shape} vs {ref_spec.shape}")
    _, est_c = _compressed(est_spec, power, floor)
    _, ref_c = _compressed(ref_spec, power, floor)
    return float(np.mean((est_c - ref_c) ** 2))


def _part_compressed_loss(est_spec, ref_spec, part, power, floor):
    est_spec = np.asarray(est_spec)
    ref_spec = np.asarray(ref_spec)
    if est_spec.shape != ref_spec.shape:
        raise InvalidInputError(f"shape mismatch: {est_spec.shape} vs {ref_spec.shape}")
    est_mag, _ = _compressed(est_spec, power, floor)
    ref_mag, _ = _compressed(ref_spec, power, floor)
    # |S|^c * S/|S| has real part Re(S) / |S|^(1-c), likewise for imaginary
    est_p = part(est_spec) / est_mag ** (1.0 - power)
    ref_p = part(ref_spec) / ref_mag ** (1.0 - power)
    return float(np.mean((est_p - ref_p) ** 2))


def real_loss(est_spec, ref_spec, power: float = 0.3,
                         floor: float = 1e-12) -> float:
    """MSE between real parts of power-law compressed complex spectra."""
    return _part_compressed_loss(est_spec, ref_spec, np.real, power, floor)


def imag_loss(est_spec, ref_spec, power: float = 0.3,
                         floor: float = 1e-12) -> float:
    """MSE between imaginary parts of power-law compressed complex spectra."""
    return _part_compressed_loss(est_spec, ref_spec, np.imag, power, floor)


def hybrid_loss(est_wave, ref_wave, est_spec, ref_spec,
                alpha: float = 0.01, beta: float = 0.3) -> float:
    """Weighted blend of the time and compressed-spectrum terms:

        alpha * sisnr_loss + (1 - beta) * magnitude + beta * (real + imag)
    """
    return (alpha * sisnr_loss(est_wave, ref_wave)
            + (1.0 - beta) * mag_loss(est_spec, ref_spec)
            + beta * (real_loss(est_spec, ref_spec)
                      + imag_loss(est_spec, ref_spec)))


def snr(est, ref) -> float:
    """Plain SNR in dB of ``ref`` against the residual ``est - ref``."""
    est, ref = _as_pair(est, ref)
    ref_pow = float(np.dot(ref, ref))
    if ref_pow == 0.0:
        raise DegenerateInputError("reference signal is all zeros")
    err = est - ref
    den = float(np.dot(err, err))
    if den == 0.0:
        return _SNR_CAP_DB
    return float(np.clip(10.0 * np.log10(ref_pow / den), -_SNR_CAP_DB, _SNR_CAP_DB))
