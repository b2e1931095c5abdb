"""Reconstruction quality metrics: PSNR and multi-scale SSIM.

PSNR is capped at 100 dB so perfect reconstructions stay finite in
reports.  MS-SSIM uses the canonical 11x11 Gaussian window (sigma 1.5)
and 5-scale weights; on small images the scale count drops to the
largest feasible and the remaining weights are renormalized to sum 1.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, InvalidShapeError

PSNR_CAP_DB = 100.0
_C1 = 0.01**2
_C2 = 0.03**2
_WIN = 11
_SIGMA = 1.5
_WEIGHTS = np.array([0.0448, 0.2856, 0.3001, 0.2363, 0.1333], dtype=np.float64)


def psnr(a, b):
    """10 log10(1 / mse) with peak 1.0, in dB; equal frames hit the cap."""
    if a.data.shape != b.data.shape:
        raise InvalidShapeError(f"psnr: shapes {a.data.shape} and {b.data.shape} differ")
    d = a.data.astype(np.float64) - b.data.astype(np.float64)
    mse = float((d * d).mean())
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * math.log10(1.0 / mse), PSNR_CAP_DB)


def _window_taps():
    r = _WIN // 2
    x = np.arange(-r, r + 1, dtype=np.float64)
    taps = np.exp(-(x * x) / (2.0 * _SIGMA * _SIGMA))
    return taps / taps.sum()


_TAPS = _window_taps()


def _filter_valid(img, taps):
    # separable valid-mode filtering of a 2-d image
    k = taps.size
    h, w = img.shape
    tmp = sum(taps[i] * img[i : i + h - k + 1, :] for i in range(k))
    return sum(taps[i] * tmp[:, i : i + w - k + 1] for i in range(k))


def _ssim_maps(a, b):
    """Mean SSIM and contrast-structure term over valid 11x11 windows."""
    mu1 = _filter_valid(a, _TAPS)
    mu2 = _filter_valid(b, _TAPS)
    s11 = _filter_valid(a * a, _TAPS) - mu1 * mu1
    s22 = _filter_valid(b * b, _TAPS) - mu2 * mu2
    s12 = _filter_valid(a * b, _TAPS) - mu1 * mu2
    cs_map = (2.0 * s12 + _C2) / (s11 + s22 + _C2)
    lum = (2.0 * mu1 * mu2 + _C1) / (mu1 * mu1 + mu2 * mu2 + _C1)
    return float((lum * cs_map).mean()), float(cs_map.mean())


def _halve(img):
    # 2x2 average pooling, truncating an odd trailing row/column
    h, w = img.shape
    img = img[: h - h % 2, : w - w % 2]
    return img.reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))


def scale_count(height, width):
    """Largest m <= 5 with min side still >= the window at scale m."""
    m = 0
    side = min(height, width)
    while m < 5 and side >= _WIN:
        m += 1
        side //= 2
    return m


def ms_ssim(a, b):
    """Multi-scale SSIM averaged over channels; 1.0 for identical frames."""
    if a.data.shape != b.data.shape:
        raise InvalidShapeError(f"ms_ssim: shapes {a.data.shape} and {b.data.shape} differ")
    h, w = a.data.shape[1], a.data.shape[2]
    m = scale_count(h, w)
    if m == 0:
        raise ContractError(f"ms_ssim needs min side >= {_WIN}, got {h}x{w}")
    weights = _WEIGHTS[:m] / _WEIGHTS[:m].sum()
    vals = []
    for c in range(3):
        x = a.data[c].astype(np.float64)
        y = b.data[c].astype(np.float64)
        total = 1.0
        for j in range(m):
            ssim_j, cs_j = _ssim_maps(x, y)
            if j < m - 1:
                total *= max(cs_j, 0.0) ** weights[j]
                x, y = _halve(x), _halve(y)
            else:
                total *= max(ssim_j, 0.0) ** weights[j]
        vals.append(total)
    return float(np.mean(vals))


@dataclass
class MetricReport:
    """Per-frame metric rows plus clip-level means."""

    psnr_db: list
    ms_ssim: list

    def __post_init__(self):
        if len(self.psnr_db) != len(self.ms_ssim):
            raise ContractError("per-frame metric lists must have equal length")
        if not self.psnr_db:
            raise ContractError("a report needs at least one frame")

    @property
    def mean_psnr(self):
        return float(np.mean(self.psnr_db))

    @property
    def mean_ms_ssim(self):
        return float(np.mean(self.ms_ssim))


def compare_clips(a, b):
    """Per-frame metrics of two equal-length, equal-size clips."""
    if len(a) != len(b):
        raise InvalidShapeError(f"clip lengths differ: {len(a)} vs {len(b)}")
    rows_psnr = [psnr(fa, fb) for fa, fb in zip(a, b)]
    rows_ssim = [ms_ssim(fa, fb) for fa, fb in zip(a, b)]
    return MetricReport(rows_psnr, rows_ssim)


def write_report_csv(report, path):
    """CSV rows frame_index,psnr_db,ms_ssim with a final mean row."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frame_index", "psnr_db", "ms_ssim"])
        for i, (p, s) in enumerate(zip(report.psnr_db, report.ms_ssim)):
            w.writerow([i, f"{p:.12f}", f"{s:.12f}"])
        w.writerow(["mean", f"{report.mean_psnr:.12f}", f"{report.mean_ms_ssim:.12f}"])


def read_report_csv(path):
    """Inverse of write_report_csv; the mean row is checked, not stored."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["frame_index", "psnr_db", "ms_ssim"]:
        raise ContractError(f"{path} is not a metric report")
    body, tail = rows[1:-1], rows[-1]
    if not body or tail[0] != "mean":
        raise ContractError(f"{path} is missing the mean row")
    report = MetricReport([float(r[1]) for r in body], [float(r[2]) for r in body])
    if abs(report.mean_psnr - float(tail[1])) > 1e-9:
        raise ContractError(f"{path} mean row disagrees with its body")
    return report
