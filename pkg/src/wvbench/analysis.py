"""Reconstruction pipeline: from binned counts back to weak values.

The chain mirrors how actual beamline data would be treated:

1. ``extract_visibility`` fits the rotator-off fringe and returns the
   interference contrast eta with its standard error.
2. ``correct_intensity`` removes the incoherent isolated-path contribution
   from the modulated channel and divides by eta, recovering the
   first-order coherent signal.
3. ``fit_sinusoid`` performs a weighted linear least-squares fit on the
   basis {1, sin(theta), cos(theta)} with theta = 2*pi*omega*t + delta;
   the drive frequency is known, so the fit is exactly linear and the
   parameter covariance is available in closed form.
4. ``reconstruct_weak_value`` converts fitted (offset, amplitude, phase)
   into Re/Im of the weak value: |w| = amplitude/(alpha*offset) and
   arg(w) = phase - phase(chi_ref).  The eta division already happened in
   step 2; eta enters here only through the systematic error budget.
5. ``verify_commutator`` assembles both sides of the sin(chi) identity
   from reconstructed imaginary parts and measured post-selection
   probabilities, with first-order error propagation throughout.

``analyze_campaign`` wires the steps together for a full campaign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .signal_gen import CHANNELS, BinnedCounts

__all__ = [
    "DegenerateFit",
    "VisibilityZero",
    "MissingReference",
    "ChannelMismatch",
    "TimeSeries",
    "SinusoidFit",
    "VisibilityEstimate",
    "WeakValueEstimate",
    "CommutatorRow",
    "CommutatorReport",
    "CampaignAnalysis",
    "fit_sinusoid",
    "channel_scan",
    "extract_visibility",
    "correct_intensity",
    "reconstruct_weak_value",
    "propagate_errors",
    "postselection_table",
    "verify_commutator",
    "analyze_campaign",
]


class DegenerateFit(ValueError):
    """Fit input cannot constrain the model (rank-deficient or empty)."""


class VisibilityZero(ValueError):
    """Contrast too small to divide the incoherence correction by."""


class MissingReference(LookupError):
    """The phase-reference setting is absent from (or excluded in) the fits."""


class ChannelMismatch(ValueError):
    """Required channels or settings are missing or misaligned."""


@dataclass(frozen=True)
class TimeSeries:
    """Per-bin intensity values with one-sigma uncertainties."""

    bin_centers: np.ndarray
    values: np.ndarray
    sigmas: np.ndarray

    def __post_init__(self) -> None:
        centers = np.asarray(self.bin_centers, dtype=float)
        values = np.asarray(self.values, dtype=float)
        sigmas = np.asarray(self.sigmas, dtype=float)
        if not (centers.shape == values.shape == sigmas.shape) or centers.ndim != 1:
            raise ValueError("bin_centers, values, sigmas must be matching 1-d arrays")
        if np.any(sigmas < 0) or not np.all(np.isfinite(sigmas)):
            raise ValueError("sigmas must be finite and non-negative")
        for name, arr in (("bin_centers", centers), ("values", values), ("sigmas", sigmas)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class SinusoidFit:
    """Result of the linear sinusoid fit.

    ``covariance`` is the 3x3 matrix for (offset, amplitude, phase), in
    that order, transformed from the linear-coefficient covariance.
    """

    offset: float
    amplitude: float
    phase: float
    covariance: np.ndarray
    reduced_chi2: float

    def __post_init__(self) -> None:
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (3, 3):
            raise ValueError("covariance must be 3x3")
        cov.setflags(write=False)
        object.__setattr__(self, "covariance", cov)


@dataclass(frozen=True)
class VisibilityEstimate:
    """Fringe contrast with standard error; ``clamped`` marks eta cut at 1."""

    eta: float
    sigma_eta: float
    clamped: bool = False


@dataclass(frozen=True)
class WeakValueEstimate:
    """Reconstructed weak value at one phase setting."""

    chi: float
    re: float
    im: float
    sigma_re: float
    sigma_im: float
    postselection_prob: float
    excluded: bool


@dataclass(frozen=True)
class CommutatorRow:
    chi: float
    lhs: float
    sigma_lhs: float
    rhs: float
    sigma_rhs: float
    theory: float
    excluded: bool


@dataclass(frozen=True)
class CommutatorReport:
    """Both sides of the identity per setting plus residual summaries.

    Summaries cover non-excluded rows only.
    """

    rows: tuple[CommutatorRow, ...]
    rms_residual: float
    max_abs_residual: float
    n_excluded: int


@dataclass(frozen=True)
class CampaignAnalysis:
    """Everything the pipeline produced for one campaign."""

    visibility: VisibilityEstimate
    corrected: tuple[tuple[float, TimeSeries], ...]
    fits: tuple[tuple[float, SinusoidFit], ...]
    weak_values: tuple[WeakValueEstimate, ...]
    postselection_x: tuple[tuple[float, float, float], ...]
    postselection_y: tuple[tuple[float, float, float], ...]
    report: CommutatorReport


def _eta_value(eta) -> tuple[float, float]:
    """(eta, sigma_eta) from a VisibilityEstimate or a bare float."""
    if isinstance(eta, VisibilityEstimate):
        return float(eta.eta), float(eta.sigma_eta)
    return float(eta), 0.0


def _weighted_linear_fit(
    design: np.ndarray, y: np.ndarray, var: np.ndarray
) -> tuple[np.ndarray, np.ndarray, float]:
    """Solve a weighted least-squares problem; return (beta, cov, red_chi2)."""
    w = 1.0 / var
    xtw = design.T * w
    normal = xtw @ design
    if np.linalg.matrix_rank(normal) < design.shape[1]:
        raise DegenerateFit("design matrix is rank-deficient")
    cov = np.linalg.inv(normal)
    beta = cov @ (xtw @ y)
    resid = y - design @ beta
    chi2 = float(np.sum(w * resid**2))
    dof = y.size - design.shape[1]
    red = chi2 / dof if dof > 0 else math.nan
    return beta, cov, red


def _series_from(data) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(t, y, var) from BinnedCounts (Poisson weights) or TimeSeries."""
    if isinstance(data, BinnedCounts):
        if float(np.sum(data.counts)) == 0.0:
            raise DegenerateFit("all counts are zero")
        y, sigma = data.intensity_estimate()
        return data.bin_centers, y, sigma**2
    if isinstance(data, TimeSeries):
        if np.all(data.sigmas == 0.0):
            var = np.ones_like(data.values)
        elif np.any(data.sigmas == 0.0):
            raise ValueError("sigmas mix zero and non-zero entries")
        else:
            var = data.sigmas**2
        return data.bin_centers, data.values, var
    raise TypeError(f"cannot fit {type(data).__name__}")


def fit_sinusoid(data, omega: float, delta: float = 0.0) -> SinusoidFit:
    """Weighted linear fit of offset + a*sin(theta) + b*cos(theta).

    theta = 2*pi*omega*t + delta with omega and delta known.  Amplitude and
    phase come from (a, b) via amplitude = hypot(a, b) and
    phase = atan2(b, a); with the forward model's modulation
    Im(w e^{i theta}) this makes the fitted phase equal to arg(w), and
    noiseless data at chi = 0 fits to phase 0.

    Counts data get Poisson weights max(counts, 1).  Raises DegenerateFit
    for fewer than 4 bins, all-zero counts, or a rank-deficient design.
    """
    t, y, var = _series_from(data)
    if y.size < 4:
        raise DegenerateFit(f"need at least 4 bins, got {y.size}")
    theta = 2.0 * np.pi * omega * t + delta
    design = np.column_stack([np.ones_like(theta), np.sin(theta), np.cos(theta)])
    beta, cov, red = _weighted_linear_fit(design, y, var)

    offset, a, b = beta
    amplitude = math.hypot(a, b)
    if amplitude > 0.0:
        phase = math.atan2(b, a)
        jac = np.array(
            [
                [1.0, 0.0, 0.0],
                [0.0, a / amplitude, b / amplitude],
                [0.0, -b / amplitude**2, a / amplitude**2],
            ]
        )
    else:
        phase = 0.0
        jac = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]])
    cov_p = jac @ cov @ jac.T
    cov_p = 0.5 * (cov_p + cov_p.T)
    return SinusoidFit(
        offset=float(offset),
        amplitude=float(amplitude),
        phase=float(phase),
        covariance=cov_p,
        reduced_chi2=float(red),
    )


def channel_scan(
    datasets: list[BinnedCounts], channel: str
) -> tuple[tuple[float, float, float], ...]:
    """Per-chi (chi, mean intensity, sigma) of one channel, sorted by chi."""
    rows = []
    for data in datasets:
        if data.channel != channel:
            continue
        n = data.counts.size
        total = float(np.sum(data.counts))
        value = total / (n * data.exposure)
        sigma = math.sqrt(float(np.sum(np.maximum(data.counts, 1.0)))) / (n * data.exposure)
        rows.append((data.chi, value, sigma))
    rows.sort(key=lambda r: r[0])
    return tuple(rows)


def extract_visibility(empty_scan) -> VisibilityEstimate:
    """Contrast of the rotator-off fringe from a (chi, value, sigma) scan.

    Fits value(chi) = c + a*cos(chi) + b*sin(chi) by weighted linear least
    squares (free overall scale and fringe phase) and returns
    eta = hypot(a, b)/c with a first-order standard error.  An eta estimate
    above 1 is clamped to 1 and flagged.
    """
    rows = list(empty_scan)
    chis = np.array([r[0] for r in rows], dtype=float)
    values = np.array([r[1] for r in rows], dtype=float)
    sigmas = np.array([r[2] for r in rows], dtype=float)
    if np.unique(chis).size < 3:
        raise DegenerateFit("need at least 3 distinct chi settings")
    if np.all(sigmas == 0.0):
        var = np.ones_like(values)
    elif np.any(sigmas == 0.0):
        raise ValueError("sigmas mix zero and non-zero entries")
    else:
        var = sigmas**2
    design = np.column_stack([np.ones_like(chis), np.cos(chis), np.sin(chis)])
    beta, cov, _ = _weighted_linear_fit(design, values, var)
    c, a, b = beta
    if c <= 0.0:
        raise DegenerateFit("fringe mean is not positive")
    r = math.hypot(a, b)
    eta_raw = r / c
    if r > 0.0:
        grad = np.array([-r / c**2, a / (c * r), b / (c * r)])
        sigma_eta = math.sqrt(float(grad @ cov @ grad))
    else:
        sigma_eta = math.sqrt(float(cov[1, 1] + cov[2, 2])) / c
    if eta_raw > 1.0:
        return VisibilityEstimate(eta=1.0, sigma_eta=sigma_eta, clamped=True)
    return VisibilityEstimate(eta=float(eta_raw), sigma_eta=float(sigma_eta))


def _check_aligned(a: BinnedCounts, b: BinnedCounts) -> None:
    if a.bin_centers.shape != b.bin_centers.shape or not np.allclose(
        a.bin_centers, b.bin_centers, rtol=0.0, atol=1e-15
    ):
        raise ChannelMismatch(f"bins of {a.channel} and {b.channel} are not aligned")
    if abs(a.chi - b.chi) > 1e-12:
        raise ChannelMismatch(
            f"settings differ: {a.channel} at chi={a.chi!r}, {b.channel} at chi={b.chi!r}"
        )


def correct_intensity(
    measured: BinnedCounts,
    path1: BinnedCounts,
    path2: BinnedCounts,
    eta,
    eta_min: float = 0.05,
) -> TimeSeries:
    """Undo the finite-contrast mixing of the modulated channel.

    corrected(t) = (measured(t) - (1 - eta) * (path1(t) + path2(t))) / eta
    on the intensity scale, with per-bin uncertainties combined in
    quadrature.  Raises VisibilityZero when eta < eta_min and
    ChannelMismatch when the three histograms are not bin-aligned.
    """
    eta_val, _ = _eta_value(eta)
    if eta_val < eta_min:
        raise VisibilityZero(f"eta={eta_val!r} below minimum {eta_min!r}")
    _check_aligned(measured, path1)
    _check_aligned(measured, path2)
    y_m, s_m = measured.intensity_estimate()
    y_1, s_1 = path1.intensity_estimate()
    y_2, s_2 = path2.intensity_estimate()
    values = (y_m - (1.0 - eta_val) * (y_1 + y_2)) / eta_val
    sigmas = np.sqrt(s_m**2 + (1.0 - eta_val) ** 2 * (s_1**2 + s_2**2)) / eta_val
    return TimeSeries(bin_centers=measured.bin_centers, values=values, sigmas=sigmas)


def _wrap_angle(x: float) -> float:
    return math.atan2(math.sin(x), math.cos(x))


def _wv_point(
    fit: SinusoidFit,
    alpha: float,
    dphi: float,
    ref_phase_var: float,
    sys_rel: float,
) -> tuple[float, float, float, float]:
    """(re, im, sigma_re, sigma_im) for one corrected-channel fit."""
    c0, amp = fit.offset, fit.amplitude
    r = amp / (alpha * c0)
    re = r * math.cos(dphi)
    im = r * math.sin(dphi)
    # gradients wrt (offset, amplitude, phase); safe at amp == 0
    g_re = np.array([-re / c0, math.cos(dphi) / (alpha * c0), -im])
    g_im = np.array([-im / c0, math.sin(dphi) / (alpha * c0), re])
    var_re = float(g_re @ fit.covariance @ g_re) + im**2 * ref_phase_var
    var_im = float(g_im @ fit.covariance @ g_im) + re**2 * ref_phase_var
    sigma_re = math.sqrt(var_re + (re * sys_rel) ** 2)
    sigma_im = math.sqrt(var_im + (im * sys_rel) ** 2)
    return re, im, sigma_re, sigma_im


def propagate_errors(
    fit: SinusoidFit,
    eta_est,
    alpha: float,
    *,
    alpha_sys_rel: float = 0.02,
    phase_offset: float = 0.0,
    phase_reference_variance: float = 0.0,
) -> tuple[float, float]:
    """First-order (sigma_re, sigma_im) for a weak value from one fit.

    Statistical part: delta method through |w| = amplitude/(alpha*offset)
    and the phase rotation by ``phase_offset`` (fit covariance plus the
    phase-reference variance).  Systematic part: the relative alpha
    uncertainty and the relative contrast uncertainty enter the modulus as
    a common scale factor.  The two parts add in quadrature.
    """
    eta_val, eta_sigma = _eta_value(eta_est)
    if eta_val <= 0.0:
        raise VisibilityZero(f"eta={eta_val!r} must be positive")
    sys_rel = math.hypot(alpha_sys_rel, eta_sigma / eta_val)
    _, _, sigma_re, sigma_im = _wv_point(
        fit, alpha, phase_offset, phase_reference_variance, sys_rel
    )
    return sigma_re, sigma_im


def reconstruct_weak_value(
    fits,
    eta,
    alpha: float,
    *,
    reference_chi: float = 0.0,
    p_min: float = 0.01,
    alpha_sys_rel: float = 0.02,
) -> tuple[WeakValueEstimate, ...]:
    """Weak values from per-chi fits of the corrected modulated channel.

    ``fits`` is an iterable of (chi, SinusoidFit).  The modulus is
    amplitude/(alpha*offset); the phase is referenced to the fit at
    ``reference_chi`` (whose own estimate is pinned to Im = 0 with no
    reference variance).  The post-selection probability of a setting is
    2*offset on this intensity scale; settings below ``p_min`` are
    reported with NaN values and ``excluded=True``.

    Raises MissingReference when ``reference_chi`` is absent or excluded.
    The contrast was already divided out upstream; ``eta`` contributes its
    relative uncertainty to the systematic error budget only.
    """
    if alpha <= 0.0 or not math.isfinite(alpha):
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    items = sorted(((float(chi), fit) for chi, fit in fits), key=lambda kv: kv[0])
    if not items:
        raise MissingReference("no fits supplied")

    eta_val, eta_sigma = _eta_value(eta)
    if eta_val <= 0.0:
        raise VisibilityZero(f"eta={eta_val!r} must be positive")
    sys_rel = math.hypot(alpha_sys_rel, eta_sigma / eta_val)

    def prob(fit: SinusoidFit) -> float:
        return 2.0 * fit.offset

    ref = None
    for chi, fit in items:
        if abs(chi - reference_chi) <= 1e-9:
            ref = (chi, fit)
            break
    if ref is None:
        raise MissingReference(f"no fit at reference chi {reference_chi!r}")
    if prob(ref[1]) < p_min:
        raise MissingReference(
            f"reference setting chi={ref[0]!r} has post-selection probability "
            f"{prob(ref[1]):.3g} below p_min={p_min!r}"
        )
    ref_phase = ref[1].phase
    ref_phase_var = float(ref[1].covariance[2, 2])

    out = []
    for chi, fit in items:
        p = prob(fit)
        if p < p_min:
            out.append(
                WeakValueEstimate(
                    chi=chi,
                    re=math.nan,
                    im=math.nan,
                    sigma_re=math.nan,
                    sigma_im=math.nan,
                    postselection_prob=max(p, 0.0),
                    excluded=True,
                )
            )
            continue
        is_ref = chi == ref[0]
        dphi = 0.0 if is_ref else _wrap_angle(fit.phase - ref_phase)
        re, im, sigma_re, sigma_im = _wv_point(
            fit, alpha, dphi, 0.0 if is_ref else ref_phase_var, sys_rel
        )
        out.append(
            WeakValueEstimate(
                chi=chi,
                re=re,
                im=im,
                sigma_re=sigma_re,
                sigma_im=sigma_im,
                postselection_prob=min(p, 1.0),
                excluded=False,
            )
        )
    return tuple(out)


def postselection_table(
    scan, eta, eta_min: float = 0.05
) -> tuple[tuple[float, float, float], ...]:
    """Per-chi post-selection probabilities from a rotator-off channel scan.

    The raw fringe value v = (1 + eta*cos(...))/2 underestimates the swing
    of the true probability (1 + cos(...))/2 by the contrast, so each
    setting is unfolded with the global eta: p = (1 + (2v - 1)/eta)/2.
    Returns (chi, p, sigma_p) rows; the eta uncertainty is propagated.
    """
    eta_val, eta_sigma = _eta_value(eta)
    if eta_val < eta_min:
        raise VisibilityZero(f"eta={eta_val!r} below minimum {eta_min!r}")
    rows = []
    for chi, value, sigma in scan:
        p = 0.5 * (1.0 + (2.0 * value - 1.0) / eta_val)
        dp_dv = 1.0 / eta_val
        dp_deta = -(2.0 * value - 1.0) / (2.0 * eta_val**2)
        sigma_p = math.hypot(dp_dv * sigma, dp_deta * eta_sigma)
        rows.append((float(chi), float(p), float(sigma_p)))
    return tuple(rows)


def verify_commutator(
    weak_values, empty_x, empty_y
) -> CommutatorReport:
    """Assemble the sin(chi) identity from measured pieces.

    Per setting: lhs = -4 * p_x * Im(w) with p_x from the empty_x channel,
    rhs = 2 * p_y - 1 from the empty_y channel, theory = sin(chi).
    ``empty_x`` and ``empty_y`` are (chi, p, sigma_p) tables as produced by
    ``postselection_table``.  Residual summaries skip excluded settings.

    Raises ChannelMismatch when the three chi sets differ.
    """
    wv = {round(e.chi, 12): e for e in weak_values}
    px = {round(c, 12): (p, s) for c, p, s in empty_x}
    py = {round(c, 12): (p, s) for c, p, s in empty_y}
    if set(wv) != set(px) or set(wv) != set(py):
        raise ChannelMismatch(
            "weak values and empty-channel scans cover different chi settings"
        )

    rows = []
    residuals = []
    n_excluded = 0
    for key in sorted(wv):
        est = wv[key]
        p_x, s_px = px[key]
        p_y, s_py = py[key]
        rhs = 2.0 * p_y - 1.0
        sigma_rhs = 2.0 * s_py
        theory = math.sin(est.chi)
        if est.excluded:
            n_excluded += 1
            rows.append(
                CommutatorRow(
                    chi=est.chi,
                    lhs=math.nan,
                    sigma_lhs=math.nan,
                    rhs=rhs,
                    sigma_rhs=sigma_rhs,
                    theory=theory,
                    excluded=True,
                )
            )
            continue
        lhs = -4.0 * p_x * est.im
        sigma_lhs = math.hypot(4.0 * est.im * s_px, 4.0 * p_x * est.sigma_im)
        rows.append(
            CommutatorRow(
                chi=est.chi,
                lhs=lhs,
                sigma_lhs=sigma_lhs,
                rhs=rhs,
                sigma_rhs=sigma_rhs,
                theory=theory,
                excluded=False,
            )
        )
        residuals.append(lhs - rhs)

    if residuals:
        arr = np.asarray(residuals)
        rms = float(np.sqrt(np.mean(arr**2)))
        max_abs = float(np.max(np.abs(arr)))
    else:
        rms = math.nan
        max_abs = math.nan
    return CommutatorReport(
        rows=tuple(rows),
        rms_residual=rms,
        max_abs_residual=max_abs,
        n_excluded=n_excluded,
    )


def analyze_campaign(
    datasets: list[BinnedCounts],
    *,
    alpha: float,
    omega: float,
    delta: float = 0.0,
    reference_chi: float = 0.0,
    p_min: float = 0.01,
    eta_min: float = 0.05,
    alpha_sys_rel: float = 0.02,
) -> CampaignAnalysis:
    """Run the full pipeline on one campaign's histograms.

    Requires the complete channel set (all five) for at least 3 chi
    settings; raises ChannelMismatch naming what is missing otherwise.
    """
    by_channel: dict[str, dict[float, BinnedCounts]] = {name: {} for name in CHANNELS}
    for data in datasets:
        by_channel[data.channel][data.chi] = data

    missing = [name for name in CHANNELS if not by_channel[name]]
    if missing:
        raise ChannelMismatch(f"campaign has no data for channels: {', '.join(missing)}")
    common = set.intersection(*(set(by_channel[name]) for name in CHANNELS))
    if len(common) < 3:
        raise ChannelMismatch(
            f"complete channel set available for only {len(common)} chi settings; need >= 3"
        )
    chis = sorted(common)
    complete = [d for d in datasets if d.chi in common]

    visibility = extract_visibility(channel_scan(complete, "empty_x"))

    corrected: list[tuple[float, TimeSeries]] = []
    fits: list[tuple[float, SinusoidFit]] = []
    for chi in chis:
        series = correct_intensity(
            by_channel["modulated"][chi],
            by_channel["path1_only"][chi],
            by_channel["path2_only"][chi],
            visibility,
            eta_min=eta_min,
        )
        corrected.append((chi, series))
        fits.append((chi, fit_sinusoid(series, omega, delta)))

    weak_values = reconstruct_weak_value(
        fits,
        visibility,
        alpha,
        reference_chi=reference_chi,
        p_min=p_min,
        alpha_sys_rel=alpha_sys_rel,
    )
    ps_x = postselection_table(channel_scan(complete, "empty_x"), visibility, eta_min)
    ps_y = postselection_table(channel_scan(complete, "empty_y"), visibility, eta_min)
    report = verify_commutator(weak_values, ps_x, ps_y)
    return CampaignAnalysis(
        visibility=visibility,
        corrected=tuple(corrected),
        fits=tuple(fits),
        weak_values=weak_values,
        postselection_x=ps_x,
        postselection_y=ps_y,
        report=report,
    )
