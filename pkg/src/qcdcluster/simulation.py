"""Bivariate process generators, outlier contamination and scenario presets.

Every generator runs its recursion from a zero state for ``burn_in`` steps
before keeping the last ``T`` values. All randomness flows through one
``numpy.random.Generator`` per series, so a given ``(spec, T, seed)`` always
reproduces the same array bit for bit.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError, SimulationError
from .series import Dataset, MTSeries, write_csv

__all__ = [
    "OUTLIER",
    "SCENARIOS",
    "InnovationSpec",
    "ProcessSpec",
    "OutlierSpec",
    "Scenario",
    "var1",
    "vma1",
    "varma11",
    "expar",
    "bilinear",
    "nar",
    "bekk",
    "white_noise",
    "draw_innovations",
    "simulate",
    "contaminate_mtc",
    "contaminate_mio",
    "build_scenario",
    "build_pool",
    "write_scenario",
]

OUTLIER = -1
PSD_TOL = 1e-10


@dataclass(frozen=True)
class InnovationSpec:
    """Innovation law: ``gaussian``, ``t`` (multivariate t) or ``chi2``.

    The t law has identity scale and shares one chi-square mixing draw across
    components. The chi2 law draws independent components via
    ``gamma(df/2, scale=2)``, which also covers fractional degrees of freedom.
    """

    law: str = "gaussian"
    df: Optional[float] = None

    def __post_init__(self):
        if self.law not in ("gaussian", "t", "chi2"):
            raise ConfigError(f"unknown innovation law {self.law!r}")
        if self.law != "gaussian" and not (self.df is not None and self.df > 0):
            raise ConfigError(f"{self.law} innovations need df > 0")

    @classmethod
    def parse(cls, text: str) -> "InnovationSpec":
        """Accepts ``gaussian``, ``t3`` / ``t<df>`` and ``chi2:<df>``."""
        text = text.strip().lower()
        if text == "gaussian":
            return cls()
        if text.startswith("chi2:"):
            return cls("chi2", float(text[5:]))
        if text.startswith("t"):
            try:
                return cls("t", float(text[1:]))
            except ValueError:
                pass
        raise ConfigError(f"cannot parse innovation law {text!r}")


def draw_innovations(law: InnovationSpec, rng, size: int, d: int = 2) -> np.ndarray:
    if law.law == "gaussian":
        return rng.standard_normal((size, d))
    if law.law == "t":
        z = rng.standard_normal((size, d))
        w = rng.chisquare(law.df, size)
        return z / np.sqrt(w / law.df)[:, None]
    return rng.gamma(law.df / 2.0, 2.0, (size, d))


@dataclass(frozen=True)
class ProcessSpec:
    """A process family with its coefficients.

    ``params`` holds coefficient matrices (``phi``, ``theta``, ``c``, ``a``,
    ``g``) as nested tuples; scalar families need none.
    """

    family: str
    params: dict = field(default_factory=dict)
    innovation: InnovationSpec = InnovationSpec()
    burn_in: int = 500
    d: int = 2

    FAMILIES = ("VAR1", "VMA1", "VARMA11", "EXPAR", "BL", "NAR", "BEKK", "WN")

    def __post_init__(self):
        if self.family not in self.FAMILIES:
            raise ConfigError(f"unknown process family {self.family!r}")
        if self.burn_in < 0:
            raise ConfigError("burn_in must be nonnegative")
        required = {"VAR1": ("phi",), "VMA1": ("theta",), "VARMA11": ("phi", "theta"), "BEKK": ("c", "a", "g")}
        for key in required.get(self.family, ()):
            if key not in self.params:
                raise ConfigError(f"{self.family} needs parameter {key!r}")
        if self.family in ("EXPAR", "BL", "NAR") and self.d != 2:
            raise ConfigError(f"{self.family} is defined for d=2 only")

    def matrix(self, key) -> np.ndarray:
        return np.array(self.params[key], dtype=float)

    def with_innovation(self, innovation: InnovationSpec) -> "ProcessSpec":
        return ProcessSpec(self.family, self.params, innovation, self.burn_in, self.d)


def _full(value, d=2):
    return tuple(tuple(float(value) for _ in range(d)) for _ in range(d))


def var1(phi=_full(0.2)) -> ProcessSpec:
    return ProcessSpec("VAR1", {"phi": phi})


def vma1(theta=((-0.4, -0.4), (-0.2, -0.2))) -> ProcessSpec:
    return ProcessSpec("VMA1", {"theta": theta})


def varma11(phi=_full(0.2), theta=((-0.4, -0.4), (-0.2, -0.2))) -> ProcessSpec:
    return ProcessSpec("VARMA11", {"phi": phi, "theta": theta})


def expar() -> ProcessSpec:
    return ProcessSpec("EXPAR")


def bilinear() -> ProcessSpec:
    return ProcessSpec("BL")


def nar() -> ProcessSpec:
    return ProcessSpec("NAR")


BEKK_C = ((0.1, 0.0), (0.1, 0.1))


def bekk(a, g, c=BEKK_C) -> ProcessSpec:
    return ProcessSpec("BEKK", {"c": c, "a": a, "g": g})


def white_noise() -> ProcessSpec:
    return ProcessSpec("WN")


def _run_linear(spec, eps):
    n, d = eps.shape
    phi = spec.matrix("phi") if "phi" in spec.params else np.zeros((d, d))
    theta = spec.matrix("theta") if "theta" in spec.params else np.zeros((d, d))
    drive = eps.copy()
    drive[1:] += eps[:-1] @ theta.T
    if not phi.any():
        return drive
    x = np.zeros_like(eps)
    prev = np.zeros(d)
    for t in range(n):
        prev = phi @ prev + drive[t]
        x[t] = prev
    return x


def _run_expar(eps):
    x = np.zeros_like(eps)
    x1 = x2 = 0.0
    for t, (e1, e2) in enumerate(eps.tolist()):
        damp = 10.0 * np.exp(-x1 * x1 - x2 * x2)
        x1, x2 = 0.3 - damp * x2 + e1, 0.3 - damp * x1 + e2
        x[t] = x1, x2
    return x


def _run_bilinear(eps):
    # the innovation appears twice in each component, as in the defining display
    x = np.zeros_like(eps)
    x1 = x2 = p1 = p2 = 0.0
    for t, (e1, e2) in enumerate(eps.tolist()):
        x1, x2 = (
            0.6 * x1 + 0.7 * x1 * p2 + e1 + e1,
            0.6 * x2 + 0.7 * x2 * p1 + e2 + e2,
        )
        p1, p2 = e1, e2
        x[t] = x1, x2
    return x


def _run_nar(eps):
    x = np.zeros_like(eps)
    x1 = x2 = 0.0
    for t, (e1, e2) in enumerate(eps.tolist()):
        x1, x2 = 0.7 * abs(x1) / (abs(x2) + 1.0) + e1, 0.7 * abs(x2) / (abs(x1) + 1.0) + e2
        x[t] = x1, x2
    return x


def _psd_sqrt(sigma, t):
    vals, vecs = np.linalg.eigh(sigma)
    if vals[0] < -PSD_TOL:
        raise SimulationError(f"conditional covariance not PSD at step {t} (eigenvalue {vals[0]:.3e})")
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T


def _run_bekk(spec, eps):
    c, a, g = spec.matrix("c"), spec.matrix("a"), spec.matrix("g")
    base = c.T @ c
    sigma = base.copy()
    prev = np.zeros(eps.shape[1])
    x = np.zeros_like(eps)
    for t in range(eps.shape[0]):
        shock = a.T @ prev
        sigma = base + np.outer(shock, shock) + g.T @ sigma @ g
        if not np.all(np.isfinite(sigma)):
            raise SimulationError(f"conditional covariance diverged at step {t}")
        prev = _psd_sqrt(sigma, t) @ eps[t]
        x[t] = prev
    return x


def _run(spec: ProcessSpec, eps: np.ndarray) -> np.ndarray:
    family = spec.family
    if family in ("VAR1", "VMA1", "VARMA11"):
        x = _run_linear(spec, eps)
    elif family == "EXPAR":
        x = _run_expar(eps)
    elif family == "BL":
        x = _run_bilinear(eps)
    elif family == "NAR":
        x = _run_nar(eps)
    elif family == "BEKK":
        x = _run_bekk(spec, eps)
    else:
        x = eps.copy()
    if not np.all(np.isfinite(x)):
        raise SimulationError(f"{family} recursion produced non-finite values")
    return x


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def simulate(spec: ProcessSpec, T: int, seed, series_id: str = "") -> MTSeries:
    """Simulate ``burn_in + T`` steps of ``spec`` and keep the last ``T``."""
    if T < 2:
        raise ConfigError(f"T must be at least 2, got {T}")
    eps = draw_innovations(spec.innovation, _rng(seed), spec.burn_in + T, spec.d)
    return MTSeries(_run(spec, eps)[spec.burn_in:], series_id)


@dataclass(frozen=True)
class OutlierSpec:
    """A transitory change (``MTC``) or an innovational outlier (``MIO``).

    ``t0`` is 1-based. ``w`` and ``eta`` define the MTC shock; ``law`` is the
    replacement innovation law of an MIO.
    """

    kind: str
    t0: int
    w: tuple = ()
    eta: float = 0.99
    law: Optional[InnovationSpec] = None

    def __post_init__(self):
        if self.kind not in ("MTC", "MIO"):
            raise ConfigError(f"unknown outlier kind {self.kind!r}")
        if self.t0 < 1:
            raise ConfigError(f"t0 must be at least 1, got {self.t0}")
        if self.kind == "MTC" and not 0 < self.eta < 1:
            raise ConfigError(f"eta must lie in (0, 1), got {self.eta}")
        if self.kind == "MIO" and self.law is None:
            raise ConfigError("MIO outliers need a replacement innovation law")


def contaminate_mtc(series: MTSeries, outlier: OutlierSpec, transitory: bool = False) -> MTSeries:
    """Add a geometrically decaying shock from ``t0`` onward.

    By default the level after ``t0`` is frozen at ``X[t0]`` and only the
    decaying shock ``eta^k * w`` moves it. With ``transitory=True`` the shock
    is added to the original path instead, ``X[t0 + k] + eta^k * w``.
    """
    if outlier.kind != "MTC":
        raise ConfigError("contaminate_mtc needs an MTC outlier")
    T, d = series.T, series.d
    if outlier.t0 > T:
        raise ConfigError(f"t0={outlier.t0} exceeds series length {T}")
    w = np.asarray(outlier.w, dtype=float)
    if w.shape != (d,):
        raise ConfigError(f"outlier size needs {d} entries, got {w.size}")
    x = series.values.copy()
    start = outlier.t0 - 1
    k = np.arange(T - start)
    shock = outlier.eta ** k[:, None] * w
    base = x[start:] if transitory else x[start]
    x[start:] = base + shock
    return MTSeries(x, series.id)


def contaminate_mio(spec: ProcessSpec, outlier: OutlierSpec, T: int, seed, series_id: str = "") -> MTSeries:
    """Rerun ``spec`` with innovations drawn from ``outlier.law`` from ``t0`` on.

    The clean innovations are drawn first from the same stream, so values
    before ``t0`` match ``simulate(spec, T, seed)`` exactly. A replacement law
    equal to the original one leaves the series unchanged.
    """
    if outlier.kind != "MIO":
        raise ConfigError("contaminate_mio needs an MIO outlier")
    if not 1 <= outlier.t0 <= T:
        raise ConfigError(f"t0={outlier.t0} outside 1..{T}")
    rng = _rng(seed)
    eps = draw_innovations(spec.innovation, rng, spec.burn_in + T, spec.d)
    if outlier.law != spec.innovation:
        start = spec.burn_in + outlier.t0 - 1
        eps[start:] = draw_innovations(outlier.law, rng, eps.shape[0] - start, spec.d)
    return MTSeries(_run(spec, eps)[spec.burn_in:], series_id)


@dataclass(frozen=True)
class Scenario:
    name: str
    dataset: Dataset
    labels: tuple
    outlier_indices: tuple
    T: int
    seed: int

    def truth(self) -> dict:
        return {sid: ("outlier" if lab == OUTLIER else lab) for sid, lab in zip(self.dataset.ids, self.labels)}


BASE_PROCESSES = {
    "1": (("var", var1()), ("vma", vma1())),
    "2": (("expar", expar()), ("bl", bilinear())),
    "3": (
        ("bekk1", bekk(a=((0.2, 1.2), (0.4, 0.5)), g=((0.2, -0.1), (-0.1, -0.1)))),
        ("bekk2", bekk(a=((0.5, 0.4), (0.7, -0.2)), g=((-0.5, -0.4), (-0.1, -0.4)))),
    ),
}

EXTRA_OUTLIERS = {
    "1.1": (("varma", varma11()),),
    "1.2": (("varma", varma11()), ("nar", nar())),
    "2.1": (("nar", nar()),),
    "2.2": (("nar", nar()), ("var01", var1(_full(0.1)))),
    "3.1": (("wn", white_noise()),),
    "3.2": (("wn", white_noise()), ("bl", bilinear())),
}

MTC_SIZES = {"1": (5.0, -5.0), "2": (5.0, -5.0), "3": (1.0, -1.0)}
MIO_DF = {"1": 3.0, "2": 3.0, "3": 0.3}

SCENARIOS = tuple(EXTRA_OUTLIERS) + tuple(f"{kind}{i}" for kind in ("MTC", "MIO") for i in "123")
PER_PROCESS = 5


def _parse_name(name):
    key = str(name).strip().upper().replace(" ", "")
    if key in EXTRA_OUTLIERS:
        return key, None
    for kind in ("MTC", "MIO"):
        if key.startswith(kind) and key[3:] in BASE_PROCESSES:
            return key[3:], kind
    raise ConfigError(f"unknown scenario {name!r}; expected one of {SCENARIOS}")


def build_scenario(name, T: int, seed: int, innovation: InnovationSpec = InnovationSpec(), per_process: int = PER_PROCESS) -> Scenario:
    """Simulate one dataset of a named scenario.

    Regular series come first (``per_process`` from each base process,
    labeled 1 and 2), then the outlier series (label ``OUTLIER``). Each series
    gets its own child of ``SeedSequence(seed)``.
    """
    key, kind = _parse_name(name)
    base = BASE_PROCESSES[key[0]]
    plan = []
    for label, (tag, spec) in enumerate(base, start=1):
        plan.extend((f"{tag}_{k + 1}", spec, label) for k in range(per_process))
    if kind is None:
        plan.extend((f"outlier_{tag}", spec, OUTLIER) for tag, spec in EXTRA_OUTLIERS[key])
    else:
        plan.append((f"outlier_{kind.lower()}", base[0][1], OUTLIER))

    seeds = np.random.SeedSequence(seed).spawn(len(plan))
    series = []
    for (sid, spec, label), child in zip(plan, seeds):
        spec = spec.with_innovation(innovation)
        if label != OUTLIER or kind is None:
            series.append(simulate(spec, T, child, sid))
        elif kind == "MTC":
            shock = OutlierSpec("MTC", t0=T // 2, w=MTC_SIZES[key])
            series.append(contaminate_mtc(simulate(spec, T, child, sid), shock))
        else:
            shock = OutlierSpec("MIO", t0=T // 2, law=InnovationSpec("chi2", MIO_DF[key]))
            series.append(contaminate_mio(spec, shock, T, child, sid))

    labels = tuple(label for _, _, label in plan)
    return Scenario(
        name=str(name),
        dataset=Dataset(tuple(series)),
        labels=labels,
        outlier_indices=tuple(i for i, lab in enumerate(labels) if lab == OUTLIER),
        T=T,
        seed=seed,
    )


def build_pool(name, T: int, seed: int, per_process: int = 50, innovation: InnovationSpec = InnovationSpec()):
    """``per_process`` series from every process of a base-and-outlier scenario.

    Returns ``(dataset, labels)`` where labels name the generating process.
    """
    key, kind = _parse_name(name)
    if kind is not None:
        raise ConfigError("process pools are defined for scenarios 1.1 to 3.2 only")
    processes = BASE_PROCESSES[key[0]] + EXTRA_OUTLIERS[key]
    seeds = iter(np.random.SeedSequence(seed).spawn(per_process * len(processes)))
    series, labels = [], []
    for tag, spec in processes:
        spec = spec.with_innovation(innovation)
        for k in range(per_process):
            series.append(simulate(spec, T, next(seeds), f"{tag}_{k + 1}"))
            labels.append(tag)
    return Dataset(tuple(series)), labels


def write_scenario(scenario: Scenario, out_dir) -> Path:
    """Write ``data.csv`` (wide layout), ``truth.json`` and ``scenario.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(scenario.dataset, out / "data.csv", component_names=("x1", "x2"))
    (out / "truth.json").write_text(json.dumps(scenario.truth(), indent=2), encoding="utf-8")
    meta = {"scenario": scenario.name, "T": scenario.T, "seed": scenario.seed, "n": scenario.dataset.n}
    (out / "scenario.json").write_text(json.dumps(meta, indent=2), encoding="utf-8")
    return out
