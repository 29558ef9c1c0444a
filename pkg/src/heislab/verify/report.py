"""Report and rate-fit records shared by every experiment."""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgument

PASS, FAIL, INCONCLUSIVE, INVALID = "pass", "fail", "inconclusive", "invalid-scenario"


def fmt(v) -> str:
    """Stable text for a CSV cell."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.12g}"
    s = str(v)
    if any(c in s for c in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isfinite(v):
            return float(f"{v:.12g}")
        return str(v)
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    return v if v is None or isinstance(v, str) else str(v)


@dataclass
class RateFit:
    """Least-squares slope of log(values) against log(radii).

    Radii come in strictly halving order.  The finest radius is dropped
    when it lies below ``floor`` (typically four grid cells); the fit is
    usable only if at least four radii remain and their values are positive.
    """

    radii: np.ndarray
    values: np.ndarray
    slope: float
    intercept: float
    r2: float
    dropped: int = 0

    MIN_RADII = 4

    @property
    def usable(self) -> bool:
        return len(self.radii) >= self.MIN_RADII and math.isfinite(self.slope)

    @classmethod
    def fit(cls, radii, values, floor: float | None = None) -> "RateFit":
        r = np.asarray(radii, float)
        v = np.asarray(values, float)
        if r.shape != v.shape or r.ndim != 1:
            raise InvalidArgument("radii and values must be matching 1-d sequences")
        if len(r) < cls.MIN_RADII:
            raise InvalidArgument(f"a rate fit needs at least {cls.MIN_RADII} radii")
        if not np.allclose(r[1:] / r[:-1], 0.5, rtol=1e-9, atol=0):
            raise InvalidArgument("radii must halve from one entry to the next")
        dropped = 0
        if floor is not None:
            if r[-1] < floor:
                r, v = r[:-1], v[:-1]
                dropped = 1
        if len(r) < 2 or np.any(~(v > 0)) or not np.all(np.isfinite(v)):
            return cls(r, v, float("nan"), float("nan"), float("nan"), dropped)
        lx, ly = np.log(r), np.log(v)
        slope, intercept = np.polyfit(lx, ly, 1)
        resid = ly - (slope * lx + intercept)
        ss = float(np.sum((ly - ly.mean()) ** 2))
        r2 = 1.0 - float(np.sum(resid ** 2)) / ss if ss > 0 else 1.0
        return cls(r, v, float(slope), float(intercept), r2, dropped)

    def as_dict(self):
        return {"radii": self.radii, "values": self.values, "slope": self.slope,
                "intercept": self.intercept, "r2": self.r2, "dropped": self.dropped,
                "usable": self.usable}


def log_slope(x, y) -> float:
    """OLS slope of log y on log x for sequences that need not be dyadic."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if np.any(~(y > 0)):
        return float("nan")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


@dataclass
class EstimateReport:
    """Outcome of one experiment.

    ``checks`` maps a check name to a boolean computed from the rows and
    the declared ``tolerance``; ``passed`` is their conjunction unless the
    status was forced to inconclusive or invalid-scenario.  ``runtime`` is
    kept on the object only, so that written files stay reproducible.
    """

    name: str
    anchor: str
    params: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    tolerance: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    forced_status: str | None = None
    runtime: float = 0.0

    def add(self, series: str, **values):
        self.rows.append({"series": series, **values})

    def check(self, name: str, ok) -> bool:
        self.checks[name] = bool(ok)
        return bool(ok)

    @property
    def status(self) -> str:
        if self.forced_status:
            return self.forced_status
        return PASS if self.checks and all(self.checks.values()) else FAIL

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def columns(self):
        cols = ["anchor", "experiment", "series"]
        for row in self.rows:
            for k in row:
                if k not in cols:
                    cols.append(k)
        return cols

    def csv_text(self) -> str:
        cols = self.columns()
        out = io.StringIO()
        out.write(",".join(cols) + "\n")
        for row in self.rows:
            full = {"anchor": self.anchor, "experiment": self.name, **row}
            out.write(",".join(fmt(full.get(c)) for c in cols) + "\n")
        return out.getvalue()

    def summary(self) -> dict:
        return _jsonable({
            "name": self.name,
            "anchor": self.anchor,
            "status": self.status,
            "pass": self.passed,
            "params": self.params,
            "constants": self.constants,
            "fits": {k: f.as_dict() for k, f in self.fits.items()},
            "checks": self.checks,
            "tolerance": self.tolerance,
            "notes": self.notes,
        })

    def summary_text(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"

    def line(self) -> str:
        failed = [k for k, v in self.checks.items() if not v]
        tail = f" failed: {', '.join(failed)}" if failed else ""
        return f"{self.name}: {self.status}{tail}"
