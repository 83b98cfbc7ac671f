"""Fuzzy system core: membership functions, partitions, rule learning,
Mamdani min-max inference, and centroid defuzzification.

Rule learning follows Wang & Mendel (1992): each training datum votes for
the rule formed by its maximum-membership regions, scored by the product of
those memberships; conflicting rules (same antecedent) keep the highest
score.  Inference clips each fired rule's consequent at its firing strength
(min over antecedent memberships) and aggregates by pointwise max over a
256-sample discretization of the output universe.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field

import numpy as np

GRID_SAMPLES = 256

# Anchor peaks closer than this (to each other or to a universe end) collapse.
ANCHOR_MERGE_DISTANCE = 1.0


class EmptyFuzzyOutputError(ValueError):
    """Defuzzification was asked to collapse an all-zero fuzzy set."""


# ---------------------------------------------------------------------------
# Membership functions.
# ---------------------------------------------------------------------------


def _eval_elementwise(func, x):
    arr = np.asarray(x, dtype=np.float64)
    out = func(arr)
    if np.ndim(x) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class GaussianMF:
    """exp(-(peak - x)^2 / (2 fuzzifier^2)); equals 1 exactly at the peak."""

    peak: float
    fuzzifier: float

    def __post_init__(self) -> None:
        if self.fuzzifier <= 0:
            raise ValueError(f"fuzzifier must be > 0, got {self.fuzzifier}")

    def __call__(self, x):
        def _f(arr):
            d = self.peak - arr
            return np.exp(-(d * d) / (2.0 * self.fuzzifier * self.fuzzifier))

        return _eval_elementwise(_f, x)


@dataclass(frozen=True)
class TriangularMF:
    """Triangle with feet a, c and peak b; a == b or b == c gives a vertical edge."""

    a: float
    b: float
    c: float

    def __post_init__(self) -> None:
        if not self.a <= self.b <= self.c:
            raise ValueError(f"require a <= b <= c, got {(self.a, self.b, self.c)}")

    def __call__(self, x):
        def _f(arr):
            out = np.zeros_like(arr)
            if self.b > self.a:
                m = (arr >= self.a) & (arr < self.b)
                out[m] = (arr[m] - self.a) / (self.b - self.a)
            out[arr == self.b] = 1.0
            if self.c > self.b:
                m = (arr > self.b) & (arr <= self.c)
                out[m] = (self.c - arr[m]) / (self.c - self.b)
            return out

        return _eval_elementwise(_f, x)


@dataclass(frozen=True)
class TrapezoidalMF:
    """Trapezoid with feet a, d and shoulder [b, c]."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self) -> None:
        if not self.a <= self.b <= self.c <= self.d:
            raise ValueError(f"require a <= b <= c <= d, got {(self.a, self.b, self.c, self.d)}")

    def __call__(self, x):
        def _f(arr):
            out = np.zeros_like(arr)
            if self.b > self.a:
                m = (arr >= self.a) & (arr < self.b)
                out[m] = (arr[m] - self.a) / (self.b - self.a)
            out[(arr >= self.b) & (arr <= self.c)] = 1.0
            if self.d > self.c:
                m = (arr > self.c) & (arr <= self.d)
                out[m] = (self.d - arr[m]) / (self.d - self.c)
            return out

        return _eval_elementwise(_f, x)


@dataclass(frozen=True)
class FuzzyRegion:
    """One linguistic region of a variable's universe."""

    label: str
    mf: object
    lo: float
    hi: float


# ---------------------------------------------------------------------------
# Partitions of a universe into overlapping triangular regions.
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class Partition:
    """Triangular regions peaking at ``peaks`` over [lo, hi].

    Consecutive-peak triangles overlap 50%: adjacent memberships cross at
    0.5, so every point of the universe is covered.  Treated as immutable
    after construction.
    """

    name: str
    lo: float
    hi: float
    peaks: tuple[float, ...]
    regions: tuple[FuzzyRegion, ...] = field(init=False)

    def __post_init__(self) -> None:
        if len(self.peaks) < 2:
            raise ValueError("a partition needs at least 2 regions")
        if self.peaks[0] != self.lo or self.peaks[-1] != self.hi:
            raise ValueError("peaks must start at lo and end at hi")
        if any(b <= a for a, b in zip(self.peaks, self.peaks[1:])):
            raise ValueError("peaks must be strictly increasing")
        regions = []
        for i, peak in enumerate(self.peaks):
            a = self.peaks[i - 1] if i > 0 else peak
            c = self.peaks[i + 1] if i + 1 < len(self.peaks) else peak
            regions.append(FuzzyRegion(f"R{i}", TriangularMF(a, peak, c), self.lo, self.hi))
        self.regions = tuple(regions)
        self._peaks_arr = np.asarray(self.peaks, dtype=np.float64)
        self._grid = np.linspace(self.lo, self.hi, GRID_SAMPLES)
        self._grid_cache: tuple[np.ndarray, ...] | None = None

    def __len__(self) -> int:
        return len(self.regions)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Partition)
            and self.name == other.name
            and (self.lo, self.hi, self.peaks) == (other.lo, other.hi, other.peaks)
        )

    @property
    def grid(self) -> np.ndarray:
        """The 256-sample discretization of the universe."""
        return self._grid

    def memberships(self, x) -> np.ndarray:
        """Membership matrix, one column per region."""
        arr = np.asarray(x, dtype=np.float64)
        self._check_range(arr)
        return np.stack([r.mf(arr) for r in self.regions], axis=-1)

    def bracket(self, x) -> tuple[np.ndarray, np.ndarray]:
        """The two regions with nonzero membership at each x, with memberships.

        Returns index and membership arrays of shape ``x.shape + (2,)``.
        Uses the same triangular-leg expressions as the region functions, so
        values agree bitwise with :meth:`memberships`.
        """
        arr = np.asarray(x, dtype=np.float64)
        self._check_range(arr)
        j = np.searchsorted(self._peaks_arr, arr, side="right") - 1
        j = np.clip(j, 0, len(self.peaks) - 2)
        left = self._peaks_arr[j]
        right = self._peaks_arr[j + 1]
        span = right - left
        mem = np.stack([(right - arr) / span, (arr - left) / span], axis=-1)
        idx = np.stack([j, j + 1], axis=-1)
        return idx, mem

    def grid_cover(self) -> tuple[np.ndarray, ...]:
        """Per grid sample: the two covering regions and their memberships."""
        if self._grid_cache is None:
            idx, mem = self.bracket(self._grid)
            self._grid_cache = (idx[:, 0], idx[:, 1], mem[:, 0], mem[:, 1])
        return self._grid_cache

    def _check_range(self, arr: np.ndarray) -> None:
        if arr.size and (arr.min() < self.lo or arr.max() > self.hi):
            raise ValueError(f"value outside universe [{self.lo}, {self.hi}] of {self.name!r}")


def partition_universe(
    lo: float,
    hi: float,
    k: int | None = None,
    anchors=None,
    name: str = "x",
) -> Partition:
    """Partition [lo, hi] into overlapping triangular regions.

    Without anchors: ``k`` uniformly spaced peaks (k >= 2).  With anchors:
    peaks at the sorted anchor values, collapsed when closer than one
    intensity unit to each other or to a universe end, with the ends always
    added so coverage is complete.
    """
    if hi <= lo:
        raise ValueError(f"empty universe [{lo}, {hi}]")
    if anchors is None:
        if k is None or k < 2:
            raise ValueError(f"need at least 2 regions, got {k}")
        peaks = tuple(np.linspace(lo, hi, k).tolist())
        return Partition(name, float(lo), float(hi), peaks)
    anchors = sorted(float(a) for a in anchors)
    if anchors and (anchors[0] < lo or anchors[-1] > hi):
        raise ValueError("anchors must lie inside the universe")
    peaks = [float(lo)]
    for a in anchors:
        if a - peaks[-1] > ANCHOR_MERGE_DISTANCE and hi - a > ANCHOR_MERGE_DISTANCE:
            peaks.append(a)
    peaks.append(float(hi))
    return Partition(name, float(lo), float(hi), tuple(peaks))


# ---------------------------------------------------------------------------
# Intensity fuzzification.
# ---------------------------------------------------------------------------


def fuzzify_gaussian(img: np.ndarray, fuzzifier: float) -> np.ndarray:
    """Per-pixel membership exp(-(x_max - x)^2 / (2 fuzzifier^2)).

    ``x_max`` is the image maximum, so the brightest pixel maps to exactly 1
    and membership decays with distance below it.
    """
    if fuzzifier <= 0:
        raise ValueError(f"fuzzifier must be > 0, got {fuzzifier}")
    if img.size == 0:
        raise ValueError("empty image")
    x = img.astype(np.float64)
    d = x.max() - x
    return np.exp(-(d * d) / (2.0 * fuzzifier * fuzzifier))


# ---------------------------------------------------------------------------
# Rule base.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FuzzyRule:
    antecedent: tuple[int, ...]
    consequent: int
    degree: float


@dataclass(eq=False)
class RuleBase:
    """Conflict-free rule set over fixed input/output partitions."""

    inputs: tuple[Partition, ...]
    output: Partition
    rules: dict[tuple[int, ...], FuzzyRule]

    def __len__(self) -> int:
        return len(self.rules)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, RuleBase)
            and self.inputs == other.inputs
            and self.output == other.output
            and self.rules == other.rules
        )


def generate_rules(
    X: np.ndarray,
    y: np.ndarray,
    inputs: tuple[Partition, ...],
    output: Partition,
) -> RuleBase:
    """Learn a rule base from numeric data, one candidate rule per datum.

    Ties on membership pick the lower region index; antecedent conflicts
    keep the highest-degree rule, with degree ties going to the lowest
    consequent index.  The result is independent of the data order.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != len(inputs):
        raise ValueError(f"X must be (n, {len(inputs)}), got {X.shape}")
    if X.shape[0] == 0:
        raise ValueError("empty training set")
    if y.shape != (X.shape[0],):
        raise ValueError(f"y must be ({X.shape[0]},), got {y.shape}")

    n = X.shape[0]
    region_idx = np.empty((n, len(inputs)), dtype=np.int64)
    degree = np.ones(n, dtype=np.float64)
    for j, part in enumerate(inputs):
        mem = part.memberships(X[:, j])
        region_idx[:, j] = np.argmax(mem, axis=1)
        degree *= np.max(mem, axis=1)
    out_mem = output.memberships(y)
    consequent = np.argmax(out_mem, axis=1)
    degree *= np.max(out_mem, axis=1)

    rules: dict[tuple[int, ...], FuzzyRule] = {}
    for i in range(n):
        key = tuple(int(v) for v in region_idx[i])
        cand = FuzzyRule(key, int(consequent[i]), float(degree[i]))
        held = rules.get(key)
        if (
            held is None
            or cand.degree > held.degree
            or (cand.degree == held.degree and cand.consequent < held.consequent)
        ):
            rules[key] = cand
    return RuleBase(tuple(inputs), output, rules)


# ---------------------------------------------------------------------------
# Inference and defuzzification.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FuzzySet:
    """A fuzzy set sampled on the 256-point grid of [lo, hi]."""

    lo: float
    hi: float
    values: np.ndarray

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, GRID_SAMPLES)


def infer(rb: RuleBase, values) -> FuzzySet:
    """Mamdani min-max inference for one input vector.

    Each rule fires at the min of its antecedent memberships; its consequent
    is clipped at that strength; fired consequents aggregate by pointwise
    max.  No fired rule yields the all-zero set.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (len(rb.inputs),):
        raise ValueError(f"expected {len(rb.inputs)} input values, got shape {values.shape}")
    agg = np.zeros(GRID_SAMPLES)
    grid = rb.output.grid
    for rule in rb.rules.values():
        strength = min(
            part.regions[r].mf(float(v))
            for part, r, v in zip(rb.inputs, rule.antecedent, values)
        )
        if strength > 0:
            clipped = np.minimum(strength, rb.output.regions[rule.consequent].mf(grid))
            np.maximum(agg, clipped, out=agg)
    return FuzzySet(rb.output.lo, rb.output.hi, agg)


def defuzzify_centroid(fs: FuzzySet) -> float:
    """Center of gravity over the grid samples."""
    total = float(fs.values.sum())
    if total <= 0:
        raise EmptyFuzzyOutputError("cannot defuzzify an all-zero fuzzy set")
    return float((fs.grid * fs.values).sum() / total)


def _rule_table(rb: RuleBase) -> np.ndarray:
    shape = tuple(len(p) for p in rb.inputs)
    table = np.full(shape, -1, dtype=np.int64)
    for key, rule in rb.rules.items():
        table[key] = rule.consequent
    return table


def infer_many(rb: RuleBase, X: np.ndarray, chunk: int = 4096) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized inference + centroid for many input vectors.

    Returns ``(centroids, fired)``; where ``fired`` is False no rule fired
    and the centroid entry is undefined (0).  Exploits that each input value
    activates at most the two regions bracketing it, so only ``2 ** n_vars``
    antecedent combinations can fire per row, and that at most two output
    regions cover any grid sample.
    """
    X = np.asarray(X, dtype=np.float64)
    n, n_vars = X.shape
    if n_vars != len(rb.inputs):
        raise ValueError(f"X must have {len(rb.inputs)} columns, got {n_vars}")

    brackets = [part.bracket(X[:, j]) for j, part in enumerate(rb.inputs)]
    table = _rule_table(rb)
    n_out = len(rb.output)

    # Per-row clip level of each output region: max firing strength among
    # the rules selecting it.
    clip = np.zeros((n, n_out))
    rows = np.arange(n)
    for combo in itertools.product((0, 1), repeat=n_vars):
        idx = tuple(brackets[j][0][:, c] for j, c in enumerate(combo))
        strength = brackets[0][1][:, combo[0]].copy()
        for j, c in enumerate(combo[1:], start=1):
            np.minimum(strength, brackets[j][1][:, c], out=strength)
        cons = table[idx]
        live = (cons >= 0) & (strength > 0)
        if live.any():
            np.maximum.at(clip, (rows[live], cons[live]), strength[live])

    cov1, cov2, mf1, mf2 = rb.output.grid_cover()
    grid = rb.output.grid
    centroids = np.zeros(n)
    fired = np.zeros(n, dtype=bool)
    for start in range(0, n, chunk):
        sl = slice(start, min(start + chunk, n))
        agg = np.maximum(
            np.minimum(clip[sl][:, cov1], mf1[None, :]),
            np.minimum(clip[sl][:, cov2], mf2[None, :]),
        )
        den = agg.sum(axis=1)
        num = agg @ grid
        hit = den > 0
        centroids[sl] = np.where(hit, num / np.where(hit, den, 1.0), 0.0)
        fired[sl] = hit
    return centroids, fired


# ---------------------------------------------------------------------------
# Text serialization: header lines for the variables, one rule per line.
# ---------------------------------------------------------------------------

_VAR_RE = re.compile(r"^(invar|outvar) (\S+) (\S+) (\S+) peaks (.+)$")
_RULE_RE = re.compile(r"^rule IF (.+) THEN (\S+)=R(\d+) \[(\S+)\]$")


def serialize_rule_base(rb: RuleBase) -> str:
    """Line-oriented text form; floats use repr so parsing is exact."""
    lines = ["rulebase v1"]
    for part in rb.inputs:
        peaks = " ".join(repr(p) for p in part.peaks)
        lines.append(f"invar {part.name} {part.lo!r} {part.hi!r} peaks {peaks}")
    peaks = " ".join(repr(p) for p in rb.output.peaks)
    lines.append(f"outvar {rb.output.name} {rb.output.lo!r} {rb.output.hi!r} peaks {peaks}")
    for key in sorted(rb.rules):
        rule = rb.rules[key]
        ants = " AND ".join(
            f"{part.name}=R{r}" for part, r in zip(rb.inputs, rule.antecedent)
        )
        lines.append(f"rule IF {ants} THEN {rb.output.name}=R{rule.consequent} [{rule.degree!r}]")
    return "\n".join(lines) + "\n"


def parse_rule_base(text: str) -> RuleBase:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "rulebase v1":
        raise ValueError("not a rule base file (missing 'rulebase v1' header)")
    inputs: list[Partition] = []
    output: Partition | None = None
    rules: dict[tuple[int, ...], FuzzyRule] = {}
    for ln in lines[1:]:
        m = _VAR_RE.match(ln)
        if m:
            kind, name, lo, hi, peaks = m.groups()
            part = Partition(name, float(lo), float(hi), tuple(float(p) for p in peaks.split()))
            if kind == "invar":
                if output is not None:
                    raise ValueError("input variable declared after the output variable")
                inputs.append(part)
            else:
                if output is not None:
                    raise ValueError("multiple output variables")
                output = part
            continue
        m = _RULE_RE.match(ln)
        if m:
            if output is None:
                raise ValueError("rule declared before the output variable")
            ants_text, out_name, cons, degree = m.groups()
            if out_name != output.name:
                raise ValueError(f"rule consequent variable {out_name!r} != {output.name!r}")
            key = []
            parts = ants_text.split(" AND ")
            if len(parts) != len(inputs):
                raise ValueError(f"rule has {len(parts)} antecedents, expected {len(inputs)}")
            for part, clause in zip(inputs, parts):
                name, _, region = clause.partition("=")
                if name != part.name or not region.startswith("R"):
                    raise ValueError(f"malformed antecedent clause {clause!r}")
                idx = int(region[1:])
                if not 0 <= idx < len(part):
                    raise ValueError(f"region index {idx} out of range for {part.name!r}")
                key.append(idx)
            cons_idx = int(cons)
            if not 0 <= cons_idx < len(output):
                raise ValueError(f"consequent index {cons_idx} out of range")
            rules[tuple(key)] = FuzzyRule(tuple(key), cons_idx, float(degree))
            continue
        raise ValueError(f"unparseable rule base line: {ln!r}")
    if output is None or not inputs:
        raise ValueError("rule base must declare input and output variables")
    return RuleBase(tuple(inputs), output, rules)
