"""Fixed points of F^eps by damped iteration, and the shrinking-eps pipeline.

Iterates live on the grid of multiples of 2**-P so that every block sums to
exactly one: after each damped step all coordinates are rounded to the grid
and the largest coordinate (lowest index on ties) absorbs the rounding.
Whenever the extended-float residual drops below tolerance the iterate is
pushed once through the exact map and the exact residual of that snapshot
decides convergence.  Reported residuals are therefore always exact.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from thpe.circuit import Circuit, eval_float
from thpe.compiler import ParameterError, check_eps, compile_f_eps, reference_f_eps
from thpe.extfloat import ExtFloat
from thpe.game import Game, MixedProfile, format_rational, parse_rational

CONVERGED = "converged"
NO_CONVERGENCE = "no-convergence"


@dataclass(frozen=True)
class SolveConfig:
    damping: Fraction = Fraction(1, 2)
    residual_tol: Fraction = Fraction(1, 10 ** 12)
    max_iters: int = 1000
    starts: int = 8
    seed: int = 0
    precision_bits: int = 128
    exact: bool = False
    workers: int = 1
    max_stages: int = 40

    def __post_init__(self):
        object.__setattr__(self, "damping", Fraction(self.damping))
        object.__setattr__(self, "residual_tol", Fraction(self.residual_tol))
        if not 0 < self.damping <= 1:
            raise ParameterError("damping must lie in (0, 1]")
        if self.residual_tol <= 0:
            raise ParameterError("residual_tol must be positive")
        if self.max_iters < 1 or self.starts < 1 or self.max_stages < 1:
            raise ParameterError("max_iters, starts and max_stages must be positive")
        if self.precision_bits < 16:
            raise ParameterError("precision_bits must be at least 16")
        if self.workers < 1:
            raise ParameterError("workers must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ParameterError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class SolveResult:
    profile: MixedProfile
    residual: Fraction
    iterations: int
    start: int
    converged: bool

    @property
    def status(self) -> str:
        return CONVERGED if self.converged else NO_CONVERGENCE


def residual(g: Game, x: MixedProfile, eps) -> Fraction:
    """Exact ||F^eps(x) - x||_inf."""
    fx = reference_f_eps(g, x, eps)
    return max(abs(a - b) for a, b in zip(fx.flat, x.flat))


# -- grid arithmetic ---------------------------------------------------------------

def _div_round(num: int, den: int) -> int:
    """num / den rounded to nearest, ties to even (den > 0)."""
    q, r = divmod(num, den)
    if 2 * r > den or (2 * r == den and q & 1):
        q += 1
    return q


def _renormalize(block: list[int], one: int) -> list[int]:
    top = max(range(len(block)), key=lambda j: (block[j], -j))
    block[top] = one - (sum(block) - block[top])
    return block


def _quantize(values: Sequence[Fraction], counts: Sequence[int], bits: int) -> list[int]:
    one = 1 << bits
    out, k = [], 0
    for c in counts:
        block = [_div_round(v.numerator << bits, v.denominator) for v in values[k:k + c]]
        out.extend(_renormalize(block, one))
        k += c
    return out


def _grid_profile(ints: Sequence[int], counts: Sequence[int], bits: int) -> MixedProfile:
    return MixedProfile.from_flat(counts, [Fraction(k, 1 << bits) for k in ints])


def _start_point(g: Game, index: int, cfg: SolveConfig) -> list[Fraction]:
    counts = g.strategy_counts
    if index == 0:
        return list(MixedProfile.uniform(counts).flat)
    rng = np.random.default_rng([cfg.seed, index])
    out = []
    for c in counts:
        w = rng.dirichlet(np.ones(c))
        out.extend(Fraction(float(p)) for p in w)
    return out


# -- single eps ---------------------------------------------------------------------

@dataclass
class _Context:
    game: Game
    circuit: Circuit
    eps: Fraction
    cfg: SolveConfig
    eps_ext: ExtFloat = field(init=False)
    tol_ext: ExtFloat = field(init=False)

    def __post_init__(self):
        P = self.cfg.precision_bits
        self.eps_ext = ExtFloat.from_fraction(self.eps, P)
        self.tol_ext = ExtFloat.from_fraction(self.cfg.residual_tol, P)


def _polish(ctx: _Context, x: MixedProfile) -> tuple[MixedProfile, Fraction]:
    g, P = ctx.game, ctx.cfg.precision_bits
    y = reference_f_eps(g, x, ctx.eps)
    if not ctx.cfg.exact:
        y = _grid_profile(_quantize(y.flat, g.strategy_counts, P), g.strategy_counts, P)
    return y, residual(g, y, ctx.eps)


def _run_float(ctx: _Context, index: int) -> SolveResult:
    g, cfg = ctx.game, ctx.cfg
    P, counts = cfg.precision_bits, g.strategy_counts
    one = 1 << P
    a_num, a_den = cfg.damping.numerator, cfg.damping.denominator
    x = _quantize(_start_point(g, index, cfg), counts, P)
    best: tuple[Fraction, MixedProfile, int] | None = None
    for it in range(cfg.max_iters + 1):
        xf = [ExtFloat(k, -P, P) for k in x]
        fx = eval_float(ctx.circuit, xf, ctx.eps_ext, P)
        r = max(abs(a - b) for a, b in zip(fx, xf))
        if r <= ctx.tol_ext or it == cfg.max_iters:
            y, ry = _polish(ctx, _grid_profile(x, counts, P))
            if best is None or ry < best[0]:
                best = (ry, y, it)
            if ry <= cfg.residual_tol:
                return SolveResult(y, ry, it, index, True)
            if it == cfg.max_iters:
                break
        stepped, k = [], 0
        for c in counts:
            block = [_div_round((a_den - a_num) * x[k + j] + a_num * fx[k + j].scaled_int(P),
                                a_den)
                     for j in range(c)]
            stepped.extend(_renormalize(block, one))
            k += c
        x = stepped
    ry, y, it = best
    return SolveResult(y, ry, it, index, False)


def _run_exact(ctx: _Context, index: int) -> SolveResult:
    g, cfg = ctx.game, ctx.cfg
    alpha = cfg.damping
    start = _start_point(g, index, cfg)
    if index > 0:
        start = _grid_profile(_quantize(start, g.strategy_counts, 64), g.strategy_counts, 64).flat
    x = MixedProfile.from_flat(g.strategy_counts, start)
    best = None
    for it in range(cfg.max_iters + 1):
        fx = reference_f_eps(g, x, ctx.eps)
        r = max(abs(a - b) for a, b in zip(fx.flat, x.flat))
        if r <= cfg.residual_tol or it == cfg.max_iters:
            ry = residual(g, fx, ctx.eps)
            if best is None or ry < best[0]:
                best = (ry, fx, it)
            if ry <= cfg.residual_tol:
                return SolveResult(fx, ry, it, index, True)
            if it == cfg.max_iters:
                break
        x = MixedProfile(tuple(
            tuple((1 - alpha) * p + alpha * q for p, q in zip(bx, bf))
            for bx, bf in zip(x.blocks, fx.blocks)))
    ry, y, it = best
    return SolveResult(y, ry, it, index, False)


def solve_fixed_point(g: Game, eps, cfg: SolveConfig = SolveConfig(),
                      circuit: Circuit | None = None) -> SolveResult:
    """Lowest-residual result over ``cfg.starts`` damped iterations.

    Start 0 is the uniform profile; the rest are seeded random points.  The
    reduction (minimum residual, ties to the lower start index) does not
    depend on ``cfg.workers``.
    """
    eps = Fraction(eps)
    check_eps(eps, g.m)
    ctx = _Context(g, circuit if circuit is not None else compile_f_eps(g), eps, cfg)
    run = _run_exact if cfg.exact else _run_float
    if cfg.workers == 1:
        results = [run(ctx, k) for k in range(cfg.starts)]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(lambda k: run(ctx, k), range(cfg.starts)))
    return min(results, key=lambda r: (r.residual, r.start))


# -- brute-force oracle ---------------------------------------------------------------

class OracleBudgetError(ValueError):
    pass


def _compositions(total: int, parts: int) -> np.ndarray:
    rows = []
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev, row = -1, []
        for b in bars:
            row.append(b - prev - 1)
            prev = b
        row.append(total + parts - 1 - prev - 1)
        rows.append(row)
    return np.array(rows, dtype=np.int64)


def grid_oracle(g: Game, eps, resolution: int, budget: int = 2_000_000,
                chunk: int = 100_000) -> MixedProfile:
    """Grid point k/resolution of smallest residual, by exhaustive float search.

    F is evaluated here by its own route: payoffs by tensor contraction and
    the threshold as a Euclidean projection onto a scaled simplex.
    """
    eps = Fraction(eps)
    check_eps(eps, g.m)
    if resolution < 1:
        raise ParameterError("resolution must be positive")
    counts = g.strategy_counts
    sizes = [math.comb(resolution + c - 1, c - 1) for c in counts]
    total = math.prod(sizes)
    if total > budget:
        raise OracleBudgetError(f"grid has {total} points, budget is {budget}")
    comps = [_compositions(resolution, c) / resolution for c in counts]
    n, e = g.n, float(eps)
    tensors = [np.array([float(row[i]) for row in g.payoffs]).reshape(counts) for i in range(n)]
    letters = "abcdefghijklmnopqrstuvwxyz"[:n]
    best_r, best_idx = math.inf, None
    all_idx = np.indices(sizes).reshape(n, -1).T
    for start in range(0, total, chunk):
        idx = all_idx[start:start + chunk]
        xs = [comps[k][idx[:, k]] for k in range(n)]
        res = np.zeros(len(idx))
        for i in range(n):
            others = [k for k in range(n) if k != i]
            subs = letters + "," + ",".join("Z" + letters[k] for k in others) + "->Z" + letters[i]
            v = np.einsum(subs, tensors[i], *[xs[k] for k in others])
            w = xs[i] + v - e
            s = 1.0 - counts[i] * e
            u = -np.sort(-w, axis=1)
            css = np.cumsum(u, axis=1) - s
            ind = np.arange(1, counts[i] + 1)
            rho = np.count_nonzero(u - css / ind > 0, axis=1)
            theta = css[np.arange(len(idx)), rho - 1] / rho
            fx = np.maximum(w - theta[:, None], 0.0) + e
            res = np.maximum(res, np.abs(fx - xs[i]).max(axis=1))
        k = int(np.argmin(res))
        if res[k] < best_r:
            best_r, best_idx = float(res[k]), idx[k]
    blocks = []
    for p, c in enumerate(counts):
        row = _compositions(resolution, c)[best_idx[p]]
        blocks.append(tuple(Fraction(int(a), resolution) for a in row))
    return MixedProfile(tuple(blocks))


# -- shrinking eps ----------------------------------------------------------------------

@dataclass(frozen=True)
class StageRecord:
    eps: Fraction
    iterations: int
    residual: Fraction
    profile: MixedProfile
    converged: bool = True

    def line(self) -> str:
        x = ";".join(",".join(format_rational(p) for p in b) for b in self.profile.blocks)
        return (f"eps={format_rational(self.eps)} iters={self.iterations} "
                f"residual={format_decimal(self.residual)} x={x}")


def format_decimal(q: Fraction, digits: int = 6) -> str:
    # Fraction -> float is correctly rounded, hence deterministic
    return f"{float(q):.{digits}e}"


def parse_trace_line(line: str) -> StageRecord:
    fields = dict(tok.split("=", 1) for tok in line.split())
    try:
        blocks = tuple(tuple(parse_rational(p) for p in b.split(","))
                       for b in fields["x"].split(";"))
        return StageRecord(parse_rational(fields["eps"]), int(fields["iters"]),
                           Fraction(fields["residual"]), MixedProfile(blocks))
    except KeyError as exc:
        raise ValueError(f"trace line lacks field {exc}") from None


@dataclass(frozen=True)
class PEResult:
    profile: MixedProfile
    trace: tuple[StageRecord, ...]
    status: str
    note: str = ""

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    def trace_text(self) -> str:
        return "".join(r.line() + "\n" for r in self.trace)


def initial_eps(delta, m: int) -> Fraction:
    """Largest power of two not above min(delta/2, 1/(m+1))."""
    base = min(Fraction(delta) / 2, Fraction(1, m + 1))
    e = base.numerator.bit_length() - base.denominator.bit_length()
    while Fraction(2) ** e > base:
        e -= 1
    while Fraction(2) ** (e + 1) <= base:
        e += 1
    return Fraction(2) ** e


def approximate_pe(g: Game, delta, cfg: SolveConfig = SolveConfig()) -> PEResult:
    """Solve at eps_k = eps_0 / 2**k until successive solutions agree within delta/2.

    The stopping rule is a stabilization heuristic; it does not certify the
    distance to a perfect equilibrium.
    """
    delta = Fraction(delta)
    if delta <= 0:
        raise ParameterError("delta must be positive")
    circuit = compile_f_eps(g)
    eps = initial_eps(delta, g.m)
    trace: list[StageRecord] = []
    prev = None
    for _ in range(cfg.max_stages):
        res = solve_fixed_point(g, eps, cfg, circuit)
        trace.append(StageRecord(eps, res.iterations, res.residual, res.profile, res.converged))
        if not res.converged:
            return PEResult(res.profile, tuple(trace), NO_CONVERGENCE,
                            f"no fixed point within tolerance at eps={format_rational(eps)}")
        if prev is not None and res.profile.distance(prev) <= delta / 2:
            return PEResult(res.profile, tuple(trace), CONVERGED,
                            "heuristic stop: successive solutions within delta/2")
        prev = res.profile
        eps /= 2
    return PEResult(prev, tuple(trace), NO_CONVERGENCE, "eps schedule exhausted")
