"""Model-free implied volatility index from out-of-the-money option prices.

The index variance is a weighted strip of put prices below the forward and
call prices at or above it. By default the weights are the CBOE model-free
ones, ``w_i = (2/T) (dK_i / K_i^2) e^{rT}``; a user table may replace them.
A constant-maturity skew is first obtained by interpolating total implied
variance between the two listed expiries bracketing the target horizon.
"""

from __future__ import annotations

import csv
import datetime as dt
import os
from dataclasses import dataclass, field
from typing import Literal, Mapping, Sequence

import numpy as np
from scipy.special import ndtr

__all__ = [
    "OptionQuote",
    "OptionChain",
    "SkewCurve",
    "IndexQuote",
    "forward_level",
    "black_price",
    "interpolate_skew",
    "strike_spacing",
    "index_level",
    "blended_index_level",
    "load_option_chain",
    "load_skew_curves",
    "days_to_three_months",
    "skew_from_chain",
]


@dataclass(frozen=True)
class OptionQuote:
    strike: float
    expiry: dt.date
    kind: Literal["C", "P"]
    bid: float
    ask: float
    implied_vol: float | None = None

    def __post_init__(self) -> None:
        if self.strike <= 0:
            raise ValueError("strike must be positive")
        if not self.ask >= self.bid >= 0:
            raise ValueError(f"need ask >= bid >= 0 (strike {self.strike})")
        if self.kind not in ("C", "P"):
            raise ValueError(f"option kind must be 'C' or 'P', got {self.kind!r}")

    @property
    def mid(self) -> float:
        return 0.5 * (self.bid + self.ask)


@dataclass(frozen=True)
class OptionChain:
    as_of: dt.date
    quotes: tuple[OptionQuote, ...]
    spot: float
    rate: float = 0.0
    dividend_yield: float = 0.0

    def expiries(self) -> list[dt.date]:
        return sorted({q.expiry for q in self.quotes})

    def for_expiry(self, expiry: dt.date) -> list[OptionQuote]:
        return sorted((q for q in self.quotes if q.expiry == expiry), key=lambda q: q.strike)


@dataclass(frozen=True, eq=False)
class SkewCurve:
    """Implied volatility (percent) by strike for one tenor."""

    tenor_days: float
    strikes: np.ndarray
    vols: np.ndarray

    def __post_init__(self) -> None:
        k = np.asarray(self.strikes, dtype=float).ravel()
        v = np.asarray(self.vols, dtype=float).ravel()
        if k.size != v.size or k.size == 0:
            raise ValueError("strikes and vols must be non-empty and equally long")
        if np.any(np.diff(k) <= 0):
            raise ValueError("strikes must be strictly increasing")
        if np.any(v <= 0):
            raise ValueError("vols must be positive")
        if self.tenor_days <= 0:
            raise ValueError("tenor must be positive")
        object.__setattr__(self, "strikes", k)
        object.__setattr__(self, "vols", v)

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.strikes.tolist(), self.vols.tolist()))

    def vol_at(self, strikes) -> np.ndarray:
        return np.interp(strikes, self.strikes, self.vols)


@dataclass(frozen=True)
class IndexQuote:
    as_of: dt.date | None
    level: float
    forward: float
    n_puts: int
    n_calls: int
    variance: float = 0.0
    details: dict = field(default_factory=dict, compare=False)


def forward_level(spot: float, rate: float, dividend_yield: float, tenor_years: float) -> float:
    """``F = S exp((r - q) T)``."""
    if spot <= 0:
        raise ValueError("spot must be positive")
    if tenor_years < 0:
        raise ValueError("tenor must be nonnegative")
    return float(spot * np.exp((rate - dividend_yield) * tenor_years))


def black_price(forward, strike, vol, tenor_years, rate, kind) -> np.ndarray:
    """European option price from the forward (Black 1976); ``vol`` in decimals."""
    f = np.asarray(forward, dtype=float)
    k = np.asarray(strike, dtype=float)
    sd = np.asarray(vol, dtype=float) * np.sqrt(tenor_years)
    disc = np.exp(-rate * tenor_years)
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = np.log(f / k) / sd + 0.5 * sd
    d2 = d1 - sd
    call = disc * (f * ndtr(d1) - k * ndtr(d2))
    put = disc * (k * ndtr(-d2) - f * ndtr(-d1))
    is_call = np.asarray(kind) == "C"
    return np.where(is_call, call, put)


def interpolate_skew(
    near: SkewCurve,
    next_: SkewCurve,
    n3: float,
    n0: float = 365.0,
) -> SkewCurve:
    """Constant-maturity skew by time-weighted interpolation of total variance.

    With tenors ``N1 = near.tenor_days`` and ``N2 = next_.tenor_days``, each
    strike gets
    ``sigma^2 = [T1 s1^2 (N2-N3)/(N2-N1) + T2 s2^2 (N3-N1)/(N2-N1)] * N0/N3``
    where ``Ti = Ni / N0``. If the strike grids differ, both curves are
    linearly interpolated onto the union of strikes within their overlap.
    """
    n1, n2 = float(near.tenor_days), float(next_.tenor_days)
    if n2 == n1:
        raise ValueError("near and next tenors coincide; cannot interpolate")
    if not min(n1, n2) <= n3 <= max(n1, n2):
        raise ValueError(f"target {n3} days not bracketed by {n1} and {n2}")
    if np.array_equal(near.strikes, next_.strikes):
        grid = near.strikes
        v1, v2 = near.vols, next_.vols
    else:
        lo = max(near.strikes[0], next_.strikes[0])
        hi = min(near.strikes[-1], next_.strikes[-1])
        grid = np.union1d(near.strikes, next_.strikes)
        grid = grid[(grid >= lo) & (grid <= hi)]
        if grid.size == 0:
            raise ValueError("skew curves have no strike overlap")
        v1, v2 = near.vol_at(grid), next_.vol_at(grid)
    if n3 == n1:
        return SkewCurve(n3, grid, v1)
    if n3 == n2:
        return SkewCurve(n3, grid, v2)
    w1 = (n2 - n3) / (n2 - n1)
    w2 = (n3 - n1) / (n2 - n1)
    s1, s2 = v1 / 100.0, v2 / 100.0
    total = (n1 / n0) * s1**2 * w1 + (n2 / n0) * s2**2 * w2
    return SkewCurve(n3, grid, 100.0 * np.sqrt(total * n0 / n3))


def strike_spacing(strikes: np.ndarray) -> np.ndarray:
    """Half the distance between neighbours; one-sided at the grid edges."""
    k = np.asarray(strikes, dtype=float)
    if k.size < 2:
        raise ValueError("need at least two strikes")
    dk = np.empty_like(k)
    dk[1:-1] = 0.5 * (k[2:] - k[:-2])
    dk[0] = k[1] - k[0]
    dk[-1] = k[-1] - k[-2]
    return dk


def _strip_variance(
    strikes: np.ndarray,
    prices: np.ndarray,
    forward: float,
    tenor_years: float,
    rate: float,
    weighting: str,
    weights: Mapping[float, float] | Sequence[float] | None,
    forward_adjust: bool,
) -> tuple[float, np.ndarray]:
    if weighting == "vix_style":
        w = (2.0 / tenor_years) * strike_spacing(strikes) / strikes**2 * np.exp(rate * tenor_years)
    elif weighting == "custom_table":
        if weights is None:
            raise ValueError("custom_table weighting needs a weights table")
        if isinstance(weights, Mapping):
            try:
                w = np.array([weights[float(k)] for k in strikes])
            except KeyError as exc:
                raise ValueError(f"no weight for strike {exc.args[0]}") from None
        else:
            w = np.asarray(weights, dtype=float)
            if w.size != strikes.size:
                raise ValueError("weights must match the selected strikes")
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    var = float(np.sum(w * prices))
    if forward_adjust:
        below = strikes[strikes <= forward]
        k0 = below[-1] if below.size else strikes[0]
        var -= (forward / k0 - 1.0) ** 2 / tenor_years
    return var, w


def _otm_select(strikes, forward, atm_side):
    if atm_side == "call":
        return strikes < forward, strikes >= forward
    if atm_side == "put":
        return strikes <= forward, strikes > forward
    raise ValueError(f"atm_side must be 'call' or 'put', got {atm_side!r}")


def index_level(
    chain: OptionChain,
    target_skew: SkewCurve | None = None,
    tenor_years: float | None = None,
    weighting: Literal["vix_style", "custom_table"] = "vix_style",
    weights: Mapping[float, float] | Sequence[float] | None = None,
    forward_adjust: bool = False,
    exclude_zero_bid: bool = True,
    expiry: dt.date | None = None,
    atm_side: Literal["call", "put"] = "call",
) -> IndexQuote:
    """Volatility index level (percent) from a strip of OTM options.

    If ``target_skew`` is given, option prices on its strikes are generated
    with the Black formula at the skew's vols; otherwise the chain's
    mid-quotes for ``expiry`` (default: the only expiry) are used. Puts are
    taken below the forward and calls at or above it (``atm_side="put"``
    moves a strike exactly at the forward to the put side).
    ``forward_adjust`` subtracts ``(F/K0 - 1)^2 / T``.
    """
    if target_skew is None and expiry is None:
        exps = chain.expiries()
        if len(exps) != 1:
            raise ValueError("chain has several expiries; pass expiry=")
        expiry = exps[0]
    if tenor_years is None:
        if target_skew is not None:
            tenor_years = target_skew.tenor_days / 365.0
        elif expiry is not None:
            tenor_years = (expiry - chain.as_of).days / 365.0
        else:
            raise ValueError("tenor_years is required")
    if tenor_years <= 0:
        raise ValueError("tenor must be positive")
    fwd = forward_level(chain.spot, chain.rate, chain.dividend_yield, tenor_years)

    if target_skew is not None:
        strikes = target_skew.strikes
        put_mask, call_mask = _otm_select(strikes, fwd, atm_side)
        kinds = np.where(call_mask, "C", "P")
        prices = black_price(fwd, strikes, target_skew.vols / 100.0, tenor_years, chain.rate, kinds)
    else:
        quotes = [q for q in chain.for_expiry(expiry)
                  if not (exclude_zero_bid and q.bid <= 0)]
        puts = {q.strike: q.mid for q in quotes if q.kind == "P"}
        calls = {q.strike: q.mid for q in quotes if q.kind == "C"}
        all_k = np.array(sorted(set(puts) | set(calls)), dtype=float)
        if all_k.size == 0:
            raise ValueError("no usable quotes")
        put_mask, call_mask = _otm_select(all_k, fwd, atm_side)
        keep = np.array([
            (pm and k in puts) or (cm and k in calls)
            for k, pm, cm in zip(all_k, put_mask, call_mask)
        ])
        strikes = all_k[keep]
        put_mask, call_mask = put_mask[keep], call_mask[keep]
        prices = np.array([puts[k] if pm else calls[k]
                           for k, pm in zip(strikes, put_mask)])

    n_puts, n_calls = int(put_mask.sum()), int(call_mask.sum())
    if n_puts < 2 or n_calls < 2:
        raise ValueError(
            f"need at least 2 strikes on each side of the forward (puts={n_puts}, calls={n_calls})"
        )
    var, w = _strip_variance(strikes, prices, fwd, tenor_years, chain.rate,
                             weighting, weights, forward_adjust)
    if var < 0:
        raise ValueError(f"computed variance is negative ({var:.3e})")
    return IndexQuote(
        as_of=chain.as_of,
        level=float(100.0 * np.sqrt(var)),
        forward=fwd,
        n_puts=n_puts,
        n_calls=n_calls,
        variance=var,
        details={"strikes": strikes, "prices": prices, "weights": w, "tenor_years": tenor_years},
    )


def blended_index_level(
    chain: OptionChain,
    near_expiry: dt.date,
    next_expiry: dt.date,
    target_days: float,
    n0: float = 365.0,
    **kwargs,
) -> IndexQuote:
    """Index from two listed expiries, blending their variances in time.

    Each expiry's strip variance is computed from mid-quotes, then combined as
    ``[T1 v1 (N2-N3)/(N2-N1) + T2 v2 (N3-N1)/(N2-N1)] * N0/N3``.
    """
    n1 = (near_expiry - chain.as_of).days
    n2 = (next_expiry - chain.as_of).days
    if n2 == n1:
        raise ValueError("expiries coincide")
    q1 = index_level(chain, expiry=near_expiry, tenor_years=n1 / n0, **kwargs)
    q2 = index_level(chain, expiry=next_expiry, tenor_years=n2 / n0, **kwargs)
    w1 = (n2 - target_days) / (n2 - n1)
    w2 = (target_days - n1) / (n2 - n1)
    var = ((n1 / n0) * q1.variance * w1 + (n2 / n0) * q2.variance * w2) * n0 / target_days
    if var < 0:
        raise ValueError("blended variance is negative")
    return IndexQuote(
        as_of=chain.as_of,
        level=float(100.0 * np.sqrt(var)),
        forward=forward_level(chain.spot, chain.rate, chain.dividend_yield, target_days / n0),
        n_puts=q1.n_puts + q2.n_puts,
        n_calls=q1.n_calls + q2.n_calls,
        variance=var,
        details={"near": q1, "next": q2},
    )


def days_to_three_months(as_of: dt.date) -> int:
    """Calendar days from ``as_of`` to the same day three months later."""
    month = as_of.month + 3
    year = as_of.year + (month - 1) // 12
    month = (month - 1) % 12 + 1
    day = as_of.day
    while True:
        try:
            target = dt.date(year, month, day)
            break
        except ValueError:
            day -= 1
    return (target - as_of).days


def _parse_date(raw: str, fmt: str) -> dt.date:
    return dt.datetime.strptime(raw.strip(), fmt).date()


def load_option_chain(
    path: str | os.PathLike,
    spot: float,
    rate: float = 0.0,
    dividend_yield: float = 0.0,
    date_format: str = "%Y-%m-%d",
) -> OptionChain:
    """Read an option chain CSV with columns
    ``as_of, expiry, strike, kind, bid, ask[, implied_vol]``.

    All rows must share one ``as_of`` date.
    """
    quotes = []
    as_of = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"as_of", "expiry", "strike", "kind", "bid", "ask"}
        missing = required - set(reader.fieldnames or [])
        if missing:
            raise KeyError(f"{path}: missing column(s) {sorted(missing)}")
        for row in reader:
            day = _parse_date(row["as_of"], date_format)
            if as_of is None:
                as_of = day
            elif day != as_of:
                raise ValueError(f"{path}: several as_of dates ({as_of}, {day})")
            iv = (row.get("implied_vol") or "").strip()
            quotes.append(OptionQuote(
                strike=float(row["strike"]),
                expiry=_parse_date(row["expiry"], date_format),
                kind=row["kind"].strip().upper(),
                bid=float(row["bid"]),
                ask=float(row["ask"]),
                implied_vol=float(iv) if iv else None,
            ))
    if not quotes:
        raise ValueError(f"{path}: no quotes")
    return OptionChain(as_of, tuple(quotes), spot, rate, dividend_yield)


def load_skew_curves(path: str | os.PathLike) -> list[SkewCurve]:
    """Read ``tenor_days, strike, vol`` rows into one curve per tenor (sorted)."""
    groups: dict[float, list[tuple[float, float]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"tenor_days", "strike", "vol"} - set(reader.fieldnames or [])
        if missing:
            raise KeyError(f"{path}: missing column(s) {sorted(missing)}")
        for row in reader:
            groups.setdefault(float(row["tenor_days"]), []).append(
                (float(row["strike"]), float(row["vol"]))
            )
    curves = []
    for tenor in sorted(groups):
        pts = sorted(groups[tenor])
        curves.append(SkewCurve(tenor, [p[0] for p in pts], [p[1] for p in pts]))
    return curves


def skew_from_chain(chain: OptionChain, expiry: dt.date) -> SkewCurve:
    """Skew curve from quoted implied vols of one expiry.

    Where both a call and a put quote a vol at a strike, their average is used.
    """
    by_strike: dict[float, list[float]] = {}
    for q in chain.for_expiry(expiry):
        if q.implied_vol is not None:
            by_strike.setdefault(q.strike, []).append(q.implied_vol)
    if len(by_strike) < 4:
        raise ValueError(f"expiry {expiry} has fewer than 4 strikes with implied vols")
    strikes = sorted(by_strike)
    return SkewCurve(
        (expiry - chain.as_of).days,
        strikes,
        [float(np.mean(by_strike[k])) for k in strikes],
    )
