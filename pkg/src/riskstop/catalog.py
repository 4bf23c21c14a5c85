"""Named model constructors with default parameters, used by the CLI."""
from __future__ import annotations

import numpy as np

from .counterexamples import tower_chain_model
from .errors import RiskStopError
from .model import (make_arf_model, make_asset_sale_model, make_deadline_sale_model,
                    random_comonotone_model, random_monotone_model, random_tabular_model)
from .risk import RiskSpec

ASSET_OFFER_PROBS = (0.1, 0.2, 0.3, 0.25, 0.15)
DEADLINE_SHOCKS = (-2.5, -1.5, -0.5, 0.5, 1.5)


def asset_sale(r=0.05, T=6, n=12, xmax=1.1, risk=None):
    """Offers on every other interior grid point of ``linspace(0, xmax, n)``."""
    grid = np.linspace(0.0, xmax, int(n))
    picks = np.linspace(2, int(n) - 2, len(ASSET_OFFER_PROBS)).round().astype(int)
    return make_asset_sale_model(r, grid[picks], ASSET_OFFER_PROBS, grid, int(T), risk)


def deadline_sale(lam=1.1, T=5, n=41, xmax=20.0, risk=None):
    grid = np.linspace(0.0, xmax, int(n))
    probs = np.full(len(DEADLINE_SHOCKS), 1 / len(DEADLINE_SHOCKS))
    return make_deadline_sale_model(lam, DEADLINE_SHOCKS, probs, grid, int(T), risk)


def arf(a=1.0, b=0.1, c=0.0, mu=0.0, sigma=0.2, atoms=5, n1=11, n2=11, T=3, offset=1, risk=None):
    return make_arf_model(a, b, c, mu, sigma, int(atoms), (int(n1), int(n2)), int(T), risk,
                          offset=int(offset))


def _sizes(n1, n2):
    return (int(n1),) if not n2 else (int(n1), int(n2))


def random_monotone(seed=0, n1=4, n2=0, T=3, kind="joint", risk=None):
    return random_monotone_model(int(seed), _sizes(n1, n2), int(T), kind, risk)


def random_comonotone(seed=0, n1=4, n2=4, T=3, risk=None):
    return random_comonotone_model(int(seed), _sizes(n1, n2), int(T), risk)


def random_tabular(seed=0, n=4, T=3, risk=None):
    return random_tabular_model(int(seed), int(n), int(T), risk)


def tower_chain(alpha=0.05, risk=None):
    model = tower_chain_model(alpha)
    return model.with_risk(risk) if risk is not None else model


BUILTINS = {
    "asset-sale": asset_sale,
    "deadline-sale": deadline_sale,
    "arf": arf,
    "random-monotone": random_monotone,
    "random-comonotone": random_comonotone,
    "random-tabular": random_tabular,
    "tower-chain": tower_chain,
}

# risk used when the caller gives none
DEFAULT_RISK = {
    "asset-sale": "cvar:0.5",
    "deadline-sale": "expectation",
    "arf": "cvar:0.3",
    "random-monotone": "cvar:0.3",
    "random-comonotone": "cvar:0.3",
    "random-tabular": "cvar:0.5",
    "tower-chain": "cvar:0.05",
}


def _coerce(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    if "," in text:
        return [_coerce(p) for p in text.split(",")]
    return text


def parse_params(items) -> dict:
    """``["r=0.05", "a=1,2,3"]`` -> ``{"r": 0.05, "a": [1, 2, 3]}``."""
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise RiskStopError(f"parameter {item!r} is not KEY=VALUE")
        out[key.strip().replace("-", "_")] = _coerce(value.strip())
    return out


def build(name: str, params=None, risk=None):
    if name not in BUILTINS:
        raise RiskStopError(f"unknown builtin {name!r}; choose from {', '.join(sorted(BUILTINS))}")
    params = dict(params or {})
    if risk is None:
        risk = RiskSpec.parse(DEFAULT_RISK[name])
    try:
        return BUILTINS[name](risk=risk, **params)
    except TypeError as exc:
        raise RiskStopError(f"bad parameters for {name}: {exc}") from None
