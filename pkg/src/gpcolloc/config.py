"""Problem config documents (JSON) and their conversion to :class:`ProblemSpec`.

A config looks like::

    {
      "name": "disk_poisson",
      "domain": {"kind": "unit_disk", "params": {}},
      "operator": {"terms": [{"alpha": [2, 0], "coeff": "-1"},
                             {"alpha": [0, 2], "coeff": "-1"}]},
      "source": "1",
      "boundary": [{"where": "all", "operator": {"kind": "dirichlet"}, "value": "0"}],
      "kernel": {"s": 0.1, "ell": 3.5},
      "discretization": {"n_i": 16, "n_b": 5, "strategy": "sunflower", "seed": null},
      "oracle": {"exact": "(1-x1^2-x2^2)/4"}
    }

``kernel`` takes either ``ell`` or ``ell_search`` (``min``, ``max``,
``count``, ``log_spaced``; missing fields fall back to the domain default).
Boundary rules either select sampled boundary points with ``where``
(``all``, ``left``, ``right``) or add an explicit ``point``.  Operators are
``{"kind": "dirichlet"}``, ``{"kind": "neumann"}`` (outward normal
derivative) or an explicit ``{"terms": [...]}`` list.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from . import expr as ex
from .geometry import (
    BoundaryDatum,
    Discretization,
    Domain,
    Interval,
    StarShaped,
    UnitDisk,
    outward_normal,
    sample_boundary,
    sample_interior,
)
from .gp import LengthscaleGrid, ProblemSpec, select_lengthscale
from .kernel import SEKernel
from .operators import LinearDiffOperator

__all__ = [
    "ConfigError",
    "ProblemConfig",
    "load_config",
    "build_problem",
    "resolve_problem",
    "build_domain",
]


class ConfigError(ValueError):
    pass


_TOP_KEYS = {"name", "domain", "operator", "source", "boundary", "kernel", "discretization", "oracle"}
_REQUIRED = _TOP_KEYS - {"name", "oracle"}


def _check_keys(obj: Any, allowed: set[str], where: str, required: set[str] = frozenset()):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object, got {type(obj).__name__}")
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    missing = set(required) - set(obj)
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")


def _parse_expr(text: Any, where: str) -> ex.Expression:
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        text = repr(float(text))
    if not isinstance(text, str):
        raise ConfigError(f"{where}: expected an expression string")
    try:
        return ex.parse(text)
    except ex.ExpressionSyntaxError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _parse_terms(terms: Any, dim: int, where: str) -> LinearDiffOperator:
    if not isinstance(terms, list) or not terms:
        raise ConfigError(f"{where}: 'terms' must be a non-empty list")
    parsed = []
    for k, t in enumerate(terms):
        _check_keys(t, {"alpha", "coeff"}, f"{where}.terms[{k}]", {"alpha", "coeff"})
        alpha = t["alpha"]
        if not (isinstance(alpha, list) and len(alpha) == dim and all(isinstance(a, int) and a >= 0 for a in alpha)):
            raise ConfigError(f"{where}.terms[{k}].alpha must be {dim} non-negative integers")
        parsed.append((tuple(alpha), _parse_expr(t["coeff"], f"{where}.terms[{k}].coeff")))
    try:
        return LinearDiffOperator(parsed, dim=dim)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def build_domain(d: dict) -> Domain:
    _check_keys(d, {"kind", "params"}, "domain", {"kind"})
    kind, params = d["kind"], d.get("params", {})
    try:
        if kind == "interval":
            _check_keys(params, {"a", "b"}, "domain.params", {"a", "b"})
            return Interval(float(params["a"]), float(params["b"]))
        if kind == "unit_disk":
            _check_keys(params, set(), "domain.params")
            return UnitDisk()
        if kind == "star":
            _check_keys(params, {"radius"}, "domain.params", {"radius"})
            return StarShaped(params["radius"])
    except (ValueError, ex.ExpressionSyntaxError) as exc:
        raise ConfigError(f"domain: {exc}") from None
    raise ConfigError(f"domain: unknown kind {kind!r}")


@dataclass(frozen=True)
class ProblemConfig:
    """Validated config document.  ``raw`` is the normalized plain-data form."""

    raw: dict

    @classmethod
    def from_dict(cls, doc: dict) -> "ProblemConfig":
        doc = copy.deepcopy(doc)
        _check_keys(doc, _TOP_KEYS, "config", _REQUIRED)
        dom = build_domain(doc["domain"])
        _check_keys(doc["operator"], {"terms"}, "operator", {"terms"})
        _parse_terms(doc["operator"]["terms"], dom.dim, "operator")
        _parse_expr(doc["source"], "source")

        if not isinstance(doc["boundary"], list):
            raise ConfigError("boundary: expected a list of rules")
        for k, rule in enumerate(doc["boundary"]):
            where = f"boundary[{k}]"
            _check_keys(rule, {"where", "point", "operator", "value"}, where, {"operator", "value"})
            if ("where" in rule) == ("point" in rule):
                raise ConfigError(f"{where}: give exactly one of 'where' and 'point'")
            if "where" in rule and rule["where"] not in ("all", "left", "right"):
                raise ConfigError(f"{where}.where must be 'all', 'left' or 'right'")
            _check_keys(rule["operator"], {"kind", "terms"}, f"{where}.operator")
            op = rule["operator"]
            if ("kind" in op) == ("terms" in op):
                raise ConfigError(f"{where}.operator: give exactly one of 'kind' and 'terms'")
            if "kind" in op and op["kind"] not in ("dirichlet", "neumann"):
                raise ConfigError(f"{where}.operator.kind must be 'dirichlet' or 'neumann'")
            if "terms" in op:
                _parse_terms(op["terms"], dom.dim, f"{where}.operator")
            _parse_expr(rule["value"], f"{where}.value")

        kern = doc["kernel"]
        _check_keys(kern, {"s", "ell", "ell_search"}, "kernel", {"s"})
        if ("ell" in kern) == ("ell_search" in kern):
            raise ConfigError("kernel: give exactly one of 'ell' and 'ell_search'")
        if not (isinstance(kern["s"], (int, float)) and kern["s"] > 0):
            raise ConfigError("kernel.s must be a positive number")
        if "ell" in kern and not (isinstance(kern["ell"], (int, float)) and kern["ell"] > 0):
            raise ConfigError("kernel.ell must be a positive number")
        if "ell_search" in kern:
            _check_keys(kern["ell_search"], {"min", "max", "count", "log_spaced"}, "kernel.ell_search")

        disc = doc["discretization"]
        _check_keys(disc, {"n_i", "n_b", "strategy", "seed"}, "discretization", {"n_i", "n_b"})
        for key in ("n_i", "n_b"):
            if not (isinstance(disc[key], int) and disc[key] >= 0):
                raise ConfigError(f"discretization.{key} must be a non-negative integer")

        if "oracle" in doc and doc["oracle"] is not None:
            _check_keys(doc["oracle"], {"exact", "fd"}, "oracle")
            if len(doc["oracle"]) != 1:
                raise ConfigError("oracle: give exactly one of 'exact' and 'fd'")
            if "exact" in doc["oracle"]:
                _parse_expr(doc["oracle"]["exact"], "oracle.exact")
            elif doc["oracle"]["fd"] != "heat1d":
                raise ConfigError("oracle.fd: only 'heat1d' is available")
        return cls(doc)

    def to_dict(self) -> dict:
        return copy.deepcopy(self.raw)

    def dumps(self) -> str:
        return json.dumps(self.raw, indent=2)

    @property
    def name(self) -> str:
        return self.raw.get("name", "problem")

    @property
    def domain(self) -> Domain:
        return build_domain(self.raw["domain"])

    @property
    def oracle(self) -> dict | None:
        return self.raw.get("oracle")

    def lengthscale_grid(self) -> LengthscaleGrid | None:
        search = self.raw["kernel"].get("ell_search")
        if search is None:
            return None
        default = LengthscaleGrid.default_for(self.domain)
        try:
            return LengthscaleGrid(
                float(search.get("min", default.ell_min)),
                float(search.get("max", default.ell_max)),
                int(search.get("count", default.count)),
                bool(search.get("log_spaced", True)),
            )
        except ValueError as exc:
            raise ConfigError(f"kernel.ell_search: {exc}") from None

    def with_updates(self, **changes) -> "ProblemConfig":
        """Copy with top-level sections merged, e.g. ``discretization={"n_i": 40}``."""
        doc = self.to_dict()
        for key, value in changes.items():
            if isinstance(value, dict) and isinstance(doc.get(key), dict):
                doc[key].update(value)
            else:
                doc[key] = value
        return ProblemConfig.from_dict(doc)


def load_config(path: str | Path) -> ProblemConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return ProblemConfig.from_dict(doc)


def _boundary_operator(op_doc: dict, dom: Domain, point: np.ndarray) -> LinearDiffOperator:
    if "terms" in op_doc:
        return _parse_terms(op_doc["terms"], dom.dim, "boundary.operator")
    if op_doc["kind"] == "dirichlet":
        return LinearDiffOperator.identity(dom.dim)
    return LinearDiffOperator.directional(outward_normal(dom, point))


def _matches(where: str, dom: Domain, point: np.ndarray) -> bool:
    if where == "all":
        return True
    if not isinstance(dom, Interval):
        raise ConfigError(f"boundary selector {where!r} only applies to intervals")
    x = float(point[0])
    return x == dom.a if where == "left" else x == dom.b


def build_problem(cfg: ProblemConfig, ell: float | None = None) -> ProblemSpec:
    """ProblemSpec for ``cfg``; ``ell`` overrides the kernel lengthscale.

    Configs with ``ell_search`` need an explicit ``ell`` here; use
    :func:`resolve_problem` to run the search.
    """
    doc = cfg.raw
    dom = build_domain(doc["domain"])
    L = _parse_terms(doc["operator"]["terms"], dom.dim, "operator")
    source = _parse_expr(doc["source"], "source")
    disc_doc = doc["discretization"]
    n_i, n_b = disc_doc["n_i"], disc_doc["n_b"]
    strategy = disc_doc.get("strategy") or ("equidistant" if dom.dim == 1 else "sunflower")
    try:
        interior = (
            sample_interior(dom, n_i, strategy, disc_doc.get("seed"))
            if n_i > 0
            else np.zeros((0, dom.dim))
        )
        sampled = sample_boundary(dom, n_b) if n_b > 0 else np.zeros((0, dom.dim))
    except ValueError as exc:
        raise ConfigError(f"discretization: {exc}") from None

    rules = doc["boundary"]
    data = []
    for p in sampled:
        rule = next((r for r in rules if "where" in r and _matches(r["where"], dom, p)), None)
        if rule is None:
            raise ConfigError(f"no boundary rule covers the boundary point {p.tolist()}")
        data.append(_datum(rule, dom, p))
    for r in rules:
        if "point" in r:
            p = np.asarray(r["point"], dtype=float)
            if p.shape != (dom.dim,) or not dom.on_boundary(p, 1e-9):
                raise ConfigError(f"boundary point {r['point']} is not on the boundary")
            data.append(_datum(r, dom, p))

    if ell is None:
        if "ell" not in doc["kernel"]:
            raise ConfigError("config uses ell_search; pass a lengthscale or call resolve_problem")
        ell = doc["kernel"]["ell"]
    kernel = SEKernel.isotropic(float(doc["kernel"]["s"]), float(ell), dom.dim)
    return ProblemSpec(dom, L, source, Discretization(interior, tuple(data)), kernel)


def _datum(rule: dict, dom: Domain, p: np.ndarray) -> BoundaryDatum:
    op = _boundary_operator(rule["operator"], dom, p)
    value = ex.evaluate(_parse_expr(rule["value"], "boundary.value"), p)
    return BoundaryDatum(p, op, value)


def resolve_problem(cfg: ProblemConfig) -> tuple[ProblemSpec, list[tuple[float, float]] | None]:
    """ProblemSpec with the lengthscale fixed or chosen by likelihood search.

    Returns the spec and the normalized likelihood profile (``None`` when the
    lengthscale was fixed in the config).
    """
    grid = cfg.lengthscale_grid()
    if grid is None:
        return build_problem(cfg), None
    template = build_problem(cfg, ell=grid.ell_min)
    ell, profile = select_lengthscale(template, grid)
    return template.with_lengthscale(ell), profile
