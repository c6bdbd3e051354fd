"""Canonical JSON serialization for problems, certificates, and traces.

Design constraints, in order of priority:

* **Determinism**: the same object always serializes to the same bytes.
  Keys are written in a fixed order per object type, floats always with 17
  significant digits (enough to round-trip IEEE doubles), and container
  layout depends only on the data and the requested indent.
* **Round-trip fidelity**: parsing an emitted document and re-emitting it
  reproduces the bytes.  Floats therefore always carry a ``.`` or exponent
  (so they re-parse as floats, not ints), ``-0.0`` is normalized to
  ``0.0``, and the infinities are encoded as the JSON strings ``"inf"`` /
  ``"-inf"`` (JSON has no number for them); ``nan`` is rejected outright.
* **Diffability**: complex matrices are nested row-major arrays of
  ``[re, im]`` pairs, so fixtures remain readable and diffable.

The problem-file schema is versioned at ``"1"``::

    {
      "version": "1",
      "dims": {"in": 2, "out": 2, "env": 1},
      "objective": {"family": "...", ...family params...},
      "channel": {"kind": "choi" | "kraus" | "povm", ...},   // optional
      "tolerances": {"tau_psd": ..., ...}                    // optional
    }

Families: ``Linear`` (``h0`` on out (x) in), ``Fidelity`` /
``TraceDistance`` / ``RelativeEntropy`` (``rho`` on in (x) env, ``sigma``
on out (x) env), ``FidelitySquaredEnsemble`` (``probs``, ``inputs``,
``targets``), and the convenience family ``Discrimination`` (``probs``,
``states``), which lowers to a ``Linear`` objective over measure-and-record
channels and is the input format for the measurement-optimality command.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields

import numpy as np

from .certifier import Certificate, HyklReport
from .choi import BipartiteState, ChoiOp, Povm, choi_from_kraus, q2c_choi
from .linalg import TOL, HermOp, Tolerances, as_array
from .objectives import (
    Ensemble,
    FidelityObjective,
    FidelitySquaredObjective,
    LinearObjective,
    ObjectiveSpec,
    RelativeEntropyObjective,
    SubgradResult,
    TraceDistanceObjective,
    discrimination_objective,
)

__all__ = [
    "SchemaError",
    "Problem",
    "VERSION",
    "canonical_json",
    "encode_matrix",
    "decode_matrix",
    "problem_to_dict",
    "parse_problem",
    "loads_problem",
    "certificate_to_dict",
    "certificate_from_dict",
    "hykl_to_dict",
    "trace_to_dict",
    "subgrad_to_dict",
]

VERSION = "1"

FAMILIES = (
    "Linear",
    "Fidelity",
    "FidelitySquaredEnsemble",
    "TraceDistance",
    "RelativeEntropy",
    "Discrimination",
)


class SchemaError(ValueError):
    """Problem or result document violates the JSON schema."""


# ---------------------------------------------------------------------------
# canonical writer


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        raise ValueError("nan is not serializable")
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == 0.0:
        x = 0.0  # normalize -0.0
    s = format(x, ".17g")
    if "." not in s and "e" not in s and "inf" not in s:
        s += ".0"
    return s


def _emit(obj, out: list[str], indent: int | None, level: int) -> None:
    pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
    endpad = "" if indent is None else "\n" + " " * (indent * level)
    sep = "," if indent is None else ","
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(sep)
            out.append(pad)
            out.append(json.dumps(str(k)))
            out.append(": " if indent is not None else ":")
            _emit(v, out, indent, level + 1)
        out.append(endpad)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        if len(obj) == 0:
            out.append("[]")
            return
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(sep)
            out.append(pad)
            _emit(v, out, indent, level + 1)
        out.append(endpad)
        out.append("]")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif obj is None:
        out.append("null")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_json(obj, indent: int | None = None) -> str:
    """Deterministic JSON text for a tree of dicts/lists/scalars."""
    out: list[str] = []
    _emit(obj, out, indent, 0)
    out.append("\n")
    return "".join(out)


# ---------------------------------------------------------------------------
# matrix codec


def encode_matrix(m) -> list:
    """Row-major nested lists of ``[re, im]`` pairs."""
    a = as_array(m)
    return [[[float(x.real), float(x.imag)] for x in row] for row in a]


def decode_matrix(data, what: str = "matrix") -> np.ndarray:
    if not isinstance(data, list) or not data:
        raise SchemaError(f"{what}: expected a non-empty array of rows")
    n = len(data)
    out = np.empty((n, len(data[0])), dtype=np.complex128)
    for i, row in enumerate(data):
        if not isinstance(row, list) or len(row) != out.shape[1]:
            raise SchemaError(f"{what}: ragged rows")
        for j, cell in enumerate(row):
            if (
                not isinstance(cell, list)
                or len(cell) != 2
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in cell)
            ):
                raise SchemaError(f"{what}[{i}][{j}]: expected an [re, im] pair")
            out[i, j] = complex(cell[0], cell[1])
    return out


def _decode_square(data, dim: int, what: str) -> np.ndarray:
    m = decode_matrix(data, what)
    if m.shape != (dim, dim):
        raise SchemaError(f"{what}: shape {m.shape} != ({dim}, {dim})")
    return m


def _num(data, what: str) -> float:
    if data == "inf":
        return math.inf
    if data == "-inf":
        return -math.inf
    if isinstance(data, bool) or not isinstance(data, (int, float)):
        raise SchemaError(f"{what}: expected a number")
    return float(data)


# ---------------------------------------------------------------------------
# problem files


@dataclass(frozen=True)
class Problem:
    """A parsed problem file.

    ``spec`` is always one of the evaluable objective families (a
    ``Discrimination`` document is lowered to its linear objective, with
    the raw ensemble retained in ``ensemble``).  ``channel`` is present
    when the document carried one in any encoding; ``povm`` is retained
    when that encoding was a measurement.
    """

    version: str
    dims: tuple[int, int, int]
    spec: ObjectiveSpec
    ensemble: Ensemble | None
    channel: ChoiOp | None
    povm: Povm | None
    tol: Tolerances


def _require(data: dict, key: str, what: str):
    if key not in data:
        raise SchemaError(f"{what}: missing key {key!r}")
    return data[key]


def _parse_dims(data) -> tuple[int, int, int]:
    if not isinstance(data, dict):
        raise SchemaError("dims: expected an object")
    out = []
    for key in ("in", "out", "env"):
        v = _require(data, key, "dims")
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise SchemaError(f"dims.{key}: expected a positive integer")
        out.append(v)
    return tuple(out)  # type: ignore[return-value]


def _parse_tolerances(data) -> Tolerances:
    if data is None:
        return TOL
    if not isinstance(data, dict):
        raise SchemaError("tolerances: expected an object")
    known = {f.name for f in fields(Tolerances)}
    bad = set(data) - known
    if bad:
        raise SchemaError(f"tolerances: unknown keys {sorted(bad)}")
    vals = {}
    for k, v in data.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)) or v <= 0:
            raise SchemaError(f"tolerances.{k}: expected a positive number")
        vals[k] = float(v)
    return Tolerances(**vals)


def _parse_objective(
    data, dims: tuple[int, int, int], tol: Tolerances
) -> tuple[ObjectiveSpec, Ensemble | None]:
    if not isinstance(data, dict):
        raise SchemaError("objective: expected an object")
    family = _require(data, "family", "objective")
    if family not in FAMILIES:
        raise SchemaError(f"objective.family: unknown family {family!r}")
    d_in, d_out, d_env = dims

    if family == "Linear":
        h0 = _decode_square(_require(data, "h0", "objective"), d_out * d_in, "objective.h0")
        return LinearObjective(HermOp(h0, tol), d_out, d_in), None

    if family == "Discrimination":
        if d_env != 1:
            raise SchemaError("Discrimination: dims.env must be 1")
        probs = _require(data, "probs", "objective")
        states = _require(data, "states", "objective")
        if not isinstance(probs, list) or not isinstance(states, list):
            raise SchemaError("Discrimination: probs and states must be arrays")
        if len(states) != d_out:
            raise SchemaError(
                f"Discrimination: {len(states)} states but dims.out = {d_out}"
            )
        mats = tuple(
            HermOp(_decode_square(s, d_in, f"objective.states[{k}]"), tol)
            for k, s in enumerate(states)
        )
        ens = Ensemble(np.array([_num(p, "objective.probs") for p in probs]), mats, tol)
        return LinearObjective(discrimination_objective(ens, tol), d_out, d_in), ens

    if family == "FidelitySquaredEnsemble":
        if d_env != 1:
            raise SchemaError("FidelitySquaredEnsemble: dims.env must be 1")
        probs = _require(data, "probs", "objective")
        ins = _require(data, "inputs", "objective")
        outs = _require(data, "targets", "objective")
        if not (isinstance(probs, list) and isinstance(ins, list) and isinstance(outs, list)):
            raise SchemaError("FidelitySquaredEnsemble: probs/inputs/targets must be arrays")
        spec = FidelitySquaredObjective(
            np.array([_num(p, "objective.probs") for p in probs]),
            tuple(
                HermOp(_decode_square(s, d_in, f"objective.inputs[{k}]"), tol)
                for k, s in enumerate(ins)
            ),
            tuple(
                HermOp(_decode_square(s, d_out, f"objective.targets[{k}]"), tol)
                for k, s in enumerate(outs)
            ),
            tol,
        )
        return spec, None

    rho = BipartiteState(
        HermOp(_decode_square(_require(data, "rho", "objective"), d_in * d_env, "objective.rho"), tol),
        d_in,
        d_env,
        tol,
    )
    sigma = BipartiteState(
        HermOp(_decode_square(_require(data, "sigma", "objective"), d_out * d_env, "objective.sigma"), tol),
        d_out,
        d_env,
        tol,
    )
    cls = {
        "Fidelity": FidelityObjective,
        "TraceDistance": TraceDistanceObjective,
        "RelativeEntropy": RelativeEntropyObjective,
    }[family]
    return cls(rho, sigma), None


def _parse_channel(
    data, dims: tuple[int, int, int], tol: Tolerances
) -> tuple[ChoiOp | None, Povm | None]:
    if data is None:
        return None, None
    if not isinstance(data, dict):
        raise SchemaError("channel: expected an object")
    kind = _require(data, "kind", "channel")
    d_in, d_out, _ = dims
    if kind == "choi":
        m = _decode_square(_require(data, "matrix", "channel"), d_out * d_in, "channel.matrix")
        return ChoiOp(HermOp(m, tol), d_out, d_in, tol), None
    if kind == "kraus":
        ops = _require(data, "operators", "channel")
        if not isinstance(ops, list) or not ops:
            raise SchemaError("channel.operators: expected a non-empty array")
        mats = []
        for k, op in enumerate(ops):
            m = decode_matrix(op, f"channel.operators[{k}]")
            if m.shape != (d_out, d_in):
                raise SchemaError(
                    f"channel.operators[{k}]: shape {m.shape} != ({d_out}, {d_in})"
                )
            mats.append(m)
        return choi_from_kraus(mats, tol), None
    if kind == "povm":
        els = _require(data, "elements", "channel")
        if not isinstance(els, list) or len(els) != d_out:
            raise SchemaError(f"channel.elements: expected {d_out} matrices")
        povm = Povm(
            tuple(
                HermOp(_decode_square(e, d_in, f"channel.elements[{k}]"), tol)
                for k, e in enumerate(els)
            ),
            tol,
        )
        return q2c_choi(povm, tol), povm
    raise SchemaError(f"channel.kind: unknown kind {kind!r}")


def parse_problem(data) -> Problem:
    """Validate and load a problem document (parsed JSON tree)."""
    if not isinstance(data, dict):
        raise SchemaError("problem: expected a JSON object")
    version = _require(data, "version", "problem")
    if version != VERSION:
        raise SchemaError(f"problem.version: expected {VERSION!r}, got {version!r}")
    known = {"version", "dims", "objective", "channel", "tolerances"}
    bad = set(data) - known
    if bad:
        raise SchemaError(f"problem: unknown keys {sorted(bad)}")
    dims = _parse_dims(_require(data, "dims", "problem"))
    tol = _parse_tolerances(data.get("tolerances"))
    try:
        spec, ens = _parse_objective(_require(data, "objective", "problem"), dims, tol)
        channel, povm = _parse_channel(data.get("channel"), dims, tol)
    except SchemaError:
        raise
    except (ValueError, TypeError) as exc:
        raise SchemaError(f"problem: {exc}") from exc
    return Problem(version, dims, spec, ens, channel, povm, tol)


def loads_problem(text: str) -> Problem:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    return parse_problem(data)


def problem_to_dict(
    dims: tuple[int, int, int],
    objective: dict,
    channel: dict | None = None,
    tolerances: dict | None = None,
) -> dict:
    """Assemble a problem document with canonical key order."""
    doc = {
        "version": VERSION,
        "dims": {"in": dims[0], "out": dims[1], "env": dims[2]},
        "objective": objective,
    }
    if channel is not None:
        doc["channel"] = channel
    if tolerances is not None:
        doc["tolerances"] = tolerances
    return doc


# ---------------------------------------------------------------------------
# results


def subgrad_to_dict(res: SubgradResult) -> dict:
    return {
        "value": res.value,
        "exact_gradient": res.exact_gradient,
        "valid_subgradient": res.valid_subgradient,
        "inclusion_ok": res.inclusion_ok,
        "inclusion_defect": res.inclusion_defect,
    }


def certificate_to_dict(cert: Certificate, res: SubgradResult | None = None) -> dict:
    doc = {"verdict": cert.verdict}
    if res is not None:
        doc.update(subgrad_to_dict(res))
    doc.update(
        {
            "bound": cert.bound,
            "epsilon": cert.epsilon,
            "herm_defect": cert.herm_defect,
            "min_eig": cert.min_eig,
            "scale": cert.scale,
            "z": encode_matrix(cert.z),
        }
    )
    return doc


def certificate_from_dict(data) -> Certificate:
    """Rebuild (and re-validate) a certificate from its document form."""
    if not isinstance(data, dict):
        raise SchemaError("certificate: expected an object")
    verdict = _require(data, "verdict", "certificate")
    if verdict not in ("CertifiedOptimal", "CertifiedNearOptimal", "NotCertified"):
        raise SchemaError(f"certificate.verdict: unknown verdict {verdict!r}")
    z = decode_matrix(_require(data, "z", "certificate"), "certificate.z")
    return Certificate(
        verdict=verdict,
        z=HermOp(z),
        herm_defect=_num(_require(data, "herm_defect", "certificate"), "herm_defect"),
        min_eig=_num(_require(data, "min_eig", "certificate"), "min_eig"),
        epsilon=_num(_require(data, "epsilon", "certificate"), "epsilon"),
        bound=_num(_require(data, "bound", "certificate"), "bound"),
        scale=_num(_require(data, "scale", "certificate"), "scale"),
    )


def hykl_to_dict(rep: HyklReport) -> dict:
    return {
        "optimal": rep.optimal,
        "herm_defect": rep.herm_defect,
        "min_eigs": list(rep.min_eigs),
        "scale": rep.scale,
        "r": encode_matrix(rep.r),
    }


def trace_to_dict(trace) -> dict:
    return {
        "best_value": trace.best_value,
        "iterations": trace.iterations,
        "converged": trace.converged,
        "final_bound": trace.final_bound,
        "gap": trace.gap,
        "values": list(trace.values),
        "best_choi": encode_matrix(trace.best_choi.mat),
    }
