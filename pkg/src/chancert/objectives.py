"""Objective families for convex channel optimization.

Each family evaluates ``f(J)`` on the Choi operator of a channel and
returns a subgradient element ``H`` alongside the value, packaged as a
:class:`SubgradResult`.  The five families:

* ``Linear`` — ``f(J) = <H0, J>`` for a fixed Hermitian ``H0``; covers
  minimum-error state discrimination through ``discrimination_objective``.
* ``Fidelity`` — ``f(J) = -F(sigma, (Phi (x) 1)(rho))`` for bipartite
  states sharing an environment factor.
* ``FidelitySquaredEnsemble`` — ``f(J) = -sum_k p_k F(sigma_k, Phi(rho_k))^2``
  over an ensemble of input/target pairs with no environment.
* ``TraceDistance`` — ``f(J) = ||sigma - (Phi (x) 1)(rho)||_1``.
* ``RelativeEntropy`` — ``f(J) = D(sigma || (Phi (x) 1)(rho))``, with
  ``math.inf`` as the (sentinel) value when the image condition fails.

Sign convention for subgradients: all objectives are *minimized*, and the
returned ``H`` satisfies ``f(J') - f(J) >= <H, J' - J>`` for every channel
``J'`` in the domain.  For the nonsmooth / composed families this makes
``H`` equal to minus the evaluation-map adjoint applied to a dual witness
of the outer convex function; the minus sign comes from the chain rule
through ``sigma - (Phi (x) 1)(rho)`` and is load-bearing (tests pin it via
the subgradient inequality).

``exact_gradient`` marks points where the objective is differentiable and
``H`` is the gradient; ``valid_subgradient`` marks ``H`` as a genuine
member of the subdifferential.  They differ only for the trace distance,
where a spectral-degenerate difference operator still yields a valid
subgradient (any sign completion works) but not a unique gradient.  For
the fidelity families a rank-deficient sandwich means the subdifferential
is empty and both flags are false; the certifier refuses verdicts there.
"""

from __future__ import annotations

import math
from dataclasses import InitVar, dataclass
from typing import ClassVar, Union

import numpy as np

from .choi import (
    BipartiteState,
    ChoiOp,
    apply_from_choi,
    compress_environment,
    eval_map_adjoint,
    eval_map_apply,
)
from .linalg import (
    TOL,
    DimensionMismatchError,
    HermOp,
    SingularLogError,
    Tolerances,
    dlog,
    fidelity,
    image_inclusion_defect,
    mat_sqrt,
    partial_trace,
    rel_entropy,
    spectral_norm,
)

__all__ = [
    "InvalidEnsembleError",
    "Ensemble",
    "SubgradResult",
    "LinearObjective",
    "FidelityObjective",
    "FidelitySquaredObjective",
    "TraceDistanceObjective",
    "RelativeEntropyObjective",
    "ObjectiveSpec",
    "objective_dims",
    "linear_eval",
    "discrimination_objective",
    "fidelity_objective",
    "fidelity_sq_objective",
    "trace_dist_objective",
    "rel_entropy_objective",
    "evaluate",
]


class InvalidEnsembleError(ValueError):
    """Ensemble data fails probability or density-operator validation."""


def _check_density(op: HermOp, tol: Tolerances, what: str) -> None:
    low = float(np.min(np.linalg.eigvalsh(op.mat)))
    if low < -tol.tau_psd * (1.0 + op.norm()):
        raise InvalidEnsembleError(f"{what} is not PSD (min eigenvalue {low:.3e})")
    tr = float(np.real(np.trace(op.mat)))
    if abs(tr - 1.0) > tol.tau_num * 10:
        raise InvalidEnsembleError(f"{what} has trace {tr!r}, expected 1")


@dataclass(frozen=True)
class Ensemble:
    """Probability vector plus density operators on a common space."""

    probs: np.ndarray
    states: tuple[HermOp, ...]
    tol: InitVar[Tolerances | None] = None

    def __post_init__(self, tol: Tolerances | None) -> None:
        t = tol or TOL
        p = np.asarray(self.probs, dtype=np.float64).reshape(-1)
        states = tuple(s if isinstance(s, HermOp) else HermOp(s, t) for s in self.states)
        if p.size != len(states) or p.size == 0:
            raise InvalidEnsembleError(
                f"{p.size} probabilities for {len(states)} states"
            )
        if np.min(p) < -t.tau_num:
            raise InvalidEnsembleError(f"negative probability {float(np.min(p))!r}")
        if abs(float(np.sum(p)) - 1.0) > t.tau_num * 10:
            raise InvalidEnsembleError(f"probabilities sum to {float(np.sum(p))!r}")
        d = states[0].dim
        for k, s in enumerate(states):
            if s.dim != d:
                raise InvalidEnsembleError("ensemble states have mixed dimensions")
            _check_density(s, t, f"ensemble state {k}")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "states", states)

    @property
    def dim(self) -> int:
        return self.states[0].dim

    @property
    def outcomes(self) -> int:
        return len(self.states)

    def mean(self) -> np.ndarray:
        """The average state ``sum_k p_k rho_k``."""
        acc = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for p, s in zip(self.probs, self.states):
            acc += p * s.mat
        return acc


@dataclass(frozen=True)
class SubgradResult:
    """Value and subgradient element of an objective at a channel.

    ``value`` may be ``math.inf`` (relative entropy only); callers must
    never feed an infinite value back into arithmetic.  ``witness`` is the
    dual witness on the output space when one exists (trace distance).
    ``inclusion_defect`` quantifies how much of the target state lives
    outside the image of the channel output; the certifier folds a failed
    inclusion into NotCertified.
    """

    value: float
    h: HermOp
    exact_gradient: bool
    valid_subgradient: bool
    witness: HermOp | None = None
    inclusion_ok: bool = True
    inclusion_defect: float = 0.0


@dataclass(frozen=True)
class LinearObjective:
    """``f(J) = <H0, J>`` on channels from ``C^dim_in`` to ``C^dim_out``."""

    family: ClassVar[str] = "Linear"

    h0: HermOp
    dim_out: int
    dim_in: int

    def __post_init__(self) -> None:
        if self.h0.dim != self.dim_out * self.dim_in:
            raise DimensionMismatchError(
                f"H0 dim {self.h0.dim} != dim_out*dim_in = {self.dim_out * self.dim_in}"
            )


@dataclass(frozen=True)
class FidelityObjective:
    """``f(J) = -F(sigma, (Phi (x) 1)(rho))`` with a shared environment."""

    family: ClassVar[str] = "Fidelity"

    rho: BipartiteState
    sigma: BipartiteState

    def __post_init__(self) -> None:
        if self.rho.dim_env != self.sigma.dim_env:
            raise DimensionMismatchError(
                f"environment dims differ: {self.rho.dim_env} vs {self.sigma.dim_env}"
            )


@dataclass(frozen=True)
class FidelitySquaredObjective:
    """``f(J) = -sum_k p_k F(sigma_k, Phi(rho_k))^2`` over ensemble pairs."""

    family: ClassVar[str] = "FidelitySquaredEnsemble"

    probs: np.ndarray
    inputs: tuple[HermOp, ...]
    targets: tuple[HermOp, ...]
    tol: InitVar[Tolerances | None] = None

    def __post_init__(self, tol: Tolerances | None) -> None:
        t = tol or TOL
        p = np.asarray(self.probs, dtype=np.float64).reshape(-1)
        ins = tuple(s if isinstance(s, HermOp) else HermOp(s, t) for s in self.inputs)
        outs = tuple(s if isinstance(s, HermOp) else HermOp(s, t) for s in self.targets)
        if not (p.size == len(ins) == len(outs)) or p.size == 0:
            raise InvalidEnsembleError("probs, inputs, targets must have equal length")
        if np.min(p) < -t.tau_num:
            raise InvalidEnsembleError(f"negative weight {float(np.min(p))!r}")
        if abs(float(np.sum(p)) - 1.0) > t.tau_num * 10:
            raise InvalidEnsembleError(f"weights sum to {float(np.sum(p))!r}")
        if any(s.dim != ins[0].dim for s in ins) or any(s.dim != outs[0].dim for s in outs):
            raise InvalidEnsembleError("ensemble pair dimensions are mixed")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "inputs", ins)
        object.__setattr__(self, "targets", outs)

    @property
    def pairs(self):
        return tuple(zip(self.probs, self.inputs, self.targets))


@dataclass(frozen=True)
class TraceDistanceObjective:
    """``f(J) = ||sigma - (Phi (x) 1)(rho)||_1`` with a shared environment."""

    family: ClassVar[str] = "TraceDistance"

    rho: BipartiteState
    sigma: BipartiteState

    def __post_init__(self) -> None:
        if self.rho.dim_env != self.sigma.dim_env:
            raise DimensionMismatchError(
                f"environment dims differ: {self.rho.dim_env} vs {self.sigma.dim_env}"
            )


@dataclass(frozen=True)
class RelativeEntropyObjective:
    """``f(J) = D(sigma || (Phi (x) 1)(rho))`` with a shared environment."""

    family: ClassVar[str] = "RelativeEntropy"

    rho: BipartiteState
    sigma: BipartiteState

    def __post_init__(self) -> None:
        if self.rho.dim_env != self.sigma.dim_env:
            raise DimensionMismatchError(
                f"environment dims differ: {self.rho.dim_env} vs {self.sigma.dim_env}"
            )


ObjectiveSpec = Union[
    LinearObjective,
    FidelityObjective,
    FidelitySquaredObjective,
    TraceDistanceObjective,
    RelativeEntropyObjective,
]


def objective_dims(spec: ObjectiveSpec) -> tuple[int, int]:
    """Channel dimensions ``(dim_out, dim_in)`` demanded by an objective."""
    if isinstance(spec, LinearObjective):
        return spec.dim_out, spec.dim_in
    if isinstance(spec, FidelitySquaredObjective):
        return spec.targets[0].dim, spec.inputs[0].dim
    return spec.sigma.dim_sys, spec.rho.dim_sys


def linear_eval(h0: HermOp, j: ChoiOp, tol: Tolerances = TOL) -> SubgradResult:
    """Value and (constant) gradient of the linear objective ``<H0, J>``."""
    if h0.dim != j.op.dim:
        raise DimensionMismatchError(f"H0 dim {h0.dim} != Choi dim {j.op.dim}")
    value = float(np.real(np.vdot(h0.mat, j.mat)))
    return SubgradResult(value, h0, exact_gradient=True, valid_subgradient=True)


def discrimination_objective(ens: Ensemble, tol: Tolerances = TOL) -> HermOp:
    """The Hermitian ``H0`` whose linear objective is the discrimination error.

    ``H0`` is block diagonal on ``C^m (x) C^d`` with blocks
    ``(rho_bar - p_k rho_k)^T``; pairing it with the Choi operator of a
    measure-and-record channel gives that measurement's error probability
    ``1 - sum_k p_k <P_k, rho_k>``.
    """
    d, m = ens.dim, ens.outcomes
    mean = ens.mean()
    h0 = np.zeros((m * d, m * d), dtype=np.complex128)
    for k, (p, s) in enumerate(zip(ens.probs, ens.states)):
        h0[k * d : (k + 1) * d, k * d : (k + 1) * d] = (mean - p * s.mat).T
    return HermOp(h0, tol)


def _fid_direction(
    sigma: np.ndarray, tau: np.ndarray, tol: Tolerances
) -> tuple[np.ndarray, bool]:
    """Fidelity dual direction ``G = sqrt(s) (sqrt(s) t sqrt(s))^{-1/2} sqrt(s)``.

    The inverse root is Moore-Penrose on the relative-cutoff support.  The
    boolean reports whether the sandwiched operator is positive definite on
    the image of ``sigma`` (same support rank); when it is not the
    differentiability argument breaks down and the subdifferential is empty.
    """
    s = mat_sqrt(HermOp(sigma, tol), tol).mat
    m = s @ tau @ s
    w, v = np.linalg.eigh((m + m.conj().T) / 2.0)
    top = float(np.max(w)) if w.size else 0.0
    kept = w > tol.tau_rank * max(top, 0.0)
    inv_root = np.zeros_like(w)
    inv_root[kept] = 1.0 / np.sqrt(w[kept])
    g = s @ ((v * inv_root) @ v.conj().T) @ s
    ws = np.linalg.eigvalsh((sigma + sigma.conj().T) / 2.0)
    tops = float(np.max(ws)) if ws.size else 0.0
    rank_sigma = int(np.sum(ws > tol.tau_rank * max(tops, 0.0)))
    return (g + g.conj().T) / 2.0, int(np.sum(kept)) == rank_sigma


def fidelity_objective(
    rho: BipartiteState, sigma: BipartiteState, j: ChoiOp, tol: Tolerances = TOL
) -> SubgradResult:
    """Negated fidelity between the target and the pushed-through state.

    The environment is compressed to the image of ``Tr_sys(rho)`` first, so
    the reduced input is positive definite on the retained factor; value and
    subgradient are invariant under that isometric squeeze.
    """
    rho_c, sigma_c = compress_environment(rho, sigma, tol)
    tau = eval_map_apply(rho_c, j)
    tau_h = HermOp(tau, tol)
    value = -fidelity(sigma_c.op, tau_h, tol)
    g, exact = _fid_direction(sigma_c.mat, tau_h.mat, tol)
    h = HermOp(-0.5 * eval_map_adjoint(rho_c, g, j.dim_out).mat)
    defect = image_inclusion_defect(sigma_c.op, tau_h, tol)
    ok = defect <= tol.tau_rank * spectral_norm(sigma_c.mat)
    return SubgradResult(
        value,
        h,
        exact_gradient=exact,
        valid_subgradient=exact,
        inclusion_ok=ok,
        inclusion_defect=defect,
    )


def fidelity_sq_objective(
    pairs: FidelitySquaredObjective, j: ChoiOp, tol: Tolerances = TOL
) -> SubgradResult:
    """Negated ensemble-averaged squared fidelity.

    Squaring each block multiplies the fidelity dual direction by the block
    fidelity itself (chain rule through ``x -> x^2``), so the subgradient is
    ``H = -sum_k p_k F_k G_k (x) rho_k^T``.
    """
    d_out, d_in = objective_dims(pairs)
    if (d_out, d_in) != (j.dim_out, j.dim_in):
        raise DimensionMismatchError(
            f"ensemble dims ({d_out}, {d_in}) != channel dims ({j.dim_out}, {j.dim_in})"
        )
    value = 0.0
    h = np.zeros((d_out * d_in, d_out * d_in), dtype=np.complex128)
    exact = True
    ok = True
    defect = 0.0
    for p, rho_k, sig_k in pairs.pairs:
        tau_k = apply_from_choi(j, rho_k.mat)
        tau_h = HermOp(tau_k, tol)
        f_k = fidelity(sig_k, tau_h, tol)
        g_k, ex_k = _fid_direction(sig_k.mat, tau_h.mat, tol)
        value -= p * f_k * f_k
        h -= p * f_k * np.kron(g_k, rho_k.mat.T)
        exact = exact and ex_k
        d_k = image_inclusion_defect(sig_k, tau_h, tol)
        defect = max(defect, d_k)
        ok = ok and d_k <= tol.tau_rank * spectral_norm(sig_k.mat)
    return SubgradResult(
        value,
        HermOp(h, tol),
        exact_gradient=exact,
        valid_subgradient=exact,
        inclusion_ok=ok,
        inclusion_defect=defect,
    )


def trace_dist_objective(
    rho: BipartiteState, sigma: BipartiteState, j: ChoiOp, tol: Tolerances = TOL
) -> SubgradResult:
    """Trace distance between the target and the pushed-through state.

    The witness ``Y = sum_k sign(lambda_k) Pi_k`` is built from the spectral
    decomposition of the difference with ``sign(0) = 0`` (eigenvalues within
    ``tau_rank * norm`` of zero count as zero).  Any such ``Y`` is a valid
    trace-norm dual witness, so ``valid_subgradient`` is always true; the
    gradient is only exact when no eigenvalue is treated as zero, since a
    kernel leaves the witness non-unique.
    """
    if sigma.dim_sys != j.dim_out:
        raise DimensionMismatchError(
            f"target system dim {sigma.dim_sys} != channel output dim {j.dim_out}"
        )
    tau = eval_map_apply(rho, j)
    diff = sigma.mat - tau
    diff = (diff + diff.conj().T) / 2.0
    w, v = np.linalg.eigh(diff)
    value = float(np.sum(np.abs(w)))
    nrm = float(np.max(np.abs(w))) if w.size else 0.0
    thr = tol.tau_rank * nrm
    signs = np.where(w > thr, 1.0, np.where(w < -thr, -1.0, 0.0))
    y = (v * signs) @ v.conj().T
    exact = bool(np.all(np.abs(w) > thr))
    h = HermOp(-eval_map_adjoint(rho, y, j.dim_out).mat)
    return SubgradResult(
        value,
        h,
        exact_gradient=exact,
        valid_subgradient=True,
        witness=HermOp(y),
    )


def rel_entropy_objective(
    rho: BipartiteState, sigma: BipartiteState, j: ChoiOp, tol: Tolerances = TOL
) -> SubgradResult:
    """Relative entropy from the target to the pushed-through state.

    Returns ``math.inf`` (with zero ``H`` and both flags false) when the
    target has weight outside the reachable image — either outside
    ``1 (x) im(Tr_sys rho)``, which no channel can fix, or outside the image
    of the current output.  When finite, the gradient is the log-derivative
    taken on the image of ``sigma`` and pulled back through the evaluation
    map; the objective is differentiable on that domain.
    """
    if sigma.dim_sys != j.dim_out:
        raise DimensionMismatchError(
            f"target system dim {sigma.dim_sys} != channel output dim {j.dim_out}"
        )
    d_out = j.dim_out
    zero_h = HermOp(np.zeros((d_out * rho.dim_sys, d_out * rho.dim_sys)))

    # Weight of sigma outside Y (x) im(Tr_sys rho) makes the objective
    # identically infinite; detect before the squeeze discards those rows.
    red = partial_trace(rho.mat, (rho.dim_sys, rho.dim_env), 0)
    reach = HermOp(np.kron(np.eye(d_out), (red + red.conj().T) / 2.0), tol)
    pre_defect = image_inclusion_defect(sigma.op, reach, tol)
    if pre_defect > tol.tau_rank * spectral_norm(sigma.mat):
        return SubgradResult(
            math.inf,
            zero_h,
            exact_gradient=False,
            valid_subgradient=False,
            inclusion_ok=False,
            inclusion_defect=pre_defect,
        )

    rho_c, sigma_c = compress_environment(rho, sigma, tol)
    tau_h = HermOp(eval_map_apply(rho_c, j), tol)
    value = rel_entropy(sigma_c.op, tau_h, tol)
    defect = image_inclusion_defect(sigma_c.op, tau_h, tol)
    if math.isinf(value):
        return SubgradResult(
            math.inf,
            zero_h,
            exact_gradient=False,
            valid_subgradient=False,
            inclusion_ok=False,
            inclusion_defect=defect,
        )

    # Restrict to the image of sigma, differentiate the log there, embed back.
    ws, vs = np.linalg.eigh(sigma_c.mat)
    tops = float(np.max(ws)) if ws.size else 0.0
    a = vs[:, ws > tol.tau_rank * max(tops, 0.0)]
    try:
        dl = dlog(
            HermOp(a.conj().T @ tau_h.mat @ a, tol),
            HermOp(a.conj().T @ sigma_c.mat @ a, tol),
            tol,
        )
    except SingularLogError:
        # Finite value but the compressed output is numerically singular on
        # im(sigma); no trustworthy gradient at this point.
        return SubgradResult(
            value,
            zero_h,
            exact_gradient=False,
            valid_subgradient=False,
            inclusion_ok=True,
            inclusion_defect=defect,
        )
    g = a @ dl.mat @ a.conj().T
    h = HermOp(-eval_map_adjoint(rho_c, g, d_out).mat)
    return SubgradResult(
        value,
        h,
        exact_gradient=True,
        valid_subgradient=True,
        inclusion_ok=True,
        inclusion_defect=defect,
    )


def evaluate(spec: ObjectiveSpec, j: ChoiOp, tol: Tolerances = TOL) -> SubgradResult:
    """Evaluate any objective family at a channel."""
    d_out, d_in = objective_dims(spec)
    if (d_out, d_in) != (j.dim_out, j.dim_in):
        raise DimensionMismatchError(
            f"objective dims ({d_out}, {d_in}) != channel dims ({j.dim_out}, {j.dim_in})"
        )
    if isinstance(spec, LinearObjective):
        return linear_eval(spec.h0, j, tol)
    if isinstance(spec, FidelityObjective):
        return fidelity_objective(spec.rho, spec.sigma, j, tol)
    if isinstance(spec, FidelitySquaredObjective):
        return fidelity_sq_objective(spec, j, tol)
    if isinstance(spec, TraceDistanceObjective):
        return trace_dist_objective(spec.rho, spec.sigma, j, tol)
    if isinstance(spec, RelativeEntropyObjective):
        return rel_entropy_objective(spec.rho, spec.sigma, j, tol)
    raise TypeError(f"unknown objective spec {type(spec).__name__}")
