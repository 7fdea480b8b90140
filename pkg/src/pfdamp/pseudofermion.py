"""Pseudo-fermion operator families and their biorthogonal structure.

A pseudo-fermion (PF) pair is a pair of operators (a, b) with b != a^dag
obeying the deformed anticommutation rules {a, b} = 1, a^2 = b^2 = 0.  An
N-mode family lives on a 2^N-dimensional space with {a_j, b_k} = delta_jk
and all same-type anticommutators vanishing.

From a valid family the module constructs the two eigenbases of the number
operators N_j = b_j a_j and their adjoints (the phi / psi families), the
metric operators S_phi and S_psi that map one family onto the other, and
the Hermitian counterparts n_j = S_psi^{1/2} N_j S_phi^{1/2}.

Index convention: basis states are labelled by occupation tuples
(n_1, ..., n_N) flattened as k = sum_j n_j 2^{j-1} (mode 1 is the least
significant bit), and raising products apply the mode-1 operator first.
Inner products are antilinear in the first argument.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from . import matfile
from .linalg import (
    ShapeError,
    anticommutator,
    as_matrix,
    as_vector,
    frobenius_norm,
    hermitian_eig,
    inverse,
    sqrtm_psd,
)

__all__ = [
    "InvalidFamilyError",
    "PFPair",
    "PFValidity",
    "PFFamily",
    "BiorthogonalSystem",
    "MetricPair",
    "NumberOps",
    "IntertwiningReport",
    "validate_pf",
    "validate_family",
    "canonical_fermions",
    "from_similarity",
    "vacua",
    "occupation",
    "flat_index",
    "build_bases",
    "metric_operators",
    "number_operators",
    "intertwining_check",
    "hermitize",
    "psi_inner_product",
    "export_family",
    "import_family",
]

#: validity tolerance grows with dimension (entrywise roundoff accumulates)
VALIDITY_TOL_PER_DIM = 1e-10

_MAX_MODES = 6


class InvalidFamilyError(ValueError):
    """Operators do not form a valid pseudo-fermion family."""


@dataclass
class PFPair:
    """A lowering/raising operator pair (a, b) on a common space."""

    a: np.ndarray
    b: np.ndarray

    @property
    def dim(self) -> int:
        return self.a.shape[0]


@dataclass
class PFValidity:
    """Residuals of the defining relations for one pair."""

    residual_ab: float  # ||{a, b} - I||
    residual_aa: float  # ||a^2||
    residual_bb: float  # ||b^2||
    tol: float
    passed: bool


@dataclass
class PFFamily:
    """N operator pairs on a common 2^N-dimensional space."""

    n_modes: int
    pairs: list[PFPair]

    @property
    def dim(self) -> int:
        return self.pairs[0].dim

    def a(self, j: int) -> np.ndarray:
        """Lowering operator of mode ``j`` (1-based)."""
        return self.pairs[j - 1].a

    def b(self, j: int) -> np.ndarray:
        """Raising operator of mode ``j`` (1-based)."""
        return self.pairs[j - 1].b


@dataclass
class BiorthogonalSystem:
    """The paired eigenbases {phi_k} and {psi_k} of N_j and N_j^dag.

    ``phis[k]`` carries the occupation pattern ``occupation(k, n_modes)``;
    the two families satisfy <phi_k, psi_n> = delta_kn.
    """

    n_modes: int
    phis: list[np.ndarray]
    psis: list[np.ndarray]

    @property
    def dim(self) -> int:
        return len(self.phis)


@dataclass
class MetricPair:
    """The positive operators S_phi = sum |phi><phi| and S_psi = S_phi^{-1}."""

    s_phi: np.ndarray
    s_psi: np.ndarray


@dataclass
class NumberOps:
    """Number operators N_j = b_j a_j and their adjoints."""

    n_ops: list[np.ndarray]
    n_dagger_ops: list[np.ndarray]

    @property
    def n_modes(self) -> int:
        return len(self.n_ops)


@dataclass
class IntertwiningReport:
    """Residuals of S_psi N_j = N_j^dag S_psi and S_phi N_j^dag = N_j S_phi."""

    residuals_psi: list[float]
    residuals_phi: list[float]

    @property
    def max_residual(self) -> float:
        return max(self.residuals_psi + self.residuals_phi)


def validate_pf(a, b, tol: float | None = None) -> PFValidity:
    """Check the pair relations {a,b} = I, a^2 = 0, b^2 = 0.

    The default tolerance scales with the dimension: 1e-10 * dim.
    """
    am, bm = as_matrix(a), as_matrix(b)
    if am.shape != bm.shape:
        raise ShapeError(f"dimension mismatch: {am.shape[0]} vs {bm.shape[0]}")
    d = am.shape[0]
    if tol is None:
        tol = VALIDITY_TOL_PER_DIM * d
    identity = np.eye(d, dtype=complex)
    r_ab = frobenius_norm(anticommutator(am, bm) - identity)
    r_aa = frobenius_norm(am @ am)
    r_bb = frobenius_norm(bm @ bm)
    return PFValidity(
        residual_ab=r_ab,
        residual_aa=r_aa,
        residual_bb=r_bb,
        tol=tol,
        passed=bool(max(r_ab, r_aa, r_bb) <= tol),
    )


def validate_family(family: PFFamily, tol: float | None = None) -> PFValidity:
    """Worst-case residuals over all mode pairs of the family.

    ``residual_ab`` is max_jk ||{a_j, b_k} - delta_jk I||, the others the
    corresponding same-type maxima including cross-mode terms.
    """
    d = family.dim
    if tol is None:
        tol = VALIDITY_TOL_PER_DIM * d
    identity = np.eye(d, dtype=complex)
    r_ab = r_aa = r_bb = 0.0
    for j, pj in enumerate(family.pairs):
        for k, pk in enumerate(family.pairs):
            target = identity if j == k else np.zeros((d, d))
            r_ab = max(r_ab, frobenius_norm(anticommutator(pj.a, pk.b) - target))
            r_aa = max(r_aa, frobenius_norm(anticommutator(pj.a, pk.a)))
            r_bb = max(r_bb, frobenius_norm(anticommutator(pj.b, pk.b)))
    return PFValidity(
        residual_ab=r_ab,
        residual_aa=r_aa,
        residual_bb=r_bb,
        tol=tol,
        passed=bool(max(r_ab, r_aa, r_bb) <= tol),
    )


def canonical_fermions(n_modes: int) -> PFFamily:
    """Ordinary fermion modes on 2^N dimensions (b_j = a_j^dag).

    Tensor construction with alternating signs on the lower modes: mode j is
    ``I x ... x I x sigma_minus x Z x ... x Z`` with the lowering factor in
    slot j (counted from the least significant position) and a diag(1, -1)
    string below it.  The sign string is what makes distinct modes
    anticommute rather than commute.
    """
    if not 1 <= n_modes <= _MAX_MODES:
        raise ValueError(f"n_modes must be in [1, {_MAX_MODES}], got {n_modes}")
    lower = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    sign = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
    eye2 = np.eye(2, dtype=complex)
    pairs = []
    for j in range(1, n_modes + 1):
        op = np.eye(1, dtype=complex)
        for slot in range(n_modes, 0, -1):
            if slot > j:
                factor = eye2
            elif slot == j:
                factor = lower
            else:
                factor = sign
            op = np.kron(op, factor)
        pairs.append(PFPair(a=op, b=op.conj().T))
    return PFFamily(n_modes=n_modes, pairs=pairs)


def from_similarity(t, n_modes: int) -> PFFamily:
    """Deform canonical fermions by an invertible similarity map.

    a_j = T A_j T^{-1} and b_j = T A_j^dag T^{-1}; the family relations are
    preserved exactly (up to roundoff) because anticommutators transform
    covariantly under similarity.

    Raises
    ------
    SingularMatrixError
        If ``t`` is singular within the pivot threshold.
    """
    tm = as_matrix(t)
    if tm.shape[0] != 2 ** n_modes:
        raise ShapeError(
            f"similarity map is {tm.shape[0]}-dimensional, expected {2 ** n_modes}"
        )
    t_inv = inverse(tm)
    base = canonical_fermions(n_modes)
    pairs = [
        PFPair(a=tm @ p.a @ t_inv, b=tm @ p.a.conj().T @ t_inv) for p in base.pairs
    ]
    return PFFamily(n_modes=n_modes, pairs=pairs)


#: relative eigenvalue threshold for the null space of a positive operator
_VACUUM_RTOL = 1e-10


def _psd_kernel(m: np.ndarray) -> list[np.ndarray]:
    """Null-space basis of a Hermitian positive-semidefinite operator.

    Eigenvalues at or below ``_VACUUM_RTOL`` times the largest one count as
    zero.  More forgiving than exact-pivot elimination, which matters for
    similarity-deformed families whose zero eigenvalue carries roundoff of
    order the square of the map's condition number.
    """
    herm = 0.5 * (m + m.conj().T)
    values, vectors = hermitian_eig(herm)
    scale = float(values[-1]) if values[-1] > 0.0 else 1.0
    return [
        vectors[:, i] for i in range(values.size) if values[i] <= _VACUUM_RTOL * scale
    ]


def vacua(family: PFFamily) -> tuple[np.ndarray, np.ndarray]:
    """The joint vacua: phi_0 killed by every a_j, psi_0 by every b_j^dag.

    Both kernels are found through the positive operators sum_j a_j^dag a_j
    and sum_j b_j b_j^dag, whose null spaces are exactly the intersections
    of the per-mode kernels.  Normalization: phi_0 has unit norm with its
    first nonzero component real positive; psi_0 is scaled so that
    <phi_0, psi_0> = 1.

    Raises
    ------
    InvalidFamilyError
        If either intersection is not one-dimensional, or the two vacua are
        orthogonal (no biorthogonal normalization possible).
    """
    d = family.dim
    ker_a = np.zeros((d, d), dtype=complex)
    ker_bd = np.zeros((d, d), dtype=complex)
    for p in family.pairs:
        ker_a += p.a.conj().T @ p.a
        ker_bd += p.b @ p.b.conj().T
    phi_candidates = _psd_kernel(ker_a)
    psi_candidates = _psd_kernel(ker_bd)
    if len(phi_candidates) != 1 or len(psi_candidates) != 1:
        raise InvalidFamilyError(
            f"joint kernel dimensions ({len(phi_candidates)}, {len(psi_candidates)}) "
            "are not both 1: not a valid family"
        )
    phi0 = phi_candidates[0]
    first = int(np.argmax(np.abs(phi0) > 1e-12))
    phi0 = phi0 * (np.abs(phi0[first]) / phi0[first])
    phi0 = phi0 / np.linalg.norm(phi0)
    psi0 = psi_candidates[0]
    overlap = np.vdot(phi0, psi0)
    if abs(overlap) < 1e-12:
        raise InvalidFamilyError("vacua are orthogonal; cannot normalize <phi0, psi0> = 1")
    psi0 = psi0 / overlap
    return phi0, psi0


def occupation(k: int, n_modes: int) -> tuple[int, ...]:
    """Occupation numbers (n_1, ..., n_N) of flat basis index ``k``."""
    return tuple((k >> (j - 1)) & 1 for j in range(1, n_modes + 1))


def flat_index(bits) -> int:
    """Flat basis index of an occupation tuple (mode 1 least significant)."""
    return sum(int(b) << j for j, b in enumerate(bits))


def build_bases(family: PFFamily) -> BiorthogonalSystem:
    """Construct all 2^N basis vectors phi_k and psi_k from the vacua.

    phi_k applies the raising operators b_j (and psi_k the operators
    a_j^dag) for each occupied mode of ``k`` in increasing mode order.
    """
    phi0, psi0 = vacua(family)
    n = family.n_modes
    phis: list[np.ndarray] = []
    psis: list[np.ndarray] = []
    for k in range(2 ** n):
        bits = occupation(k, n)
        phi = phi0
        psi = psi0
        for j in range(1, n + 1):
            if bits[j - 1]:
                phi = family.b(j) @ phi
                psi = family.a(j).conj().T @ psi
        phis.append(phi)
        psis.append(psi)
    return BiorthogonalSystem(n_modes=n, phis=phis, psis=psis)


def metric_operators(system: BiorthogonalSystem) -> MetricPair:
    """S_phi = sum_k |phi_k><phi_k| and S_psi = sum_k |psi_k><psi_k|.

    For a biorthonormal system these are Hermitian positive definite and
    inverse to each other.
    """
    d = system.dim
    s_phi = np.zeros((d, d), dtype=complex)
    s_psi = np.zeros((d, d), dtype=complex)
    for phi, psi in zip(system.phis, system.psis):
        s_phi += np.outer(phi, phi.conj())
        s_psi += np.outer(psi, psi.conj())
    return MetricPair(s_phi=s_phi, s_psi=s_psi)


def number_operators(family: PFFamily) -> NumberOps:
    """N_j = b_j a_j and the adjoints N_j^dag (idempotent, spectrum {0, 1})."""
    n_ops = [p.b @ p.a for p in family.pairs]
    return NumberOps(n_ops=n_ops, n_dagger_ops=[n.conj().T for n in n_ops])


def intertwining_check(metric: MetricPair, numbers: NumberOps) -> IntertwiningReport:
    """Residuals of the metric/number intertwining identities per mode."""
    res_psi = []
    res_phi = []
    for n_op, nd_op in zip(numbers.n_ops, numbers.n_dagger_ops):
        res_psi.append(frobenius_norm(metric.s_psi @ n_op - nd_op @ metric.s_psi))
        res_phi.append(frobenius_norm(metric.s_phi @ nd_op - n_op @ metric.s_phi))
    return IntertwiningReport(residuals_psi=res_psi, residuals_phi=res_phi)


def hermitize(
    metric: MetricPair, numbers: NumberOps, omegas
) -> tuple[list[np.ndarray], np.ndarray]:
    """Hermitian counterparts n_j = S_psi^{1/2} N_j S_phi^{1/2} and the
    rotated Hamiltonian h = sum_j omega_j n_j - (sum_j omega_j) I / 2.

    The n_j are Hermitian for every valid family; h is Hermitian exactly
    when all mode frequencies are real (complex frequencies are allowed,
    the caller can test h against its adjoint).
    """
    omegas = [complex(w) for w in omegas]
    if len(omegas) != numbers.n_modes:
        raise ShapeError(
            f"got {len(omegas)} frequencies for {numbers.n_modes} modes"
        )
    root_psi = sqrtm_psd(metric.s_psi)
    root_phi = sqrtm_psd(metric.s_phi)
    n_herm = [root_psi @ n_op @ root_phi for n_op in numbers.n_ops]
    d = n_herm[0].shape[0]
    h = -0.5 * sum(omegas) * np.eye(d, dtype=complex)
    for w, n_op in zip(omegas, n_herm):
        h = h + w * n_op
    return n_herm, h


def psi_inner_product(metric: MetricPair, f, g) -> complex:
    """The deformed scalar product <f, g>_psi = <f, S_psi g>.

    Positive definite (S_psi is positive), antilinear in ``f``.  Operators
    intertwined by S_psi are symmetric with respect to it.
    """
    fv = as_vector(f)
    gv = as_vector(g, dim=fv.size)
    return complex(np.vdot(fv, metric.s_psi @ gv))


def export_family(family: PFFamily, directory, prefix: str = "mode") -> str:
    """Write a family as a JSON manifest plus per-mode matrix files.

    Returns the manifest path.  Matrix files use the text format of
    :mod:`pfdamp.matfile` and live next to the manifest.
    """
    os.makedirs(directory, exist_ok=True)
    entries = []
    for j, pair in enumerate(family.pairs, start=1):
        a_name = f"{prefix}{j}_a.txt"
        b_name = f"{prefix}{j}_b.txt"
        matfile.write_matrix(
            os.path.join(directory, a_name), pair.a, [f"lowering operator, mode {j}"]
        )
        matfile.write_matrix(
            os.path.join(directory, b_name), pair.b, [f"raising operator, mode {j}"]
        )
        entries.append({"a": a_name, "b": b_name})
    manifest = {"n_modes": family.n_modes, "pairs": entries}
    manifest_path = os.path.join(directory, "family.json")
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return manifest_path


def import_family(manifest_path) -> PFFamily:
    """Load a family from a manifest written by :func:`export_family`.

    Raises
    ------
    InvalidFamilyError
        If the manifest structure is malformed or dimensions disagree.
    """
    try:
        with open(manifest_path) as fh:
            manifest = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidFamilyError(f"manifest is not valid JSON: {exc}") from exc
    if not isinstance(manifest, dict):
        raise InvalidFamilyError("manifest must be a JSON object")
    try:
        n_modes = int(manifest["n_modes"])
        entries = manifest["pairs"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidFamilyError(
            "manifest needs integer 'n_modes' and a 'pairs' list"
        ) from exc
    if not isinstance(entries, list) or len(entries) != n_modes:
        raise InvalidFamilyError(
            f"manifest lists {len(entries) if isinstance(entries, list) else '?'} "
            f"pairs for n_modes={n_modes}"
        )
    base = os.path.dirname(os.fspath(manifest_path))
    pairs = []
    expected_dim = 2 ** n_modes
    for j, entry in enumerate(entries, start=1):
        try:
            a_path = os.path.join(base, entry["a"])
            b_path = os.path.join(base, entry["b"])
        except (KeyError, TypeError) as exc:
            raise InvalidFamilyError(f"pair {j}: needs 'a' and 'b' file names") from exc
        a = matfile.read_matrix(a_path)
        b = matfile.read_matrix(b_path)
        if a.shape[0] != expected_dim or b.shape[0] != expected_dim:
            raise InvalidFamilyError(
                f"pair {j}: dimension {a.shape[0]}x{b.shape[0]} does not match "
                f"2^{n_modes} = {expected_dim}"
            )
        pairs.append(PFPair(a=a, b=b))
    return PFFamily(n_modes=n_modes, pairs=pairs)
