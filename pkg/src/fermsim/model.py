"""Model description, model-file parser/serializer and Hamiltonian builder.

Model files are line oriented; ``#`` starts a comment::

    sites <N>
    onsite <i> <energy>
    hop <i> <j> <amplitude>
    density <i> <j> <strength>
    reservoir <name> <i> <j> <gamma> <fermi>
    profile <name> <t_start> <value>     # repeatable, piecewise-constant |u(t)|^2
    init fock <bitstring>
    init density <path.npy>              # explicit density matrix, path relative to the model file

Energies and rates are in units of J with hbar = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .operators import (
    annihilator,
    check_hermitian,
    creator,
    fock_density,
    number_op,
)

TERM_KINDS = ("onsite", "hop", "density_density")
_KIND_KEYWORD = {"onsite": "onsite", "hop": "hop", "density_density": "density"}


class ModelError(ValueError):
    """Invalid model description. ``line`` is the 1-based source line when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        self.reason = message
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class HamiltonianTerm:
    kind: str
    sites: tuple[int, ...]
    strength: float

    def __post_init__(self):
        if self.kind not in TERM_KINDS:
            raise ModelError(f"unknown term kind {self.kind!r}")
        want = 1 if self.kind == "onsite" else 2
        if len(self.sites) != want:
            raise ModelError(f"{self.kind} term needs {want} site(s), got {len(self.sites)}")
        if want == 2 and self.sites[0] == self.sites[1]:
            raise ModelError(f"{self.kind} term must reference two distinct sites, got {self.sites}")


@dataclass(frozen=True)
class ReservoirAttachment:
    """A lead coupled through the jump pair ``(i, j)``.

    ``profile`` holds ``(t_start, value)`` steps of ``|u(t)|^2``; each step
    lasts until the next start and the last one extends to infinity. An empty
    profile means the constant 1.
    """

    name: str
    jump_sites: tuple[int, int]
    gamma: float
    fermi: float
    profile: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if not self.gamma >= 0.0:
            raise ModelError(f"reservoir {self.name!r}: gamma must be >= 0, got {self.gamma}")
        if not 0.0 <= self.fermi <= 1.0:
            raise ModelError(f"reservoir {self.name!r}: fermi must lie in [0, 1], got {self.fermi}")
        if self.profile:
            starts = [s for s, _ in self.profile]
            if starts[0] != 0.0:
                raise ModelError(f"reservoir {self.name!r}: profile must start at t=0, first step at {starts[0]}")
            if any(b <= a for a, b in zip(starts, starts[1:])):
                raise ModelError(f"reservoir {self.name!r}: profile steps must have strictly increasing start times")
            if any(v < 0.0 for _, v in self.profile):
                raise ModelError(f"reservoir {self.name!r}: profile values are |u(t)|^2 and must be >= 0")

    def breakpoints(self) -> tuple[float, ...]:
        return tuple(s for s, _ in self.profile[1:])


@dataclass(frozen=True)
class ModelSpec:
    n_sites: int
    terms: tuple[HamiltonianTerm, ...] = ()
    reservoirs: tuple[ReservoirAttachment, ...] = ()
    initial_fock: str | None = None
    initial_density: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.n_sites < 1:
            raise ModelError(f"sites must be >= 1, got {self.n_sites}")
        for t in self.terms:
            _check_sites(t.sites, self.n_sites, f"{t.kind} term")
        names = set()
        for r in self.reservoirs:
            _check_sites(r.jump_sites, self.n_sites, f"reservoir {r.name!r}")
            if r.name in names:
                raise ModelError(f"duplicate reservoir name {r.name!r}")
            names.add(r.name)
        if self.initial_fock is not None and self.initial_density is not None:
            raise ModelError("give either a Fock label or a density matrix as initial state, not both")
        if self.initial_fock is not None:
            if len(self.initial_fock) != self.n_sites or set(self.initial_fock) - {"0", "1"}:
                raise ModelError(f"init fock label {self.initial_fock!r} must be {self.n_sites} bits of 0/1")
        if self.initial_density is not None:
            rho = np.asarray(self.initial_density, dtype=np.complex128)
            object.__setattr__(self, "initial_density", rho)
            validate_density(rho, 2**self.n_sites)

    def initial_state(self) -> np.ndarray:
        """Initial density matrix; the vacuum when nothing was declared."""
        if self.initial_density is not None:
            return self.initial_density.copy()
        return fock_density(self.initial_fock or "0" * self.n_sites)

    def with_term_strength(self, kind: str, sites: Sequence[int], strength: float) -> "ModelSpec":
        """Copy with one term's strength replaced (added when absent)."""
        key = tuple(sites)
        terms = list(self.terms)
        for k, t in enumerate(terms):
            if t.kind == kind and (t.sites == key or t.sites == key[::-1]):
                terms[k] = replace(t, strength=float(strength))
                break
        else:
            terms.append(HamiltonianTerm(kind, key, float(strength)))
        return replace(self, terms=tuple(terms))

    def with_reservoir_gamma(self, gamma: float, names: Sequence[str] | None = None) -> "ModelSpec":
        res = tuple(
            replace(r, gamma=float(gamma)) if names is None or r.name in names else r for r in self.reservoirs
        )
        return replace(self, reservoirs=res)

    def __eq__(self, other):
        if not isinstance(other, ModelSpec):
            return NotImplemented
        same = (self.n_sites, self.terms, self.reservoirs, self.initial_fock) == (
            other.n_sites,
            other.terms,
            other.reservoirs,
            other.initial_fock,
        )
        if not same:
            return False
        a, b = self.initial_density, other.initial_density
        if a is None or b is None:
            return a is b
        return a.shape == b.shape and bool(np.array_equal(a, b))

    __hash__ = None


def _check_sites(sites, n, what):
    for s in sites:
        if not 1 <= s <= n:
            raise ModelError(f"{what}: site index {s} out of range 1..{n}")


def validate_density(rho: np.ndarray, dim: int | None = None, tol: float = 1e-9) -> None:
    """Raise ``ModelError`` unless ``rho`` is a unit-trace Hermitian PSD matrix."""
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ModelError(f"density matrix must be square, got shape {rho.shape}")
    if dim is not None and rho.shape[0] != dim:
        raise ModelError(f"density matrix has dimension {rho.shape[0]}, expected {dim}")
    defect = float(np.max(np.abs(rho - rho.conj().T)))
    if defect > tol:
        raise ModelError(f"density matrix is not Hermitian (defect {defect:.3e})")
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise ModelError(f"density matrix trace is {tr.real:.12g}, expected 1")
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if w[0] < -tol:
        raise ModelError(f"density matrix is not positive semidefinite (min eigenvalue {w[0]:.3e})")


# ---------------------------------------------------------------------------
# physical helpers
# ---------------------------------------------------------------------------

def fermi_factor(beta: float, eps: float) -> float:
    """Fermi-Dirac occupation ``1 / (1 + exp(beta * eps))``, eps measured from the chemical potential."""
    if beta < 0:
        raise ValueError(f"inverse temperature must be >= 0, got {beta}")
    x = beta * eps
    if x >= 0:
        e = math.exp(-x) if x < 745 else 0.0
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(x))


def rate_from_microscopic(v_i: complex, v_j: complex, dos: float, u_sq: float = 1.0) -> complex:
    """Wide-band rate ``2 pi V_i V_j^* D |u|^2`` from coupling amplitudes and lead density of states."""
    return 2.0 * math.pi * v_i * np.conj(v_j) * dos * u_sq


def profile_value(att: ReservoirAttachment, t: float) -> float:
    if not att.profile:
        if t < 0:
            raise ValueError(f"time {t} precedes the profile domain [0, inf)")
        return 1.0
    if t < att.profile[0][0]:
        raise ValueError(f"time {t} precedes the profile of reservoir {att.name!r}")
    value = att.profile[0][1]
    for start, v in att.profile:
        if t >= start:
            value = v
        else:
            break
    return value


def rate_at(att: ReservoirAttachment, t: float) -> float:
    """Instantaneous rate ``gamma * |u(t)|^2``."""
    return att.gamma * profile_value(att, t)


# ---------------------------------------------------------------------------
# Hamiltonian
# ---------------------------------------------------------------------------

def build_hamiltonian(spec: ModelSpec) -> np.ndarray:
    """Assemble H from Jordan-Wigner fermion operators.

    onsite ``eps n_i``; hop ``t (c_i^dag c_j + c_j^dag c_i)``; density ``U n_i n_j``.
    """
    n = spec.n_sites
    dim = 2**n
    H = np.zeros((dim, dim), dtype=np.complex128)
    num = {}

    def n_op(i):
        if i not in num:
            num[i] = number_op(i, n)
        return num[i]

    for term in spec.terms:
        if term.kind == "onsite":
            H += term.strength * n_op(term.sites[0])
        elif term.kind == "hop":
            i, j = term.sites
            hop = creator(i, n) @ annihilator(j, n)
            H += term.strength * (hop + hop.conj().T)
        else:
            i, j = term.sites
            H += term.strength * (n_op(i) @ n_op(j))
    return check_hermitian(H)


def total_number(n_sites: int) -> np.ndarray:
    return sum(number_op(i, n_sites) for i in range(1, n_sites + 1))


# ---------------------------------------------------------------------------
# model-file text format
# ---------------------------------------------------------------------------

def _num(tok: str, line: int, what: str) -> float:
    try:
        x = float(tok)
    except ValueError:
        raise ModelError(f"{what}: cannot parse {tok!r} as a number", line) from None
    if not math.isfinite(x):
        raise ModelError(f"{what}: value {tok!r} is not finite", line)
    return x


def _int(tok: str, line: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ModelError(f"{what}: cannot parse {tok!r} as an integer", line) from None


_ARITY = {"sites": 1, "onsite": 2, "hop": 3, "density": 3, "reservoir": 5, "profile": 3, "init": 2}


def parse_model(text: str, base_dir: str | Path | None = None) -> ModelSpec:
    """Parse and validate model-file text. Errors carry the offending line number."""
    n_sites = None
    sites_line = None
    terms: list[tuple[HamiltonianTerm, int]] = []
    reservoirs: dict[str, dict] = {}
    profiles: dict[str, list[tuple[float, float, int]]] = {}
    init_fock = None
    init_density = None
    init_line = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        tok = body.split()
        key, args = tok[0].lower(), tok[1:]
        if key not in _ARITY:
            raise ModelError(f"unknown directive {tok[0]!r}", lineno)
        if len(args) != _ARITY[key]:
            raise ModelError(f"{key} expects {_ARITY[key]} argument(s), got {len(args)}", lineno)

        if key == "sites":
            if n_sites is not None:
                raise ModelError("sites declared twice", lineno)
            n_sites = _int(args[0], lineno, "sites")
            sites_line = lineno
            if n_sites < 1:
                raise ModelError(f"sites must be >= 1, got {n_sites}", lineno)
        elif key == "onsite":
            try:
                term = HamiltonianTerm("onsite", (_int(args[0], lineno, "onsite"),), _num(args[1], lineno, "onsite"))
            except ModelError as exc:
                raise ModelError(exc.reason, lineno) from None
            terms.append((term, lineno))
        elif key in ("hop", "density"):
            kind = "hop" if key == "hop" else "density_density"
            try:
                term = HamiltonianTerm(
                    kind,
                    (_int(args[0], lineno, key), _int(args[1], lineno, key)),
                    _num(args[2], lineno, key),
                )
            except ModelError as exc:
                raise ModelError(exc.reason, lineno) from None
            terms.append((term, lineno))
        elif key == "reservoir":
            name = args[0]
            if name in reservoirs:
                raise ModelError(f"duplicate reservoir name {name!r}", lineno)
            gamma = _num(args[3], lineno, "gamma")
            fermi = _num(args[4], lineno, "fermi")
            if gamma < 0:
                raise ModelError(f"reservoir {name!r}: gamma must be >= 0, got {gamma}", lineno)
            if not 0.0 <= fermi <= 1.0:
                raise ModelError(f"reservoir {name!r}: fermi must lie in [0, 1], got {fermi}", lineno)
            reservoirs[name] = dict(
                sites=(_int(args[1], lineno, "reservoir"), _int(args[2], lineno, "reservoir")),
                gamma=gamma,
                fermi=fermi,
                line=lineno,
            )
        elif key == "profile":
            profiles.setdefault(args[0], []).append(
                (_num(args[1], lineno, "profile start"), _num(args[2], lineno, "profile value"), lineno)
            )
        elif key == "init":
            if init_line is not None:
                raise ModelError("initial state declared twice", lineno)
            init_line = lineno
            mode = args[0].lower()
            if mode == "fock":
                init_fock = args[1]
                if set(init_fock) - {"0", "1"}:
                    raise ModelError(f"init fock label {init_fock!r} must contain only 0 and 1", lineno)
            elif mode == "density":
                path = Path(args[1])
                if not path.is_absolute() and base_dir is not None:
                    path = Path(base_dir) / path
                try:
                    init_density = np.load(path)
                except (OSError, ValueError) as exc:
                    raise ModelError(f"cannot load density matrix {str(path)!r}: {exc}", lineno) from None
            else:
                raise ModelError(f"unknown init mode {args[0]!r} (expected fock or density)", lineno)

    if n_sites is None:
        raise ModelError("missing 'sites' directive")
    for term, lineno in terms:
        for s in term.sites:
            if not 1 <= s <= n_sites:
                raise ModelError(f"{term.kind} term: site index {s} out of range 1..{n_sites}", lineno)
    for name, r in reservoirs.items():
        for s in r["sites"]:
            if not 1 <= s <= n_sites:
                raise ModelError(f"reservoir {name!r}: site index {s} out of range 1..{n_sites}", r["line"])

    atts = []
    for name, r in reservoirs.items():
        steps = sorted(profiles.pop(name, []))
        prof = tuple((s, v) for s, v, _ in steps)
        try:
            atts.append(ReservoirAttachment(name, r["sites"], r["gamma"], r["fermi"], prof))
        except ModelError as exc:
            raise ModelError(exc.reason, steps[0][2] if steps else r["line"]) from None
    if profiles:
        name, steps = next(iter(profiles.items()))
        raise ModelError(f"profile refers to unknown reservoir {name!r}", steps[0][2])

    try:
        return ModelSpec(
            n_sites=n_sites,
            terms=tuple(t for t, _ in terms),
            reservoirs=tuple(atts),
            initial_fock=init_fock,
            initial_density=init_density,
        )
    except ModelError as exc:
        raise ModelError(exc.reason, init_line or sites_line) from None


def load_model(path: str | Path) -> ModelSpec:
    path = Path(path)
    return parse_model(path.read_text(encoding="utf-8"), base_dir=path.parent)


def _fmt(x: float) -> str:
    return repr(float(x))


def serialize_model(spec: ModelSpec, density_path: str | None = None) -> str:
    """Render ``spec`` in the model-file format.

    Numbers use ``repr`` so that parsing the output restores them bit for bit.
    A density-matrix initial state needs ``density_path`` naming where the
    caller saved it.
    """
    lines = [f"sites {spec.n_sites}"]
    for t in spec.terms:
        lines.append(" ".join([_KIND_KEYWORD[t.kind], *map(str, t.sites), _fmt(t.strength)]))
    for r in spec.reservoirs:
        i, j = r.jump_sites
        lines.append(f"reservoir {r.name} {i} {j} {_fmt(r.gamma)} {_fmt(r.fermi)}")
    for r in spec.reservoirs:
        for start, value in r.profile:
            lines.append(f"profile {r.name} {_fmt(start)} {_fmt(value)}")
    if spec.initial_fock is not None:
        lines.append(f"init fock {spec.initial_fock}")
    elif spec.initial_density is not None:
        if density_path is None:
            raise ValueError("serializing a density-matrix initial state needs density_path")
        lines.append(f"init density {density_path}")
    return "\n".join(lines) + "\n"
