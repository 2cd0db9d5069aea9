"""Data model for networked systems built from descriptor-form subsystems.

A subsystem maps its state x, internal input v (received from other
subsystems) and external input u to the state derivative/shift, the
internal output z (sent to other subsystems) and the external output y:

    E dx = A_xx x + B_xv v + B_xu u
    z    = C_zx x + D_zv v + D_zu u
    y    = C_yx x + D_yv v + D_yu u

The interconnection is v = Phi z with Phi the subsystem connection
matrix (SCM).  All matrices are exact rationals; every transfer function
computation in this module is symbolic and exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from . import ratmat
from .polymat import Poly, PolyMat, RatFun, RatFunMat, ShapeError


class SchemaError(ValueError):
    """Malformed model file."""


class DimensionError(ValueError):
    """Inconsistent matrix shapes in a model."""


class NotRegular(ArithmeticError):
    """det(lambda E - A) vanishes identically."""


class NotWellPosed(ArithmeticError):
    """I - Phi D_zv is singular."""


def parse_rat(x) -> Fraction:
    """Exact parse of a decimal or fraction entry ("-0.3", "11/10", 2)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise SchemaError(f"boolean is not a matrix entry: {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        # exact value of the decimal literal the user most likely wrote
        return Fraction(repr(x))
    if isinstance(x, str):
        try:
            return Fraction(x.replace("−", "-").strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise SchemaError(f"bad rational entry {x!r}") from exc
    raise SchemaError(f"bad rational entry {x!r}")


def _parse_matrix(raw, rows, cols, name):
    if not isinstance(raw, list) or any(not isinstance(r, list) for r in raw):
        raise SchemaError(f"{name} must be a list of rows")
    if rows == 0:
        if raw != []:
            raise DimensionError(f"{name} must be empty (expected 0 rows)")
        return tuple()
    if len(raw) != rows:
        raise DimensionError(
            f"{name} has {len(raw)} rows, expected {rows}")
    out = []
    for r in raw:
        if len(r) != cols:
            raise DimensionError(
                f"{name} row has {len(r)} entries, expected {cols}")
        out.append(tuple(parse_rat(x) for x in r))
    return tuple(out)


@dataclass(frozen=True)
class SubsystemRealization:
    """Constant matrices of one descriptor-form subsystem."""

    E: tuple
    A_xx: tuple
    B_xv: tuple
    B_xu: tuple
    C_zx: tuple
    C_yx: tuple
    D_zv: tuple
    D_zu: tuple
    D_yv: tuple
    D_yu: tuple

    def __post_init__(self):
        n_x = len(self.E)
        if n_x == 0:
            raise DimensionError("state dimension must be positive")
        for name in ("E", "A_xx"):
            m = getattr(self, name)
            if len(m) != n_x or any(len(r) != n_x for r in m):
                raise DimensionError(f"{name} must be {n_x}x{n_x}")
        if len(self.B_xv) != n_x or len(self.B_xu) != n_x:
            raise DimensionError(f"B_xv and B_xu must have {n_x} rows")
        n_v, n_u = self.n_v, self.n_u
        n_z, n_y = self.n_z, self.n_y
        if n_v == 0 or n_z == 0:
            raise DimensionError("internal dimensions must be positive")
        checks = [
            ("B_xv", n_x, n_v), ("B_xu", n_x, n_u),
            ("C_zx", n_z, n_x), ("C_yx", n_y, n_x),
            ("D_zv", n_z, n_v), ("D_zu", n_z, n_u),
            ("D_yv", n_y, n_v), ("D_yu", n_y, n_u),
        ]
        for name, r, c in checks:
            m = getattr(self, name)
            if len(m) != r or any(len(row) != c for row in m):
                raise DimensionError(f"{name} must be {r}x{c}")

    @property
    def n_x(self):
        return len(self.E)

    @property
    def n_v(self):
        return len(self.B_xv[0])

    @property
    def n_u(self):
        return len(self.B_xu[0])

    @property
    def n_z(self):
        return len(self.C_zx)

    @property
    def n_y(self):
        return len(self.C_yx)

    def pencil(self) -> PolyMat:
        """lambda E - A_xx as a polynomial matrix."""
        n = self.n_x
        return PolyMat(n, n, [
            [Poly((-self.A_xx[i][j], self.E[i][j])) for j in range(n)]
            for i in range(n)])


@dataclass(frozen=True)
class NdsDefinition:
    subsystems: tuple
    time_domain: str = "continuous"

    def __post_init__(self):
        if not self.subsystems:
            raise DimensionError("at least one subsystem is required")
        if self.time_domain not in ("continuous", "discrete"):
            raise SchemaError(f"bad time domain {self.time_domain!r}")

    @property
    def n(self):
        return len(self.subsystems)

    def total(self, dim: str) -> int:
        return sum(getattr(s, "n_" + dim) for s in self.subsystems)

    @property
    def m_x(self):
        return self.total("x")

    @property
    def m_u(self):
        return self.total("u")

    @property
    def m_y(self):
        return self.total("y")

    @property
    def m_v(self):
        return self.total("v")

    @property
    def m_z(self):
        return self.total("z")

    def block(self, name: str):
        """Block-diagonal assembly of a per-subsystem constant matrix."""
        mats = [ratmat.thaw(getattr(s, name)) for s in self.subsystems]
        dims = {
            "E": ("x", "x"), "A_xx": ("x", "x"), "B_xv": ("x", "v"),
            "B_xu": ("x", "u"), "C_zx": ("z", "x"), "C_yx": ("y", "x"),
            "D_zv": ("z", "v"), "D_zu": ("z", "u"), "D_yv": ("y", "v"),
            "D_yu": ("y", "u"),
        }
        rdim, cdim = dims[name]
        rows = self.total(rdim)
        cols = self.total(cdim)
        out = ratmat.zeros(rows, cols)
        r0 = c0 = 0
        for s, m in zip(self.subsystems, mats):
            nr = getattr(s, "n_" + rdim)
            nc = getattr(s, "n_" + cdim)
            for i in range(nr):
                for j in range(nc):
                    out[r0 + i][c0 + j] = m[i][j]
            r0 += nr
            c0 += nc
        return out


@dataclass(frozen=True)
class SCMatrix:
    """Subsystem connection matrix Phi (m_v x m_z, exact rationals)."""

    entries: tuple

    def __post_init__(self):
        rows = self.entries
        if rows and any(len(r) != len(rows[0]) for r in rows):
            raise DimensionError("ragged SCM")

    @classmethod
    def from_rows(cls, rows):
        return cls(tuple(tuple(parse_rat(x) for x in r) for r in rows))

    @classmethod
    def zero(cls, rows, cols):
        return cls(ratmat.freeze(ratmat.zeros(rows, cols)))

    @classmethod
    def parse_inline(cls, text: str):
        """Parse the shell syntax "a,b;c,d" with fraction/decimal entries."""
        rows = [r for r in text.strip().split(";") if r.strip() != ""]
        return cls.from_rows([[e for e in r.split(",")] for r in rows])

    @property
    def rows(self):
        return len(self.entries)

    @property
    def cols(self):
        return len(self.entries[0]) if self.entries else 0

    def as_lists(self):
        return ratmat.thaw(self.entries)

    def transpose(self):
        return SCMatrix(ratmat.freeze(ratmat.transpose(self.as_lists(),
                                                       cols=self.cols)))

    def check_shape(self, nds: NdsDefinition):
        if (self.rows, self.cols) != (nds.m_v, nds.m_z):
            raise ShapeError(
                f"SCM is {self.rows}x{self.cols}, "
                f"expected {nds.m_v}x{nds.m_z}")


@dataclass(frozen=True)
class KnownEntries:
    """A-priori information: entry (i, j) of the SCM is known for i in I[j].

    Indices are 1-based.  Columns absent from J are fully unknown.
    """

    J: tuple
    I: dict = field(default_factory=dict)

    def rows_for(self, j: int):
        return tuple(self.I.get(j, ()))


@dataclass(frozen=True)
class AffineConstraint:
    """SCM constrained to Phi(theta) = base + sum_k theta_k directions[k]."""

    base: SCMatrix
    directions: tuple
    theta: tuple = ()

    @property
    def q(self):
        return len(self.directions)

    def at(self, theta) -> SCMatrix:
        if len(theta) != self.q:
            raise ShapeError(f"theta has {len(theta)} entries, expected {self.q}")
        out = self.base.as_lists()
        for t, d in zip(theta, self.directions):
            out = ratmat.add(out, ratmat.scale(d.as_lists(), t))
        return SCMatrix(ratmat.freeze(out))


@dataclass
class SubsystemTfms:
    """The four transfer function matrices of Eq-style i/o partitioning."""

    G_yu: RatFunMat
    G_yv: RatFunMat
    G_zu: RatFunMat
    G_zv: RatFunMat


_SUB_KEYS = ("E", "A_xx", "B_xv", "B_xu", "C_zx", "C_yx",
             "D_zv", "D_zu", "D_yv", "D_yu")


def parse_model(text):
    """Parse a JSON model file.

    Returns (NdsDefinition, SCMatrix | None, constraint | None) where the
    constraint is a KnownEntries or AffineConstraint instance.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("model file must be a JSON object")
    if "subsystems" not in doc or not isinstance(doc["subsystems"], list) \
            or not doc["subsystems"]:
        raise SchemaError("model file needs a nonempty 'subsystems' list")
    time_domain = doc.get("time_domain", "continuous")
    if time_domain not in ("continuous", "discrete"):
        raise SchemaError(f"bad time_domain {time_domain!r}")

    subs = []
    for k, raw in enumerate(doc["subsystems"]):
        if not isinstance(raw, dict):
            raise SchemaError(f"subsystem {k + 1} must be an object")
        missing = [key for key in _SUB_KEYS if key not in raw]
        if missing:
            raise SchemaError(
                f"subsystem {k + 1} is missing {', '.join(missing)}")
        e = raw["E"]
        if not isinstance(e, list) or not e:
            raise SchemaError(f"subsystem {k + 1}: E must be a nonempty matrix")
        n_x = len(e)
        b_xv = raw["B_xv"]
        if not isinstance(b_xv, list) or len(b_xv) != n_x:
            raise DimensionError(f"subsystem {k + 1}: B_xv must have {n_x} rows")
        n_v = len(b_xv[0]) if b_xv and isinstance(b_xv[0], list) else 0
        n_u = len(raw["B_xu"][0]) if raw["B_xu"] and isinstance(raw["B_xu"][0], list) else 0
        n_z = len(raw["C_zx"])
        n_y = len(raw["C_yx"])
        fields = {
            "E": (n_x, n_x), "A_xx": (n_x, n_x),
            "B_xv": (n_x, n_v), "B_xu": (n_x, n_u),
            "C_zx": (n_z, n_x), "C_yx": (n_y, n_x),
            "D_zv": (n_z, n_v), "D_zu": (n_z, n_u),
            "D_yv": (n_y, n_v), "D_yu": (n_y, n_u),
        }
        kw = {name: _parse_matrix(raw[name], r, c, f"subsystem {k + 1}.{name}")
              for name, (r, c) in fields.items()}
        subs.append(SubsystemRealization(**kw))

    nds = NdsDefinition(subsystems=tuple(subs), time_domain=time_domain)

    phi = None
    if "scm" in doc and doc["scm"] is not None:
        phi = SCMatrix.from_rows(doc["scm"])
        phi.check_shape(nds)

    constraint = None
    if "constraints" in doc and doc["constraints"] is not None:
        constraint = parse_constraints(doc["constraints"], nds)
    return nds, phi, constraint


def parse_constraints(c, nds: NdsDefinition):
    """Parse a constraints object into KnownEntries or AffineConstraint."""
    if not isinstance(c, dict) or len(c) != 1:
        raise SchemaError(
            "constraints must hold exactly one of known_entries/affine")
    if "known_entries" in c:
        ke = c["known_entries"]
        j_list = tuple(int(j) for j in ke.get("J", ()))
        i_map = {int(j): tuple(int(i) for i in rows)
                 for j, rows in ke.get("I", {}).items()}
        for j in j_list:
            if not 1 <= j <= nds.m_z:
                raise IndexError(f"column index {j} out of range")
        for j, rows in i_map.items():
            for i in rows:
                if not 1 <= i <= nds.m_v:
                    raise IndexError(f"row index {i} out of range")
        return KnownEntries(J=j_list, I=i_map)
    if "affine" in c:
        af = c["affine"]
        base = SCMatrix.from_rows(af["phi0"])
        base.check_shape(nds)
        dirs = tuple(SCMatrix.from_rows(d) for d in af.get("directions", ()))
        for d in dirs:
            d.check_shape(nds)
        theta = tuple(parse_rat(t) for t in af.get("theta", ()))
        return AffineConstraint(base=base, directions=dirs, theta=theta)
    raise SchemaError("unknown constraint kind")


def check_subsystem_regular(sub: SubsystemRealization) -> bool:
    """True iff det(lambda E - A_xx) is not the zero polynomial."""
    return not sub.pencil().det().is_zero


def subsystem_tfms(sub: SubsystemRealization) -> SubsystemTfms:
    """Exact transfer function matrices of one subsystem."""
    if not check_subsystem_regular(sub):
        raise NotRegular("subsystem pencil is singular for every lambda")
    p_inv = sub.pencil().to_ratfun().inverse()
    c = RatFunMat.from_scalars(ratmat.vstack(sub.C_yx, sub.C_zx))
    b = RatFunMat.from_scalars(
        ratmat.hstack(ratmat.thaw(sub.B_xu), ratmat.thaw(sub.B_xv)))
    d = RatFunMat.from_scalars(ratmat.vstack(
        ratmat.hstack(ratmat.thaw(sub.D_yu), ratmat.thaw(sub.D_yv)),
        ratmat.hstack(ratmat.thaw(sub.D_zu), ratmat.thaw(sub.D_zv))))
    t = d + (c @ p_inv @ b)
    n_y, n_u = sub.n_y, sub.n_u
    return SubsystemTfms(
        G_yu=t.submatrix(range(n_y), range(n_u)),
        G_yv=t.submatrix(range(n_y), range(n_u, n_u + sub.n_v)),
        G_zu=t.submatrix(range(n_y, n_y + sub.n_z), range(n_u)),
        G_zv=t.submatrix(range(n_y, n_y + sub.n_z),
                         range(n_u, n_u + sub.n_v)),
    )


def assemble_block_tfms(nds: NdsDefinition) -> SubsystemTfms:
    """Block-diagonal transfer matrices of the disconnected subsystem stack."""
    per = []
    for k, sub in enumerate(nds.subsystems):
        if not check_subsystem_regular(sub):
            raise NotRegular(f"subsystem {k + 1} is not regular")
        per.append(subsystem_tfms(sub))
    return SubsystemTfms(
        G_yu=RatFunMat.block_diag([t.G_yu for t in per]),
        G_yv=RatFunMat.block_diag([t.G_yv for t in per]),
        G_zu=RatFunMat.block_diag([t.G_zu for t in per]),
        G_zv=RatFunMat.block_diag([t.G_zv for t in per]),
    )


def _phi_ratfun(phi: SCMatrix) -> RatFunMat:
    return RatFunMat.from_scalars(phi.as_lists())


def check_nds_regular(nds: NdsDefinition, phi: SCMatrix) -> bool:
    """True iff det(I - G_zv(lambda) Phi) is not identically zero."""
    phi.check_shape(nds)
    tfms = assemble_block_tfms(nds)
    w = RatFunMat.identity(nds.m_z) - (tfms.G_zv @ _phi_ratfun(phi))
    return not w.det().is_zero


def check_well_posed(nds: NdsDefinition, phi: SCMatrix) -> bool:
    """Exact invertibility of I - Phi D_zv."""
    phi.check_shape(nds)
    d_zv = nds.block("D_zv")
    m = ratmat.sub(ratmat.identity(nds.m_v),
                   ratmat.matmul(phi.as_lists(), d_zv))
    return ratmat.det(m) != 0


def nds_tfm(nds: NdsDefinition, phi: SCMatrix,
            tfms: SubsystemTfms | None = None) -> RatFunMat:
    """External transfer matrix H = G_yu + G_yv (I - Phi G_zv)^-1 Phi G_zu."""
    phi.check_shape(nds)
    if tfms is None:
        tfms = assemble_block_tfms(nds)
    phi_r = _phi_ratfun(phi)
    w = RatFunMat.identity(nds.m_v) - (phi_r @ tfms.G_zv)
    if w.det().is_zero:
        raise NotRegular("I - Phi G_zv is singular as a rational matrix")
    return tfms.G_yu + (tfms.G_yv @ w.inverse() @ phi_r @ tfms.G_zu)


def tfm_equal(h1: RatFunMat, h2: RatFunMat) -> bool:
    """Exact entrywise equality of reduced rational matrices."""
    if h1.shape != h2.shape:
        raise ShapeError(f"shape mismatch {h1.shape} vs {h2.shape}")
    return h1 == h2


def transpose_nds(nds: NdsDefinition) -> NdsDefinition:
    """Dual system whose subsystem TFMs are the transposes of the original's.

    Roles swap (u <-> y, v <-> z): G'_yv = G_zu^T, G'_zu = G_yv^T,
    G'_zv = G_zv^T, G'_yu = G_yu^T, realized per subsystem by transposing
    every constant matrix and exchanging input/output roles.
    """
    def tr(m, cols):
        return ratmat.freeze(ratmat.transpose(ratmat.thaw(m), cols=cols))

    subs = []
    for s in nds.subsystems:
        subs.append(SubsystemRealization(
            E=tr(s.E, s.n_x),
            A_xx=tr(s.A_xx, s.n_x),
            B_xv=tr(s.C_zx, s.n_x),      # new n_v = old n_z
            B_xu=tr(s.C_yx, s.n_x),      # new n_u = old n_y
            C_zx=tr(s.B_xv, s.n_v),      # new n_z = old n_v
            C_yx=tr(s.B_xu, s.n_u),      # new n_y = old n_u
            D_zv=tr(s.D_zv, s.n_v),
            D_zu=tr(s.D_yv, s.n_v),
            D_yv=tr(s.D_zu, s.n_u),
            D_yu=tr(s.D_yu, s.n_u),
        ))
    return NdsDefinition(subsystems=tuple(subs), time_domain=nds.time_domain)
