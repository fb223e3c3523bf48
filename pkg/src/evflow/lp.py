"""Generic linear programs over named nonnegative variables.

Self-contained two-phase primal simplex with Bland's rule. Exact mode keeps
every pivot in rational arithmetic (gmpy2.mpq when importable, Fraction
otherwise), so optima, duals, and certificates are exact; float mode runs the
same kernel in doubles with a comparison tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

try:
    from gmpy2 import mpq as _mpq
except ImportError:  # pragma: no cover - gmpy2 is present in normal installs
    _mpq = None


class LpError(Exception):
    pass


class LpInfeasible(LpError):
    """No feasible point.

    `certificate` maps constraint names to a Farkas combination: in original
    row orientation the aggregate sum_c y_c * a_c is componentwise <= 0 while
    sum_c y_c * rhs_c > 0, with y_c <= 0 on '<=' rows and y_c >= 0 on '>=' rows.
    """

    def __init__(self, certificate):
        self.certificate = certificate
        super().__init__("LP infeasible")


class LpUnbounded(LpError):
    """Objective unbounded; `ray` is an improving feasible direction."""

    def __init__(self, ray):
        self.ray = ray
        super().__init__("LP unbounded")


@dataclass(frozen=True)
class Constraint:
    name: str
    coeffs: dict[str, Fraction]
    sense: str  # '<=', '>=', '=='
    rhs: Fraction


@dataclass
class LpProblem:
    """max/min of a linear objective over nonnegative named variables."""

    name: str = "lp"
    sense: str = "max"
    objective: dict[str, Fraction] = field(default_factory=dict)
    constraints: list[Constraint] = field(default_factory=list)
    _vars: dict[str, int] = field(default_factory=dict)

    def add_var(self, name: str, obj=0) -> str:
        if name in self._vars:
            raise LpError(f"duplicate variable {name!r}")
        self._vars[name] = len(self._vars)
        if obj:
            self.objective[name] = Fraction(obj)
        return name

    @property
    def variables(self) -> list[str]:
        return list(self._vars)

    def add_constraint(self, name: str, coeffs: dict[str, Fraction], sense: str, rhs) -> str:
        if sense not in ("<=", ">=", "=="):
            raise LpError(f"bad constraint sense {sense!r}")
        for v in coeffs:
            if v not in self._vars:
                raise LpError(f"constraint {name!r} references unknown variable {v!r}")
        self.constraints.append(
            Constraint(name, {v: Fraction(c) for v, c in coeffs.items() if c}, sense, Fraction(rhs))
        )
        return name

    def to_lp_text(self) -> str:
        """Fixed-format LP text (CPLEX style) for external cross-checking."""

        def num(x: Fraction) -> str:
            return repr(float(x))

        def terms(coeffs: dict[str, Fraction]) -> str:
            parts = []
            for v in self.variables:
                c = coeffs.get(v)
                if not c:
                    continue
                sign = "+" if c > 0 else "-"
                parts.append(f"{sign} {num(abs(c))} {v}")
            if not parts:
                return "0 " + (self.variables[0] if self.variables else "x0")
            out = " ".join(parts)
            return out[2:] if out.startswith("+ ") else out

        lines = [f"\\ {self.name}", "Maximize" if self.sense == "max" else "Minimize"]
        lines.append(f" obj: {terms(self.objective)}")
        lines.append("Subject To")
        sense_txt = {"<=": "<=", ">=": ">=", "==": "="}
        for c in self.constraints:
            lines.append(f" {c.name}: {terms(c.coeffs)} {sense_txt[c.sense]} {num(c.rhs)}")
        lines.append("Bounds")
        for v in self.variables:
            lines.append(f" 0 <= {v}")
        lines.append("End")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class LpSolution:
    status: str
    objective: Fraction
    values: dict[str, Fraction]
    duals: dict[str, Fraction]

    def value(self, name: str):
        return self.values.get(name, Fraction(0))

    def dual(self, name: str):
        return self.duals.get(name, Fraction(0))


def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    return Fraction(int(x.numerator), int(x.denominator))


class _Tableau:
    """Dense simplex tableau kept in canonical (identity-basis) form."""

    def __init__(self, nrows: int, ncols: int, conv, eps):
        self.conv = conv
        self.eps = eps
        self.zero = conv(0)
        self.one = conv(1)
        self.rows = [[self.zero] * ncols for _ in range(nrows)]
        self.rhs = [self.zero] * nrows
        self.basis = [-1] * nrows
        self.ncols = ncols

    def pivot(self, pr: int, pc: int, zrow: list) -> None:
        prow = self.rows[pr]
        piv = prow[pc]
        if piv != self.one:
            inv = self.one / piv
            for idx, v in enumerate(prow):
                if v:
                    prow[idx] = v * inv
            self.rhs[pr] = self.rhs[pr] * inv
        nz = [idx for idx, v in enumerate(prow) if v]
        prhs = self.rhs[pr]
        for r, trow in enumerate(self.rows):
            if r == pr:
                continue
            f = trow[pc]
            if not f:
                continue
            for idx in nz:
                trow[idx] -= f * prow[idx]
            if prhs:
                self.rhs[r] -= f * prhs
        f = zrow[pc]
        if f:
            for idx in nz:
                zrow[idx] -= f * prow[idx]
        self.basis[pr] = pc

    def run(self, zrow: list, banned: set[int]) -> int | None:
        """Bland's-rule iterations to optimality.

        Returns None at optimality, or the entering column on unboundedness.
        """
        eps = self.eps
        neg = -eps
        limit = 2000 + 200 * (len(self.rows) + self.ncols)
        for _ in range(limit):
            enter = -1
            for j, c in enumerate(zrow):
                if c < neg and j not in banned:
                    enter = j
                    break
            if enter < 0:
                return None
            leave = -1
            best = None
            for r, trow in enumerate(self.rows):
                a = trow[enter]
                if a > eps:
                    ratio = self.rhs[r] / a
                    if (
                        best is None
                        or ratio < best
                        or (ratio == best and self.basis[r] < self.basis[leave])
                    ):
                        best = ratio
                        leave = r
            if leave < 0:
                return enter
            self.pivot(leave, enter, zrow)
        raise LpError("simplex iteration limit exceeded")


def solve_lp(problem: LpProblem, mode: str = "exact", tol: float = 1e-9) -> LpSolution:
    """Solve to an optimal basic solution with matching duals.

    Exact mode returns Fractions with zero residuals; float mode returns
    floats whose primal/dual residuals stay within tol on well-scaled inputs.
    Raises LpInfeasible (with a Farkas certificate over constraint names) or
    LpUnbounded (with an improving ray over variable names).
    """
    if mode == "exact":
        conv = _mpq if _mpq is not None else Fraction
        eps = conv(0)
        out = _to_fraction
    elif mode == "float":
        conv = float
        eps = float(tol)
        out = float
    else:
        raise LpError(f"unknown mode {mode!r}")

    var_names = problem.variables
    nvars = len(var_names)
    vidx = {v: i for i, v in enumerate(var_names)}
    minimize = problem.sense == "min"

    m = len(problem.constraints)
    nslack = sum(1 for c in problem.constraints if c.sense != "==")
    ncols = nvars + nslack + m
    T = _Tableau(m, ncols, conv, eps)

    flipped = [False] * m
    seed_col = [-1] * m  # identity-seeded column of each row, for dual readout
    art_cols: set[int] = set()
    scol = nvars
    acol = nvars + nslack
    for r, c in enumerate(problem.constraints):
        row = T.rows[r]
        sign = 1
        sense = c.sense
        if c.rhs < 0:
            sign = -1
            flipped[r] = True
            sense = {"<=": ">=", ">=": "<=", "==": "=="}[sense]
        for v, coef in c.coeffs.items():
            row[vidx[v]] = conv(sign * coef.numerator) / conv(coef.denominator)
        T.rhs[r] = conv(sign * c.rhs.numerator) / conv(c.rhs.denominator)
        if c.sense != "==":
            row[scol] = T.one if sense == "<=" else -T.one
            if sense == "<=":
                seed_col[r] = scol
                T.basis[r] = scol
            scol += 1
        if T.basis[r] < 0:
            row[acol] = T.one
            seed_col[r] = acol
            T.basis[r] = acol
            art_cols.add(acol)
            acol += 1

    if art_cols:
        z1 = [T.zero] * ncols
        for j in art_cols:
            z1[j] = T.one
        for r in range(m):
            if T.basis[r] in art_cols:
                for idx, v in enumerate(T.rows[r]):
                    if v:
                        z1[idx] -= v
        T.run(z1, banned=set())
        infeas = sum((T.rhs[r] for r in range(m) if T.basis[r] in art_cols), T.zero)
        if infeas > eps:
            cert = {}
            for r, c in enumerate(problem.constraints):
                c_seed = T.one if seed_col[r] in art_cols else T.zero
                y = c_seed - z1[seed_col[r]]
                if flipped[r]:
                    y = -y
                if y:
                    cert[c.name] = out(y)
            raise LpInfeasible(cert)
        # drive degenerate artificials out; drop rows that became redundant
        drop_rows = []
        for r in range(m):
            if T.basis[r] not in art_cols:
                continue
            pc = -1
            for j in range(ncols):
                if j in art_cols:
                    continue
                a = T.rows[r][j]
                if a > eps or a < -eps:
                    pc = j
                    break
            if pc >= 0:
                T.pivot(r, pc, z1)
            else:
                drop_rows.append(r)
        for r in reversed(drop_rows):
            del T.rows[r], T.rhs[r], T.basis[r]
        kept = [i for i in range(m) if i not in drop_rows]
    else:
        kept = list(range(m))

    z2 = [T.zero] * ncols
    for v, coef in problem.objective.items():
        k = conv(coef.numerator) / conv(coef.denominator)
        z2[vidx[v]] = k if minimize else -k
    for r in range(len(T.rows)):
        cb = z2[T.basis[r]]
        if cb:
            for idx, v in enumerate(T.rows[r]):
                if v:
                    z2[idx] -= cb * v
            z2[T.basis[r]] = T.zero
    enter = T.run(z2, banned=art_cols)
    if enter is not None:
        ray = {}
        if enter < nvars:
            ray[var_names[enter]] = out(T.one)
        for r in range(len(T.rows)):
            j = T.basis[r]
            if j < nvars and T.rows[r][enter]:
                ray[var_names[j]] = out(-T.rows[r][enter])
        raise LpUnbounded(ray)

    values = {v: out(T.zero) for v in var_names}
    for r in range(len(T.rows)):
        j = T.basis[r]
        if j < nvars:
            values[var_names[j]] = out(T.rhs[r])

    obj = T.zero
    cost_by_col = {}
    for v, coef in problem.objective.items():
        cost_by_col[vidx[v]] = conv(coef.numerator) / conv(coef.denominator)
    for r in range(len(T.rows)):
        cb = cost_by_col.get(T.basis[r])
        if cb:
            obj += cb * T.rhs[r]

    duals = {}
    kept_set = set(kept)
    for r, c in enumerate(problem.constraints):
        if r not in kept_set:
            duals[c.name] = out(T.zero)
            continue
        y = -z2[seed_col[r]]
        if not minimize:
            y = -y
        if flipped[r]:
            y = -y
        duals[c.name] = out(y)
    return LpSolution(status="optimal", objective=out(obj), values=values, duals=duals)
