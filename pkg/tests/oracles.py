"""Brute-force reference computations used only by the test suite.

These are deliberately naive: cofactor-expansion characteristic
polynomials with Aberth-Ehrlich root finding, exhaustive Hausdorff
distances, truncated Taylor series for the matrix exponential and a
table-driven postfix evaluator for family expressions.  None of them
shares code with the library's main computational path.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

EPS = np.finfo(float).eps


def _sorted(z):
    z = np.asarray(z, dtype=complex)
    return z[np.lexsort((z.imag, z.real))]


# ---------------------------------------------------------------- polynomials

def _padd(p, q):
    out = np.zeros(max(len(p), len(q)), dtype=complex)
    out[: len(p)] += p
    out[: len(q)] += q
    return out


def _pmul(p, q):
    out = np.zeros(len(p) + len(q) - 1, dtype=complex)
    for i, a in enumerate(p):
        out[i: i + len(q)] += a * q
    return out


def char_poly(m):
    """Coefficients (ascending) of ``det(zI - m)`` by cofactor expansion."""
    a = np.asarray(m, dtype=complex)
    n = a.shape[0]
    if a.shape != (n, n) or not 1 <= n <= 6:
        raise ValueError("oracle_char_poly_roots handles square matrices of dimension 1..6")

    def entry(i, j):
        return np.array([-a[i, j], 1.0]) if i == j else np.array([-a[i, j]])

    @lru_cache(maxsize=None)
    def minor(row, cols):
        # determinant of rows row.. restricted to the column tuple ``cols``
        if row == n:
            return (1.0 + 0j,)
        acc = np.zeros(1, dtype=complex)
        for k, j in enumerate(cols):
            sub = np.array(minor(row + 1, cols[:k] + cols[k + 1:]))
            term = _pmul(entry(row, j), sub)
            acc = _padd(acc, term if k % 2 == 0 else -term)
        return tuple(acc)

    return np.array(minor(0, tuple(range(n))))


def _polyval(coeffs, z):
    acc = np.zeros_like(z, dtype=complex)
    for c in coeffs[::-1]:
        acc = acc * z + c
    return acc


def aberth_roots(coeffs, max_iter=500):
    """All roots of a polynomial (ascending coefficients), Aberth-Ehrlich.

    Starts from a circle of radius equal to the Fujiwara root bound with a
    fixed angular offset so results are deterministic.
    """
    c = np.array(coeffs, dtype=complex)
    if c.ndim != 1 or c.size < 2:
        raise ValueError("polynomial must have degree >= 1")
    deg = c.size - 1
    if c[-1] == 0:
        raise ValueError("leading coefficient is zero")
    if deg > 16:
        raise ValueError(f"degree {deg} exceeds the oracle cap of 16")
    c = c / c[-1]
    if deg == 1:
        return np.array([-c[0]])
    dc = c[1:] * np.arange(1, deg + 1)
    # Fujiwara bound: every root has modulus <= bound
    bound = 2.0 * max(abs(c[deg - k]) ** (1.0 / k) for k in range(1, deg + 1))
    if bound == 0.0:
        return np.zeros(deg, dtype=complex)
    z = bound * np.exp(1j * (2 * np.pi * np.arange(deg) / deg + 0.4))
    scale = np.abs(c).max()
    for _ in range(max_iter):
        p = _polyval(c, z)
        dp = _polyval(dc, z)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            ratio = p / dp
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1.0)
            inv = 1.0 / diff
            np.fill_diagonal(inv, 0.0)
            w = ratio / (1.0 - ratio * inv.sum(axis=1))
        w = np.where(np.isfinite(w), w, 0.0)
        w = np.where(p == 0, 0.0, w)
        z = z - w
        if np.all(np.abs(w) <= 4 * EPS * np.maximum(EPS * bound, np.abs(z))):
            break
    p = _polyval(c, z)
    dp = _polyval(dc, z)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        z2 = np.where(dp != 0, z - p / dp, z)
    better = np.abs(_polyval(c, z2)) < np.abs(p)
    z = np.where(better & np.isfinite(z2), z2, z)
    if np.any(np.abs(_polyval(c, z)) > 1e-10 * scale * max(1.0, np.abs(z).max()) ** deg):
        raise RuntimeError("Aberth iteration did not reach the residual target")
    return _sorted(z)


def oracle_char_poly_roots(m):
    """Eigenvalues of a matrix of dimension <= 6 as characteristic-polynomial roots."""
    return aberth_roots(char_poly(m))


def match_multisets(a, b):
    """Largest distance in the optimal pairing of two small multisets (brute force)."""
    import itertools

    a, b = list(a), list(b)
    if len(a) != len(b):
        raise ValueError("multisets differ in size")
    best = math.inf
    for perm in itertools.permutations(range(len(b))):
        best = min(best, max((abs(a[i] - b[j]) for i, j in enumerate(perm)), default=0.0))
    return best


# ---------------------------------------------------------------- point sets

def oracle_hausdorff(a, b):
    """Two-sided Hausdorff distance by explicit double loops (<= 32 points each)."""
    a, b = [complex(x) for x in a], [complex(y) for y in b]
    if not a or not b:
        raise ValueError("both sets must be nonempty")
    if len(a) > 32 or len(b) > 32:
        raise ValueError("oracle_hausdorff is capped at 32 points per set")
    forward = 0.0
    for x in a:
        forward = max(forward, min(abs(x - y) for y in b))
    backward = 0.0
    for y in b:
        backward = max(backward, min(abs(x - y) for x in a))
    return max(forward, backward)


# ---------------------------------------------------------------- matrix exp

def oracle_matrix_exp(m, terms=20):
    """Partial Taylor sum ``sum_{k<=terms} m^k/k!`` and its tail bound."""
    a = np.asarray(m, dtype=complex)
    nrm = float(np.linalg.norm(a, 2))
    if nrm > 5:
        raise ValueError("oracle_matrix_exp needs ||m|| <= 5")
    out = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for k in range(1, terms + 1):
        term = term @ a / k
        out = out + term
    bound = nrm ** (terms + 1) / math.factorial(terms + 1) * math.exp(nrm)
    return out, bound


# ---------------------------------------------------------------- expressions

_PREC = {"+": (1, "L"), "-": (1, "L"), "*": (2, "L"), "/": (2, "L"), "neg": (3, "R"), "^": (4, "R")}
_BINARY = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: a / b,
    "^": lambda a, b: a ** b,
}
_UNARY = {
    "neg": lambda a: -a,
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "sqrt": math.sqrt,
    "abs": abs,
}
_CONST = {"pi": math.pi, "e": math.e}


def _tokens(text):
    import re

    out = []
    for m in re.finditer(r"\s*(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|[A-Za-z_]\w*|[-+*/^()])", text):
        out.append(m.group(1))
    return out


def to_postfix(text):
    """Shunting-yard conversion; unary minus binds looser than ``^``."""
    out, ops = [], []
    prev = None
    for tok in _tokens(text):
        if tok[0].isdigit() or tok[0] == ".":
            out.append(("num", float(tok)))
        elif tok in _CONST:
            out.append(("num", _CONST[tok]))
        elif tok in ("s", "x", "y"):
            out.append(("var", tok))
        elif tok in _UNARY:
            ops.append(tok)
        elif tok == "(":
            ops.append(tok)
        elif tok == ")":
            while ops[-1] != "(":
                out.append(("op", ops.pop()))
            ops.pop()
            if ops and ops[-1] in _UNARY and ops[-1] != "neg":
                out.append(("op", ops.pop()))
        else:
            op = "neg" if tok == "-" and (prev is None or prev in _PREC or prev == "(") else tok
            if op == "neg":
                ops.append(op)
            else:
                p, assoc = _PREC[op]
                while ops and ops[-1] in _PREC:
                    q = _PREC[ops[-1]][0]
                    if q > p or (q == p and assoc == "L"):
                        out.append(("op", ops.pop()))
                    else:
                        break
                ops.append(op)
            tok = op
        prev = tok
    while ops:
        out.append(("op", ops.pop()))
    return out


def eval_postfix(code, env):
    stack = []
    for kind, val in code:
        if kind == "num":
            stack.append(val)
        elif kind == "var":
            stack.append(env[val])
        elif val in _BINARY:
            b = stack.pop()
            a = stack.pop()
            stack.append(_BINARY[val](a, b))
        else:
            stack.append(_UNARY[val](stack.pop()))
    (result,) = stack
    return result


# ---------------------------------------------------------------- records

@dataclass(frozen=True)
class OracleRecord:
    case: str
    inputs: object
    expected: object
    method: str


def _block_closed_form(eps):
    r = math.sqrt(1 + 4 * eps ** 2)
    return sorted([(3 - r) / 2, (3 + r) / 2, (9 - r) / 2, (9 + r) / 2])


RECORDS = {
    r.case: r
    for r in [
        OracleRecord("quadratic_2x2", [[1, 1], [1, 2]], sorted([(3 - 5 ** 0.5) / 2, (3 + 5 ** 0.5) / 2]),
                     "quadratic formula"),
        OracleRecord("hausdorff_15_24", ([1, 5], [2, 4]), 1.0, "4-pair enumeration"),
        OracleRecord("block_eps_half", 0.5, _block_closed_form(0.5), "closed form (3+-r)/2, (9+-r)/2"),
        OracleRecord("weyr_J3_J1", "J3(0)+J1(0)", {"weyr": [2, 1, 1], "blocks": [3, 1]},
                     "ranks of explicit nilpotent powers: 4, 2, 1, 0"),
        OracleRecord("jc_J3_2", "J3(2)", "D = 2I, N = superdiagonal", "explicit construction"),
        OracleRecord("exp_J2", "J2(lam)", "e^lam (I + N)", "Taylor series"),
        OracleRecord("square_J2", "J2(lam)", "lam^2 I + 2 lam N", "direct squaring"),
        OracleRecord("pole_J3", "J3(0)", 3, "closed-form resolvent sum_k N^k / z^(k+1)"),
        OracleRecord("exceptional_J3", "J3(0) + eps E31", 1 / 3, "roots of z^3 = eps"),
        OracleRecord("analytic_split", "diag(1,2) + eps (E12 + E21)", 2.0,
                     "closed-form 2x2: shift = (sqrt(1+4 eps^2) - 1)/2 ~ eps^2"),
        OracleRecord("two_pairs_attribution", "two_pairs fixture", {"IA": 4, "IB": 4}, "leave-one-out recomputation"),
    ]
}
