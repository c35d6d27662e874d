"""Polynomial kernels shared by all scheme variants.

The write paths combine the per-bit updates of a subpacket into one symbol
per database (a Lagrange-style combination evaluated at that database's
constant); the read paths invert square systems whose rows mix reciprocal
terms ``1/(f_i - alpha_n)`` with plain powers of ``alpha_n``.

Verification deliberately uses two independent code paths: the residual
checks interpolate in Lagrange form, the decoder runs Gaussian elimination,
so a shared bug cannot vouch for itself.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError
from .field import PrimeField


def delta_tilde(field: PrimeField, deltas, fs) -> list[int]:
    """Per-bit rescaled updates: delta_i / prod_{j != i} (f_j - f_i)."""
    if len(deltas) != len(fs):
        raise DomainError("deltas and bit constants must have equal length")
    if len(set(fs)) != len(fs):
        raise DomainError("bit constants must be distinct")
    out = []
    for i, d in enumerate(deltas):
        denom = 1
        for j, fj in enumerate(fs):
            if j != i:
                denom = denom * (fj - fs[i]) % field.q
        out.append(field.div(d, denom))
    return out


def combine_update(field: PrimeField, deltas, fs, alpha: int, noise) -> int:
    """Single update symbol carrying all bits of one subpacket.

    ``sum_i dtilde_i prod_{j != i}(f_j - alpha) + prod_j(f_j - alpha) * z(alpha)``
    where ``z`` is a polynomial with the given noise coefficients.
    """
    if alpha in fs:
        raise DomainError("database constant collides with a bit constant")
    if len(noise) < 1:
        raise DomainError("at least one masking symbol is required")
    q = field.q
    dtil = delta_tilde(field, deltas, fs)
    acc = 0
    for i in range(len(fs)):
        term = dtil[i]
        for j, fj in enumerate(fs):
            if j != i:
                term = term * (fj - alpha) % q
        acc = (acc + term) % q
    full = 1
    for fj in fs:
        full = full * (fj - alpha) % q
    acc = (acc + full * field.poly_eval(noise, alpha)) % q
    return acc


def lagrange_interpolate(field: PrimeField, xs, ys) -> list[int]:
    """Coefficients (ascending powers) of the unique poly through the points."""
    if len(xs) != len(ys):
        raise DomainError("point count mismatch")
    if len(set(xs)) != len(xs):
        raise DomainError("interpolation nodes must be distinct")
    q = field.q
    n = len(xs)
    coeffs = [0] * n
    for i in range(n):
        # basis_i(x) = prod_{j != i} (x - x_j) / (x_i - x_j)
        basis = [1]
        denom = 1
        for j in range(n):
            if j == i:
                continue
            new = [0] * (len(basis) + 1)
            for k, c in enumerate(basis):
                new[k] = (new[k] - c * xs[j]) % q
                new[k + 1] = (new[k + 1] + c) % q
            basis = new
            denom = denom * (xs[i] - xs[j]) % q
        scale = field.div(ys[i], denom)
        for k, c in enumerate(basis):
            coeffs[k] = (coeffs[k] + scale * c) % q
    return coeffs


def poly_degree(coeffs) -> int:
    """Degree of a coefficient list; the zero polynomial reports -1."""
    for k in range(len(coeffs) - 1, -1, -1):
        if coeffs[k] != 0:
            return k
    return -1


@dataclass(frozen=True)
class ResidualCheck:
    """Outcome of a residual-degree verification.

    ``coeffs`` is kept so regressions can pin the exact residual, not just
    the boolean verdict.
    """

    ok: bool
    degree: int
    bound: int
    coeffs: tuple[int, ...]


def combined_update_residual(
    field: PrimeField,
    u_values,
    alphas,
    fs,
    k: int,
    expected_deltas,
    noise_terms: int,
) -> ResidualCheck:
    """Check the decomposition property of combined updates.

    For update symbols built with identical deltas/noise across databases,
    ``u_n / (f_k - alpha_n) - delta_k / (f_k - alpha_n)`` must be one
    polynomial in alpha of degree <= len(fs) + noise_terms - 2, the same for
    every database.  ``k`` is the 1-based bit index.
    """
    ell = len(fs)
    if not 1 <= k <= ell:
        raise DomainError(f"bit index {k} outside 1..{ell}")
    if len(u_values) != len(alphas):
        raise DomainError("one update symbol per database constant required")
    if len(alphas) < ell + noise_terms:
        raise DomainError(
            "insufficient evaluation points: "
            f"{len(alphas)} < {ell} + {noise_terms}"
        )
    q = field.q
    fk = fs[k - 1]
    dk = expected_deltas[k - 1]
    residuals = [
        (u - dk) * field.inv(fk - a) % q for u, a in zip(u_values, alphas)
    ]
    coeffs = lagrange_interpolate(field, alphas, residuals)
    degree = poly_degree(coeffs)
    bound = ell + noise_terms - 2
    return ResidualCheck(ok=degree <= bound, degree=degree, bound=bound, coeffs=tuple(coeffs))


def null_shaper_residual(field: PrimeField, skip_alphas, f_k: int, alphas) -> ResidualCheck:
    """Check the rescaling property of the null-shaper factor.

    ``(prod_r (a_r - alpha) / prod_r (a_r - f_k)) / (f_k - alpha)`` minus
    ``1/(f_k - alpha)`` must be a polynomial of degree <= |skip| - 1 across
    the evaluation points.
    """
    q = field.q
    if any((a - f_k) % q == 0 for a in skip_alphas):
        raise DomainError("bit constant collides with a skipped database constant")
    if f_k in alphas:
        raise DomainError("bit constant collides with an evaluation point")
    if len(alphas) < len(skip_alphas) + 1:
        raise DomainError("not enough evaluation points to bound the residual")
    denom = 1
    for a in skip_alphas:
        denom = denom * (a - f_k) % q
    residuals = []
    for x in alphas:
        num = 1
        for a in skip_alphas:
            num = num * (a - x) % q
        lhs = num * field.inv(denom) % q * field.inv(f_k - x) % q
        residuals.append((lhs - field.inv(f_k - x)) % q)
    coeffs = lagrange_interpolate(field, alphas, residuals)
    degree = poly_degree(coeffs)
    bound = len(skip_alphas) - 1
    return ResidualCheck(ok=degree <= bound, degree=degree, bound=bound, coeffs=tuple(coeffs))


@dataclass
class DecodeSystem:
    """Square exact linear system collecting one answer row per database."""

    rows: list[list[int]]
    rhs: list[int]


def decode_row(field: PrimeField, alpha: int, f_subset, power_count: int) -> list[int]:
    """One answer row: reciprocals of (f - alpha) then powers 0..power_count-1."""
    row = [field.inv((f - alpha) % field.q) for f in f_subset]
    p = 1
    for _ in range(power_count):
        row.append(p)
        p = p * alpha % field.q
    return row


def solve_decode(field: PrimeField, system: DecodeSystem) -> list[int]:
    """Gaussian elimination over the field; the caller reads off the leading
    entries as the decoded bits."""
    n = len(system.rows)
    if n == 0 or any(len(r) != n for r in system.rows) or len(system.rhs) != n:
        raise DomainError("decode system must be square with matching rhs")
    q = field.q
    a = [list(row) for row in system.rows]
    b = list(system.rhs)
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] % q != 0), None)
        if pivot is None:
            raise DomainError("singular decode system (check evaluation points)")
        a[col], a[pivot] = a[pivot], a[col]
        b[col], b[pivot] = b[pivot], b[col]
        inv = field.inv(a[col][col])
        a[col] = [v * inv % q for v in a[col]]
        b[col] = b[col] * inv % q
        for r in range(n):
            if r != col and a[r][col] % q != 0:
                factor = a[r][col]
                a[r] = [(v - factor * w) % q for v, w in zip(a[r], a[col])]
                b[r] = (b[r] - factor * b[col]) % q
    return b
