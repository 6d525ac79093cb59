"""Truncated power series with exact integer coefficients.

A series is a plain list ``c`` with ``c[i]`` the coefficient of q^i.  Products
go through Kronecker substitution: both factors are packed into a single
Python integer at a bit width wide enough for every product coefficient,
multiplied once, and unpacked from the byte string.
"""

from __future__ import annotations

import numpy as np

Series = list[int]


def mul_naive(a: Series, b: Series, n: int) -> Series:
    """Schoolbook product truncated to degree < n."""
    out = [0] * n
    for i, ai in enumerate(a[:n]):
        if ai:
            for j, bj in enumerate(b[: n - i]):
                out[i + j] += ai * bj
    return out


def _chunk_bytes(a: Series, b: Series, n: int) -> int:
    ma = max((abs(x) for x in a), default=0)
    mb = max((abs(x) for x in b), default=0)
    bits = ma.bit_length() + mb.bit_length() + n.bit_length() + 2
    return (bits + 7) // 8


def _pack(a: Series, n: int, width: int) -> int:
    half = 1 << (8 * width - 1)
    buf = b"".join((x + half).to_bytes(width, "little") for x in a[:n])
    pattern = int.from_bytes(half.to_bytes(width, "little") * min(len(a), n), "little")
    return int.from_bytes(buf, "little") - pattern


def _unpack(value: int, n: int, width: int) -> Series:
    half = 1 << (8 * width - 1)
    mask = (1 << (8 * width * n)) - 1
    pattern = int.from_bytes(half.to_bytes(width, "little") * n, "little")
    raw = ((value & mask) + pattern) & mask
    buf = raw.to_bytes(width * n, "little")
    return [int.from_bytes(buf[i * width : (i + 1) * width], "little") - half for i in range(n)]


def mul_trunc(a: Series, b: Series, n: int) -> Series:
    """Product of two series truncated to degree < n, by Kronecker substitution."""
    a, b = a[:n], b[:n]
    if not a or not b:
        return [0] * n
    width = _chunk_bytes(a, b, n)
    prod = _pack(a, n, width) * _pack(b, n, width)
    return _unpack(prod, n, width)


def pow_trunc(a: Series, e: int, n: int) -> Series:
    """a^e truncated to degree < n by binary powering."""
    result: Series = [1] + [0] * (n - 1)
    base = a[:n] + [0] * max(0, n - len(a))
    while e:
        if e & 1:
            result = mul_trunc(result, base, n)
        e >>= 1
        if e:
            base = mul_trunc(base, base, n)
    return result


def euler_product(n: int) -> Series:
    """prod_{m >= 1} (1 - q^m) to degree < n via the pentagonal number theorem."""
    out = [0] * n
    k = 0
    while True:
        hit = False
        for kk in ((k, -k) if k else (0,)):
            g = kk * (3 * kk - 1) // 2
            if g < n:
                out[g] = -1 if kk % 2 else 1
                hit = True
        if not hit:
            break
        k += 1
    return out


def eta_cubed(n: int) -> Series:
    """prod (1 - q^m)^3 = sum_k (-1)^k (2k + 1) q^{k(k+1)/2} (Jacobi)."""
    out = [0] * n
    k = 0
    while k * (k + 1) // 2 < n:
        out[k * (k + 1) // 2] = (-1) ** k * (2 * k + 1)
        k += 1
    return out


def divisor_power_sums(n: int, power: int) -> list[int]:
    """sigma_power(m) for 0 <= m < n (entry 0 is 0)."""
    sig = np.zeros(n, dtype=object)
    sig[:] = 0
    for d in range(1, n):
        sig[d::d] += d ** power
    return [int(s) for s in sig]


def eisenstein(weight: int, n: int) -> Series:
    """E_4 or E_6 with constant term 1, to degree < n."""
    consts = {4: 240, 6: -504}
    if weight not in consts:
        raise ValueError("only E_4 and E_6 are provided")
    sig = divisor_power_sums(n, weight - 1)
    return [1] + [consts[weight] * s for s in sig[1:]]


def delta_series(n: int) -> Series:
    """Delta = q prod (1 - q^m)^24 to degree < n."""
    if n <= 1:
        return [0] * n
    body = pow_trunc(euler_product(n - 1), 24, n - 1)
    return [0] + body
