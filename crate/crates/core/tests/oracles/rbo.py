"""Standalone oracle: extrapolated rank-biased overlap by explicit term summation.

Evaluates the series term by term with exact rationals, then prints floats.
For uneven lists S (short, length s) and L (long, length l):

  RBO_ext = (1-p)/p * ( sum_{d=1..l} X_d/d p^d + sum_{d=s+1..l} X_s (d-s)/(s d) p^d )
            + ( (X_l - X_s)/l + X_s/s ) p^l

where X_d is the overlap of the depth-d prefixes (S truncated at s).
"""
from fractions import Fraction as F

def rbo_ext(a, b, p):
    p = F(p)
    S, L = (a, b) if len(a) <= len(b) else (b, a)
    s, l = len(S), len(L)
    X = [0] * (l + 1)
    for d in range(1, l + 1):
        X[d] = len(set(S[:min(d, s)]) & set(L[:d]))
    total = F(0)
    for d in range(1, l + 1):
        total += F(X[d], d) * p ** d
    for d in range(s + 1, l + 1):
        total += F(X[s] * (d - s), s * d) * p ** d
    return float((1 - p) / p * total + (F(X[l] - X[s], l) + F(X[s], s)) * p ** l)

cases = [
    ("abc", "acb", "0.9"),
    ("abcdefghij", "jihgfedcba", "0.9"),
    ("abcde", "abxyz", "0.9"),
    ("abcdefg", "bad", "0.8"),
    ("abcdefghij", "kxcnarvmwy", "0.95"),
]
for a, b, p in cases:
    print(a, b, p, repr(rbo_ext(list(a), list(b), F(p))))
